#include "pdg/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace pdg {

int PDG::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < variables.size(); ++i)
        if (variables[i].name == name) return static_cast<int>(i);
    return -1;
}

int PDG::value_index(int var, const std::string& value) const {
    const auto& vals = variables.at(var).values;
    for (std::size_t i = 0; i < vals.size(); ++i)
        if (vals[i] == value) return static_cast<int>(i);
    return -1;
}

std::vector<int> PDG::indices(const std::vector<std::string>& names) const {
    std::vector<int> out;
    out.reserve(names.size());
    for (const auto& n : names) {
        int i = index_of(n);
        if (i < 0) throw DomainError("unknown variable '" + n + "'");
        out.push_back(i);
    }
    return out;
}

std::vector<int> PDG::scope_of(std::size_t a) const {
    auto s = sources_of(a);
    auto t = targets_of(a);
    s.insert(s.end(), t.begin(), t.end());
    return s;
}

std::vector<std::size_t> PDG::cards() const {
    std::vector<std::size_t> c;
    for (const auto& v : variables) c.push_back(v.values.size());
    return c;
}

std::size_t PDG::world_count() const {
    std::size_t n = 1;
    for (const auto& v : variables) {
        std::size_t k = v.values.size();
        if (k != 0 && n > std::numeric_limits<std::size_t>::max() / k)
            return std::numeric_limits<std::size_t>::max();
        n *= k;
    }
    return n;
}

Domain::Domain(std::vector<int> vars, const std::vector<std::size_t>& all_cards)
    : vars_(std::move(vars)) {
    cards_.resize(vars_.size());
    strides_.resize(vars_.size());
    size_ = 1;
    for (std::size_t i = vars_.size(); i-- > 0;) {
        cards_[i] = all_cards.at(vars_[i]);
        strides_[i] = size_;
        size_ *= cards_[i];
    }
}

std::size_t Domain::encode(const std::vector<int>& vals) const {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < vars_.size(); ++i) idx += strides_[i] * vals[i];
    return idx;
}

std::vector<int> Domain::decode(std::size_t idx) const {
    std::vector<int> vals(vars_.size());
    for (std::size_t i = 0; i < vars_.size(); ++i) {
        vals[i] = static_cast<int>(idx / strides_[i]);
        idx %= strides_[i];
    }
    return vals;
}

std::size_t Domain::project(const std::vector<int>& full) const {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < vars_.size(); ++i) idx += strides_[i] * full[vars_[i]];
    return idx;
}

int Domain::position(int var) const {
    auto it = std::find(vars_.begin(), vars_.end(), var);
    return it == vars_.end() ? -1 : static_cast<int>(it - vars_.begin());
}

JointDistribution::JointDistribution(std::vector<std::string> names,
                                     std::vector<std::size_t> cards,
                                     std::vector<double> probs)
    : names_(std::move(names)), cards_(std::move(cards)), probs_(std::move(probs)) {
    std::size_t n = 1;
    for (auto c : cards_) n *= c;
    if (names_.size() != cards_.size() || n != probs_.size())
        throw DomainError("joint distribution shape mismatch");
}

JointDistribution JointDistribution::uniform(const PDG& m) {
    std::size_t n = m.world_count();
    return over(m, std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

JointDistribution JointDistribution::over(const PDG& m, std::vector<double> probs) {
    std::vector<std::string> names;
    for (const auto& v : m.variables) names.push_back(v.name);
    return JointDistribution(std::move(names), m.cards(), std::move(probs));
}

namespace {

std::vector<int> positions(const std::vector<std::string>& names,
                           const std::vector<std::string>& wanted) {
    std::vector<int> out;
    for (const auto& w : wanted) {
        auto it = std::find(names.begin(), names.end(), w);
        if (it == names.end()) throw DomainError("variable '" + w + "' not in distribution");
        out.push_back(static_cast<int>(it - names.begin()));
    }
    return out;
}

double plogp(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

}  // namespace

JointDistribution JointDistribution::marginal(const std::vector<std::string>& vars) const {
    auto pos = positions(names_, vars);
    std::vector<int> all(names_.size());
    std::iota(all.begin(), all.end(), 0);
    Domain whole(all, cards_);
    Domain sub(pos, cards_);
    std::vector<double> out(sub.size(), 0.0);
    for (std::size_t w = 0; w < probs_.size(); ++w)
        out[sub.project(whole.decode(w))] += probs_[w];
    std::vector<std::size_t> sc(sub.cards());
    return JointDistribution(vars, sc, std::move(out));
}

std::vector<std::vector<double>> JointDistribution::conditional(
    const std::vector<std::string>& given, const std::vector<std::string>& of) const {
    std::vector<std::string> both = given;
    both.insert(both.end(), of.begin(), of.end());
    auto m = marginal(both);
    std::size_t ny = 1;
    for (std::size_t i = given.size(); i < both.size(); ++i) ny *= m.cards()[i];
    std::size_t nx = m.size() / ny;
    std::vector<std::vector<double>> out(nx, std::vector<double>(ny));
    for (std::size_t x = 0; x < nx; ++x) {
        double z = 0.0;
        for (std::size_t y = 0; y < ny; ++y) z += m[x * ny + y];
        for (std::size_t y = 0; y < ny; ++y)
            out[x][y] = z > 0.0 ? m[x * ny + y] / z : 1.0 / static_cast<double>(ny);
    }
    return out;
}

double JointDistribution::entropy() const {
    double h = 0.0;
    for (double p : probs_) h -= plogp(p);
    return h;
}

double JointDistribution::prob(const std::vector<std::pair<std::string, int>>& event) const {
    std::vector<std::string> vars;
    for (const auto& e : event) vars.push_back(e.first);
    auto pos = positions(names_, vars);
    std::vector<int> all(names_.size());
    std::iota(all.begin(), all.end(), 0);
    Domain whole(all, cards_);
    double total = 0.0;
    for (std::size_t w = 0; w < probs_.size(); ++w) {
        auto vals = whole.decode(w);
        bool match = true;
        for (std::size_t i = 0; i < pos.size() && match; ++i)
            match = vals[pos[i]] == event[i].second;
        if (match) total += probs_[w];
    }
    return total;
}

GammaSpec GammaSpec::positive(double g) {
    if (!(g > 0.0) || !std::isfinite(g)) throw DomainError("gamma must be a positive finite real");
    return {Kind::positive, g};
}

std::string GammaSpec::str() const {
    switch (kind) {
        case Kind::zero: return "0";
        case Kind::zero_plus: return "0+";
        default: {
            std::ostringstream os;
            os.precision(17);
            os << gamma;
            return os.str();
        }
    }
}

namespace {

void check_support(const PDG& m, const JointDistribution& mu) {
    if (mu.names().size() != m.variables.size())
        throw DomainError("distribution and PDG have different variables");
    for (std::size_t i = 0; i < m.variables.size(); ++i)
        if (mu.names()[i] != m.variables[i].name || mu.cards()[i] != m.card(static_cast<int>(i)))
            throw DomainError("distribution and PDG have different variables");
}

// Marginal of mu over (sources, targets) of arc a, flattened as [s * nt + t].
struct ArcMarginal {
    std::vector<double> st;
    std::vector<double> s;
    std::size_t nt = 1;
};

ArcMarginal arc_marginal(const PDG& m, const JointDistribution& mu, std::size_t a) {
    const auto& arc = m.arcs[a];
    std::vector<std::string> both = arc.sources;
    both.insert(both.end(), arc.targets.begin(), arc.targets.end());
    auto mj = mu.marginal(both);
    ArcMarginal out;
    for (const auto& t : arc.targets) out.nt *= m.card(m.index_of(t));
    out.st = mj.probs();
    std::size_t ns = out.st.size() / out.nt;
    out.s.assign(ns, 0.0);
    for (std::size_t s = 0; s < ns; ++s)
        for (std::size_t t = 0; t < out.nt; ++t) out.s[s] += out.st[s * out.nt + t];
    return out;
}

double cond_entropy(const ArcMarginal& am) {
    double h = 0.0;
    for (double p : am.st) h -= plogp(p);
    for (double p : am.s) h += plogp(p);
    return h;
}

}  // namespace

double conditional_entropy(const PDG& m, const JointDistribution& mu, std::size_t a) {
    check_support(m, mu);
    return cond_entropy(arc_marginal(m, mu, a));
}

double oinc(const PDG& m, const JointDistribution& mu) {
    check_support(m, mu);
    double total = 0.0;
    for (std::size_t a = 0; a < m.arcs.size(); ++a) {
        const auto& arc = m.arcs[a];
        if (arc.beta == 0.0) continue;
        auto am = arc_marginal(m, mu, a);
        double kl = 0.0;
        for (std::size_t s = 0; s < am.s.size(); ++s)
            for (std::size_t t = 0; t < am.nt; ++t) {
                double q = am.st[s * am.nt + t];
                if (q <= 0.0) continue;
                double p = arc.cpd[s][t];
                if (p <= 0.0) return kInf;
                kl += q * std::log(q / (p * am.s[s]));
            }
        total += arc.beta * kl;
    }
    return total;
}

double sinc(const PDG& m, const JointDistribution& mu) {
    check_support(m, mu);
    double total = -mu.entropy();
    for (std::size_t a = 0; a < m.arcs.size(); ++a) {
        if (m.arcs[a].alpha == 0.0) continue;
        total += m.arcs[a].alpha * cond_entropy(arc_marginal(m, mu, a));
    }
    return total;
}

double score_gamma(const PDG& m, const JointDistribution& mu, double gamma) {
    double o = oinc(m, mu);
    if (std::isinf(o)) return o;
    return gamma == 0.0 ? o : o + gamma * sinc(m, mu);
}

double score_gamma_regrouped(const PDG& m, const JointDistribution& mu, double gamma) {
    check_support(m, mu);
    double total = -gamma * mu.entropy();
    for (std::size_t a = 0; a < m.arcs.size(); ++a) {
        const auto& arc = m.arcs[a];
        auto am = arc_marginal(m, mu, a);
        if (arc.beta != 0.0) {
            double elogp = 0.0;
            for (std::size_t s = 0; s < am.s.size(); ++s)
                for (std::size_t t = 0; t < am.nt; ++t) {
                    double q = am.st[s * am.nt + t];
                    if (q <= 0.0) continue;
                    double p = arc.cpd[s][t];
                    if (p <= 0.0) return kInf;
                    elogp += q * std::log(p);
                }
            total -= arc.beta * elogp;
        }
        double w = gamma * arc.alpha - arc.beta;
        if (w != 0.0) total += w * cond_entropy(am);
    }
    return total;
}

bool ValidationReport::has(const std::string& code) const {
    return std::any_of(violations.begin(), violations.end(),
                       [&](const Violation& v) { return v.code == code; });
}

bool ValidationReport::structurally_valid() const {
    return std::all_of(violations.begin(), violations.end(), [](const Violation& v) {
        return v.code == "not-proper" || v.code == "width-exceeded";
    });
}

ValidationReport validate(const PDG& m, int width_bound) {
    ValidationReport r;
    auto add = [&](std::string code, std::string where, std::string detail) {
        r.violations.push_back({std::move(code), std::move(where), std::move(detail)});
    };
    std::set<std::string> names;
    for (const auto& v : m.variables) {
        if (v.name.empty()) add("empty-name", "variable", "");
        if (!names.insert(v.name).second) add("duplicate-variable", v.name, "");
        if (v.values.empty()) add("empty-domain", v.name, "");
        std::set<std::string> vals(v.values.begin(), v.values.end());
        if (vals.size() != v.values.size()) add("duplicate-value", v.name, "");
    }
    std::set<std::string> ids;
    for (const auto& arc : m.arcs) {
        if (!ids.insert(arc.id).second) add("duplicate-arc", arc.id, "");
        bool refs_ok = true;
        std::set<std::string> seen;
        for (const auto& s : arc.sources) {
            if (m.index_of(s) < 0) { add("unknown-variable", arc.id, s); refs_ok = false; }
            if (!seen.insert(s).second) add("repeated-variable", arc.id, s);
        }
        for (const auto& t : arc.targets) {
            if (m.index_of(t) < 0) { add("unknown-variable", arc.id, t); refs_ok = false; }
            if (!seen.insert(t).second) add("source-target-overlap", arc.id, t);
        }
        if (arc.targets.empty()) add("no-targets", arc.id, "");
        if (std::isnan(arc.alpha) || std::isinf(arc.alpha)) add("bad-alpha", arc.id, "");
        if (std::isnan(arc.beta) || arc.beta < 0.0) add("bad-beta", arc.id, "");
        if (std::isinf(arc.beta) && arc.beta > 0.0) add("infinite-beta", arc.id, "");
        if (arc.alpha > 0.0 && !(arc.beta > 0.0)) add("not-proper", arc.id, "alpha > 0 with beta = 0");
        if (arc.beta < 0.0) add("not-proper", arc.id, "negative beta");
        if (!refs_ok) continue;
        std::size_t ns = 1, nt = 1;
        for (const auto& s : arc.sources) ns *= m.card(m.index_of(s));
        for (const auto& t : arc.targets) nt *= m.card(m.index_of(t));
        if (arc.cpd.size() != ns) {
            add("cpd-shape", arc.id, "expected " + std::to_string(ns) + " rows");
            continue;
        }
        for (std::size_t s = 0; s < ns; ++s) {
            const auto& row = arc.cpd[s];
            if (row.size() != nt) {
                add("cpd-shape", arc.id, "row " + std::to_string(s));
                continue;
            }
            double sum = 0.0;
            bool neg = false;
            for (double p : row) {
                if (!(p >= 0.0) || std::isinf(p)) neg = true;
                sum += p;
            }
            if (neg) add("cpd-negative", arc.id, "row " + std::to_string(s));
            else if (std::abs(sum - 1.0) > kCpdTolerance)
                add("cpd-not-normalized", arc.id, "row " + std::to_string(s));
        }
        if (width_bound >= 0 &&
            static_cast<int>(arc.sources.size() + arc.targets.size()) - 1 > width_bound)
            add("width-exceeded", arc.id, "");
    }
    return r;
}

bool is_proper(const PDG& m) {
    return std::all_of(m.arcs.begin(), m.arcs.end(), [](const Hyperarc& a) {
        return a.beta >= 0.0 && (a.alpha <= 0.0 || a.beta > 0.0);
    });
}

PDG checked(PDG m) {
    auto r = validate(m);
    for (const auto& v : r.violations) {
        if (v.code == "not-proper" || v.code == "width-exceeded") continue;
        throw DomainError(v.code + ": " + v.where + (v.detail.empty() ? "" : " (" + v.detail + ")"));
    }
    for (auto& arc : m.arcs)
        for (auto& row : arc.cpd) {
            double sum = std::accumulate(row.begin(), row.end(), 0.0);
            for (double& p : row) p /= sum;
        }
    return m;
}

}  // namespace pdg
