#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace pdg {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Variable {
    std::string name;
    std::vector<std::string> values;
};

// cpd[s][t]: s indexes joint source values, t joint target values, both
// row-major in the declared order of sources / targets.
struct Hyperarc {
    std::string id;
    std::vector<std::string> sources;
    std::vector<std::string> targets;
    std::vector<std::vector<double>> cpd;
    double alpha = 1.0;
    double beta = 1.0;
};

struct PDG {
    std::vector<Variable> variables;
    std::vector<Hyperarc> arcs;

    int index_of(const std::string& name) const;     // -1 if absent
    int value_index(int var, const std::string& value) const;
    std::size_t card(int var) const { return variables[var].values.size(); }
    std::vector<int> indices(const std::vector<std::string>& names) const;
    std::vector<int> sources_of(std::size_t a) const { return indices(arcs[a].sources); }
    std::vector<int> targets_of(std::size_t a) const { return indices(arcs[a].targets); }
    std::vector<int> scope_of(std::size_t a) const;  // sources then targets
    std::vector<std::size_t> cards() const;
    std::size_t world_count() const;                 // saturates at SIZE_MAX
};

// Mixed-radix indexing over a list of variables. The last variable varies
// fastest, so enumeration is row-major in the given order.
class Domain {
public:
    Domain() = default;
    Domain(std::vector<int> vars, const std::vector<std::size_t>& all_cards);

    const std::vector<int>& vars() const { return vars_; }
    const std::vector<std::size_t>& cards() const { return cards_; }
    std::size_t size() const { return size_; }
    std::size_t encode(const std::vector<int>& vals) const;
    std::vector<int> decode(std::size_t idx) const;
    // index of the restriction of a full assignment (indexed by variable id)
    std::size_t project(const std::vector<int>& full) const;
    int position(int var) const;  // -1 if absent

private:
    std::vector<int> vars_;
    std::vector<std::size_t> cards_;
    std::vector<std::size_t> strides_;
    std::size_t size_ = 1;
};

class JointDistribution {
public:
    JointDistribution() = default;
    JointDistribution(std::vector<std::string> names, std::vector<std::size_t> cards,
                      std::vector<double> probs);
    static JointDistribution uniform(const PDG& m);
    static JointDistribution over(const PDG& m, std::vector<double> probs);

    const std::vector<std::string>& names() const { return names_; }
    const std::vector<std::size_t>& cards() const { return cards_; }
    const std::vector<double>& probs() const { return probs_; }
    std::size_t size() const { return probs_.size(); }
    double operator[](std::size_t i) const { return probs_[i]; }

    // Marginal over the given variables (in that order).
    JointDistribution marginal(const std::vector<std::string>& vars) const;
    // Conditional table cond[x][y] = mu(y | x); rows with mu(x)=0 are uniform.
    std::vector<std::vector<double>> conditional(const std::vector<std::string>& given,
                                                 const std::vector<std::string>& of) const;
    double entropy() const;
    // Probability of a partial assignment given as (variable, value-index) pairs.
    double prob(const std::vector<std::pair<std::string, int>>& event) const;

private:
    std::vector<std::string> names_;
    std::vector<std::size_t> cards_;
    std::vector<double> probs_;
};

struct GammaSpec {
    enum class Kind { zero, positive, zero_plus };
    Kind kind = Kind::zero;
    double gamma = 0.0;

    static GammaSpec zero() { return {Kind::zero, 0.0}; }
    static GammaSpec zero_plus() { return {Kind::zero_plus, 0.0}; }
    static GammaSpec positive(double g);
    double value() const { return kind == Kind::positive ? gamma : 0.0; }
    std::string str() const;
};

double oinc(const PDG& m, const JointDistribution& mu);
double sinc(const PDG& m, const JointDistribution& mu);
double score_gamma(const PDG& m, const JointDistribution& mu, double gamma);
// Same value through the regrouped form
//   -g H(mu) - sum b E log p + sum (g a - b) H(T|S).
double score_gamma_regrouped(const PDG& m, const JointDistribution& mu, double gamma);

// H_mu(T_a | S_a) for one arc.
double conditional_entropy(const PDG& m, const JointDistribution& mu, std::size_t arc);

struct Violation {
    std::string code;  // e.g. "cpd-not-normalized", "not-proper"
    std::string where;
    std::string detail;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
    bool has(const std::string& code) const;
    // true if only advisory findings (not-proper, width) were raised
    bool structurally_valid() const;
};

// width_bound < 0 disables the width check.
ValidationReport validate(const PDG& m, int width_bound = -1);

bool is_proper(const PDG& m);

// Validates, renormalizes cpd rows within 1e-12 and throws DomainError on any
// structural violation.
PDG checked(PDG m);

constexpr double kCpdTolerance = 1e-12;

}  // namespace pdg
