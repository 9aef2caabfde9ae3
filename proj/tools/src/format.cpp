#include "pdgcli/format.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace pdgcli {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void only_fields(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw FormatError(where + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) throw FormatError(where + ": unknown field '" + it.key() + "'");
}

const json& field(const json& j, const std::string& key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) throw FormatError(where + ": missing field '" + key + "'");
    return *it;
}

std::vector<std::string> names(const json& j, const std::string& where) {
    if (!j.is_array()) throw FormatError(where + ": expected an array of names");
    std::vector<std::string> out;
    for (const auto& e : j) {
        if (!e.is_string()) throw FormatError(where + ": expected a string");
        out.push_back(e.get<std::string>());
    }
    return out;
}

double weight(const json& j, const std::string& where) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string() && j.get<std::string>() == "inf") return pdg::kInf;
    throw FormatError(where + ": expected a number or \"inf\"");
}

ordered_json weight_json(double w) {
    if (std::isinf(w) && w > 0) return "inf";
    return w;
}

void check_label(const std::string& s, const std::string& where) {
    if (s.empty() || s.find_first_of(",|=") != std::string::npos)
        throw FormatError(where + ": name '" + s + "' must be nonempty and free of ',', '|' and '='");
}

std::size_t joint_size(const pdg::PDG& m, const std::vector<std::string>& vars, const std::string& where) {
    std::size_t n = 1;
    for (const auto& v : vars) {
        int i = m.index_of(v);
        if (i < 0) throw FormatError(where + ": unknown variable '" + v + "'");
        n *= m.card(i);
    }
    return n;
}

}  // namespace

std::string row_key(const pdg::PDG& m, std::size_t a, std::size_t s) {
    auto src = m.sources_of(a);
    pdg::Domain d(src, m.cards());
    auto vals = d.decode(s);
    std::string key;
    for (std::size_t i = 0; i < src.size(); ++i) {
        if (i) key += ',';
        key += m.variables[static_cast<std::size_t>(src[i])].values[static_cast<std::size_t>(vals[i])];
    }
    return key;
}

PdgFile parse_pdg(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("malformed JSON: ") + e.what());
    }
    only_fields(j, {"variables", "arcs", "decomposition"}, "document");
    PdgFile f;
    auto& m = f.model;
    const auto& vars = field(j, "variables", "document");
    if (!vars.is_array()) throw FormatError("variables: expected an array");
    for (std::size_t i = 0; i < vars.size(); ++i) {
        std::string where = "variables[" + std::to_string(i) + "]";
        only_fields(vars[i], {"name", "values"}, where);
        const auto& nm = field(vars[i], "name", where);
        if (!nm.is_string()) throw FormatError(where + ": name must be a string");
        pdg::Variable v{nm.get<std::string>(), names(field(vars[i], "values", where), where + ".values")};
        check_label(v.name, where);
        for (const auto& x : v.values) check_label(x, where);
        m.variables.push_back(std::move(v));
    }
    const auto& arcs = field(j, "arcs", "document");
    if (!arcs.is_array()) throw FormatError("arcs: expected an array");
    for (std::size_t i = 0; i < arcs.size(); ++i) {
        std::string where = "arcs[" + std::to_string(i) + "]";
        only_fields(arcs[i], {"id", "sources", "targets", "cpd", "alpha", "beta"}, where);
        pdg::Hyperarc a;
        const auto& id = field(arcs[i], "id", where);
        if (!id.is_string()) throw FormatError(where + ": id must be a string");
        a.id = id.get<std::string>();
        where = "arc '" + a.id + "'";
        a.sources = names(field(arcs[i], "sources", where), where + ".sources");
        a.targets = names(field(arcs[i], "targets", where), where + ".targets");
        a.alpha = weight(field(arcs[i], "alpha", where), where + ".alpha");
        a.beta = weight(field(arcs[i], "beta", where), where + ".beta");
        std::size_t ns = joint_size(m, a.sources, where);
        std::size_t nt = joint_size(m, a.targets, where);
        m.arcs.push_back(a);
        const auto& cpd = field(arcs[i], "cpd", where);
        if (!cpd.is_object()) throw FormatError(where + ".cpd: expected an object keyed by source assignment");
        std::size_t idx = m.arcs.size() - 1;
        std::vector<std::vector<double>> rows(ns);
        for (std::size_t s = 0; s < ns; ++s) {
            auto key = row_key(m, idx, s);
            auto it = cpd.find(key);
            if (it == cpd.end()) throw FormatError(where + ".cpd: missing row '" + key + "'");
            if (!it->is_array() || it->size() != nt)
                throw FormatError(where + ".cpd['" + key + "']: expected " + std::to_string(nt) + " numbers");
            for (const auto& x : *it) {
                if (!x.is_number()) throw FormatError(where + ".cpd['" + key + "']: expected numbers");
                rows[s].push_back(x.get<double>());
            }
        }
        if (cpd.size() != ns) throw FormatError(where + ".cpd: rows keyed by unknown source assignments");
        m.arcs[idx].cpd = std::move(rows);
    }
    if (auto it = j.find("decomposition"); it != j.end()) {
        only_fields(*it, {"clusters", "edges"}, "decomposition");
        pdg::TreeDecomposition td;
        const auto& cl = field(*it, "clusters", "decomposition");
        if (!cl.is_array()) throw FormatError("decomposition.clusters: expected an array");
        for (const auto& c : cl) {
            std::vector<int> ids;
            for (const auto& n : names(c, "decomposition.clusters")) {
                int v = m.index_of(n);
                if (v < 0) throw FormatError("decomposition: unknown variable '" + n + "'");
                ids.push_back(v);
            }
            std::sort(ids.begin(), ids.end());
            td.clusters.push_back(std::move(ids));
        }
        const auto& ed = field(*it, "edges", "decomposition");
        if (!ed.is_array()) throw FormatError("decomposition.edges: expected an array");
        for (const auto& e : ed) {
            if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
                throw FormatError("decomposition.edges: expected index pairs");
            td.edges.emplace_back(e[0].get<int>(), e[1].get<int>());
        }
        f.td = std::move(td);
    }
    return f;
}

PdgFile read_pdg(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_pdg(ss.str());
}

std::string emit_pdg(const PdgFile& f) {
    const auto& m = f.model;
    ordered_json j;
    j["variables"] = ordered_json::array();
    for (const auto& v : m.variables) j["variables"].push_back({{"name", v.name}, {"values", v.values}});
    j["arcs"] = ordered_json::array();
    for (std::size_t a = 0; a < m.arcs.size(); ++a) {
        const auto& arc = m.arcs[a];
        ordered_json rows = ordered_json::object();
        for (std::size_t s = 0; s < arc.cpd.size(); ++s) rows[row_key(m, a, s)] = arc.cpd[s];
        ordered_json ja;
        ja["id"] = arc.id;
        ja["sources"] = arc.sources;
        ja["targets"] = arc.targets;
        ja["cpd"] = rows;
        ja["alpha"] = weight_json(arc.alpha);
        ja["beta"] = weight_json(arc.beta);
        j["arcs"].push_back(ja);
    }
    if (f.td) {
        ordered_json cl = ordered_json::array();
        for (const auto& c : f.td->clusters) {
            ordered_json names = ordered_json::array();
            for (int v : c) names.push_back(m.variables[static_cast<std::size_t>(v)].name);
            cl.push_back(names);
        }
        ordered_json ed = ordered_json::array();
        for (auto [x, y] : f.td->edges) ed.push_back({x, y});
        j["decomposition"] = {{"clusters", cl}, {"edges", ed}};
    }
    return j.dump(2) + "\n";
}

}  // namespace pdgcli
