#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "pdg/model.hpp"

namespace fx {

inline pdg::Variable bin(const std::string& name) { return {name, {"0", "1"}}; }

inline pdg::Hyperarc arc(std::string id, std::vector<std::string> s, std::vector<std::string> t,
                         std::vector<std::vector<double>> cpd, double alpha = 1.0, double beta = 1.0) {
    return {std::move(id), std::move(s), std::move(t), std::move(cpd), alpha, beta};
}

// two opinions on one binary X: p(X=1) = 0.2 and 0.8
inline pdg::PDG conflict() {
    pdg::PDG m;
    m.variables = {bin("X")};
    m.arcs = {arc("p", {}, {"X"}, {{0.8, 0.2}}), arc("q", {}, {"X"}, {{0.2, 0.8}})};
    return m;
}

// X -> Y, p(X=1) = 0.3, p(Y=1|X) = 0.1 / 0.9
inline pdg::PDG bn_chain() {
    pdg::PDG m;
    m.variables = {bin("X"), bin("Y")};
    m.arcs = {arc("px", {}, {"X"}, {{0.7, 0.3}}), arc("py", {"X"}, {"Y"}, {{0.9, 0.1}, {0.1, 0.9}})};
    return m;
}

inline double tv(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return 0.5 * s;
}

}  // namespace fx
