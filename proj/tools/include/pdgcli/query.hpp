#pragma once

#include <string>

#include "pdg/engine.hpp"

namespace pdgcli {

struct Query {
    pdg::Event target;
    pdg::Event given;  // empty for a marginal query
};

// Var=val[,Var=val...][|Var=val[,...]]
Query parse_query(const std::string& text);
std::string to_string(const Query& q);

}  // namespace pdgcli
