#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "pdg/decomp.hpp"
#include "pdg/model.hpp"

namespace pdgcli {

struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A PDG plus an optional embedded tree decomposition (clusters by name).
struct PdgFile {
    pdg::PDG model;
    std::optional<pdg::TreeDecomposition> td;
};

// JSON text. cpd rows are keyed by the source assignment written as value
// labels joined with ',' in source order ("" for no sources); each row lists
// target-joint probabilities row-major. Unknown fields are rejected.
PdgFile parse_pdg(const std::string& text);
PdgFile read_pdg(const std::string& path);
std::string emit_pdg(const PdgFile& f);

// Row key for source assignment s of arc a.
std::string row_key(const pdg::PDG& m, std::size_t a, std::size_t s);

}  // namespace pdgcli
