#pragma once

#include <iosfwd>

namespace pdgcli {

// usage errors count as input errors
enum Exit { ok = 0, input_error = 2, solver_failure = 3, unsupported = 4 };

int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace pdgcli
