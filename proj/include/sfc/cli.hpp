#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace sfc {

inline constexpr const char* kVersion = "0.1.0";

// Runs one command line (without the program name). Reports are written to
// `out` as one JSON object per line; diagnostics go to `err`. Returns the
// process exit code: 0 only if every per-scan record succeeded.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sfc
