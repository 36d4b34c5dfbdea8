#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace zerosyl::cli {

/// Runs one `zerosyl` invocation; args excludes the program name.
/// Returns the process exit code. Reports go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace zerosyl::cli
