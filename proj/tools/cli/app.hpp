#pragma once

#include <iosfwd>

namespace phlab::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kModelError = 3, kRuntimeError = 4 };

/// Entry point shared by the binary and the tests. The report JSON goes to
/// `out`; diagnostics and wall time go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace phlab::cli
