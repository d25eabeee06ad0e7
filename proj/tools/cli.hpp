#pragma once

#include <iosfwd>

namespace lookde {

// Entry point behind the `lookde` binary, factored out so tests can invoke
// subcommands in-process. Diagnostics go to `err`. Exit codes: 0 success,
// 1 usage or I/O error, 2 a fit that did not converge, 3 a singular GMM
// covariance.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lookde
