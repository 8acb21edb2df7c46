#pragma once

#include <iosfwd>

namespace wdur {

/// Entry point for the wdur tool. Subcommands: train, ur, eval, dwt, selftest, gendata.
/// Returns 0 on success, 2 on usage errors and 1 on any other failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace wdur
