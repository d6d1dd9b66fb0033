#pragma once

#include <iosfwd>

namespace cenic {

// Runs one `cenic <subcommand> ...` invocation. Returns 0 on success, 1 on a
// usage error (help text on `err`), 2 when the command itself fails.
int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cenic
