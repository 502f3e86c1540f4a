#pragma once

#include <iosfwd>

namespace nnose {

/// Parses argv and dispatches to the matching command. Returns the exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nnose
