#pragma once

#include <iosfwd>

namespace qim {

/// Entry point of the `qim` tool. Returns 0 on success, 2 on usage errors
/// and 1 on any other failure (with a one-line diagnostic on `err`).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace qim
