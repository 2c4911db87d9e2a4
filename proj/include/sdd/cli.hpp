#pragma once

#include <iostream>

namespace sdd {

/// Entry point of the `sddlab` tool. Failures print one line
/// `error: <code>: <message>` to `err` and return nonzero.
int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr);

}  // namespace sdd
