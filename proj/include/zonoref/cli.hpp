#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace zonoref {

/// Entry point behind the zonoref binary; exposed so tests can drive the
/// CLI in-process. args excludes the program name. Returns the process exit
/// code: 0 for conclusive runs, 2 for usage, file, or parse errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace zonoref
