#pragma once

#include <ostream>

namespace nvsim {

// Entry point of the `nvsim` tool. Returns 0 on success, 1 for usage and
// input errors, 2 for numerical failures.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nvsim
