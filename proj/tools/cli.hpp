#pragma once

#include <iosfwd>

namespace chase::cli {

// Exit codes: 0 success, 2 input/validation error, 3 simulation error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitSimulation = 3;

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace chase::cli
