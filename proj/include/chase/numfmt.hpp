#pragma once

#include <string>

namespace chase {

// Shortest decimal form that parses back to the identical double.
std::string format_real(double value);

}  // namespace chase
