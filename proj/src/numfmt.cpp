#include "chase/numfmt.hpp"

#include <array>
#include <charconv>

namespace chase {

std::string format_real(double value) {
  std::array<char, 32> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

}  // namespace chase
