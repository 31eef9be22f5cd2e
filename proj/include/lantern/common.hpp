#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

namespace lantern {

// Engine-wide numeric type for parameters, gradients and tests. The batched
// compute pipeline is additionally instantiated for float32 behind the
// training/benchmark precision flag.
using real = double;

namespace detail {
inline void format_into(std::ostringstream&) {}
template <class T, class... Rest>
void format_into(std::ostringstream& os, const T& v, const Rest&... rest) {
  os << v;
  format_into(os, rest...);
}
}  // namespace detail

template <class... Args>
std::string cat(const Args&... args) {
  std::ostringstream os;
  os.precision(17);
  detail::format_into(os, args...);
  return os.str();
}

// Invalid arguments, broken preconditions, malformed files.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Failures encountered mid-computation (non-finite values, I/O errors).
class EngineError : public std::runtime_error {
 public:
  explicit EngineError(const std::string& msg) : std::runtime_error(msg) {}
};

#define LANTERN_CHECK(cond, ...)                                  \
  do {                                                            \
    if (!(cond)) throw ::lantern::ValidationError(::lantern::cat(__VA_ARGS__)); \
  } while (0)

#define LANTERN_REQUIRE(cond, ...)                                \
  do {                                                            \
    if (!(cond)) throw ::lantern::EngineError(::lantern::cat(__VA_ARGS__)); \
  } while (0)

inline bool is_finite(double v) { return std::isfinite(v); }

}  // namespace lantern
