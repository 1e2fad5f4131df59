#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace entgame {

// Raised when a requested enumeration exceeds its configured size limit.
class EnumerationOverflow : public std::runtime_error {
 public:
  explicit EnumerationOverflow(const std::string& what)
      : std::runtime_error(what) {}
};

// Raised for malformed configuration or input files.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when a construction precondition does not hold.
class NotConstructible : public std::runtime_error {
 public:
  explicit NotConstructible(const std::string& what)
      : std::runtime_error(what) {}
};

struct Limits {
  std::uint64_t pmf_size = std::uint64_t{1} << 24;
  std::uint64_t exhaustive_maps = std::uint64_t{1} << 16;
  std::uint64_t exact_paths = std::uint64_t{1} << 20;
  std::uint64_t block_pairs = std::uint64_t{1} << 22;
};

// Returns base^exp, or limit + 1 when the result would exceed limit.
inline std::uint64_t checked_pow(std::uint64_t base, std::uint64_t exp,
                                 std::uint64_t limit) {
  std::uint64_t r = 1;
  for (std::uint64_t i = 0; i < exp; ++i) {
    if (base != 0 && r > limit / base) return limit + 1;
    r *= base;
  }
  return r;
}

}  // namespace entgame
