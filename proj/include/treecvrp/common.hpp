#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace treecvrp {

using Vertex = std::int32_t;
inline constexpr Vertex kNoVertex = -1;

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Instance/solution document rejected (bad JSON, bad schema, not a tree, ...).
struct ParseError : Error {
  using Error::Error;
};

/// A tour set failed its 3*cost <= 4*delta_lb check. Indicates an
/// implementation bug; never silently ignored.
struct CertificateViolation : Error {
  using Error::Error;
};

/// A structural guarantee the solver relies on did not hold (case coverage,
/// cascade shape, roster conservation, ...). Always a bug.
struct InternalError : Error {
  using Error::Error;
};

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) {
  return (a + b - 1) / b;  // a >= 0, b >= 1
}

/// Deterministic 64-bit RNG (splitmix64). Used instead of <random>
/// distributions so generated instances are byte-identical everywhere.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform integer in [lo, hi], inclusive. Requires lo <= hi.
  std::int64_t range(std::int64_t lo, std::int64_t hi) {
    std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    // Rejection sampling keeps the draw unbiased and reproducible.
    std::uint64_t limit = ~0ULL - ~0ULL % span;
    std::uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return lo + static_cast<std::int64_t>(x % span);
  }

  /// Bernoulli with probability num/den.
  bool chance(std::int64_t num, std::int64_t den) { return range(1, den) <= num; }

 private:
  std::uint64_t state_;
};

}  // namespace treecvrp
