#pragma once
// Shared basics: error types, deterministic RNG, small numeric helpers.

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace kummer {

using Real = double;
using Complex = std::complex<double>;

inline constexpr Real kPi = 3.14159265358979323846264338327950288;

// ---------------------------------------------------------------------------
// Error hierarchy. Every throw carries a human-readable message with the
// offending values; callers (CLI) map these to nonzero exit codes.
// ---------------------------------------------------------------------------
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};
struct ConfigError : Error {
  using Error::Error;
};
struct ShapeError : Error {
  using Error::Error;
};
struct DomainError : Error {
  using Error::Error;
};
struct AliasingError : Error {
  using Error::Error;
};
struct SolverError : Error {
  using Error::Error;
};
struct PositivityError : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Deterministic RNG: mt19937_64 with explicit value derivations so streams
// are identical across platforms/libstdc++ versions.
// ---------------------------------------------------------------------------
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // Uniform in [0, 1).
  Real uniform() {
    return static_cast<Real>(eng_() >> 11) * 0x1.0p-53;
  }
  Real uniform(Real a, Real b) { return a + (b - a) * uniform(); }

  // Standard normal via Box-Muller (cached spare), independent of any
  // library distribution implementation.
  Real gauss() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    Real u1 = 0.0, u2 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    const Real r = std::sqrt(-2.0 * std::log(u1));
    const Real a = 2.0 * kPi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  std::uint64_t raw() { return eng_(); }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  Real spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// Formatting helpers (shortest round-trippable double for persisted CSV/JSON).
// ---------------------------------------------------------------------------
inline std::string format_double(Real x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return std::string(buf);
}

inline Real sq(Real x) { return x * x; }
inline Real cube(Real x) { return x * x * x; }

// Quintic smoothstep: C^2, s(0)=0, s(1)=1, s'(0)=s'(1)=s''(0)=s''(1)=0.
inline Real smoothstep5(Real x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
}
inline Real smoothstep5_d1(Real x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  return 30.0 * x * x * (1.0 + x * (-2.0 + x));
}
inline Real smoothstep5_d2(Real x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  return 60.0 * x * (1.0 + x * (-3.0 + 2.0 * x));
}

}  // namespace kummer
