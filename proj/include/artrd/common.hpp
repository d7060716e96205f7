#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>

namespace artrd {

inline constexpr double kPi = 3.14159265358979323846;

// ---------------------------------------------------------------------------
// Errors. The CLI maps these onto distinct exit codes.

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
/// Bad or infeasible configuration (including goal separation too large).
struct ConfigError : Error {
  using Error::Error;
};
/// A caller broke an operation's precondition (dimension mismatch etc).
struct ContractError : Error {
  using Error::Error;
};
/// Unreadable or incompatible checkpoint.
struct CheckpointError : Error {
  using Error::Error;
};
/// Non-finite value detected mid-training.
struct NumericError : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Deterministic RNG. All randomness in the project flows through this type so
// that a (seed, config) pair fully determines every trajectory. The uniform
// and normal transforms are written out by hand: std::*_distribution sequences
// are implementation-defined and would break reproducibility across toolchains.

std::uint64_t splitmix64(std::uint64_t x);

class Rng {
 public:
  Rng() : gen_(0x9e3779b97f4a7c15ull) {}
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Independent stream derived from (seed, stream); used for per-episode and
  /// per-module substreams.
  static Rng derive(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  /// Standard normal via Box-Muller (two u64 draws per call).
  double normal() {
    double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  bool operator==(const Rng& other) const { return gen_ == other.gen_; }

 private:
  std::mt19937_64 gen_;
};

// ---------------------------------------------------------------------------
// Small 2D vector used by the environments.

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double norm() const { return std::hypot(x, y); }
};

/// Rotate v by angle (counterclockwise).
inline Vec2 rotate(Vec2 v, double angle) {
  double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

inline double clamp_unit(double v) { return v < -1.0 ? -1.0 : (v > 1.0 ? 1.0 : v); }

inline double clamp_to(double v, double bound) {
  return v < -bound ? -bound : (v > bound ? bound : v);
}

/// Normalize an angle to (-pi, pi].
inline double normalize_angle(double a) {
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

// ---------------------------------------------------------------------------
// Worker-thread budget for the OpenMP regions. ARTRD_THREADS caps parallelism;
// unset, the OpenMP default applies. Re-read on each call so tests can toggle it.

int worker_threads();

// ---------------------------------------------------------------------------
// Atomic file write (temp file + rename in the destination directory).

void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace artrd
