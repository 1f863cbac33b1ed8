#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace nsmp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Error raised when problem data cannot be evaluated or a numerical
/// routine cannot deliver its contract.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Deterministic RNG. std::mt19937_64 with hand-rolled distributions so
/// that identical seeds give bit-identical streams on every platform
/// (the standard distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

  std::uint64_t next_u64() {
    // xorshift* keeps the stream independent of libstdc++ internals.
    std::uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545F4914F6CDD1DULL;
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (consumes two uniforms).
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  /// Uniform direction on the unit sphere in dimension d.
  Vec direction(int d) {
    Vec v(d);
    double nrm = 0;
    do {
      for (int i = 0; i < d; ++i) v[i] = normal();
      nrm = v.norm();
    } while (nrm < 1e-300);
    return v / nrm;
  }

  /// Uniform point in the closed ball of given radius around center.
  Vec in_ball(const Vec& center, double radius) {
    const int d = static_cast<int>(center.size());
    Vec dir = direction(d);
    double r = radius * std::pow(uniform(), 1.0 / d);
    return center + r * dir;
  }

 private:
  std::uint64_t state_;
};

}  // namespace nsmp
