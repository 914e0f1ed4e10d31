#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "rci/linalg.hpp"

namespace rci {

/// Seeded RNG with self-contained distributions so that streams do not
/// depend on the standard library's distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Flat Dirichlet weights over `count` vertices.
  Vector dirichlet(Index count) {
    Vector w(count);
    double total = 0.0;
    for (Index i = 0; i < count; ++i) {
      // Exp(1) via inverse CDF; clamp away from u=1 to avoid -log(0).
      double u = uniform();
      w(i) = -std::log1p(-std::min(u, 1.0 - 1e-16));
      total += w(i);
    }
    if (total <= 0.0) {
      w.setConstant(1.0 / static_cast<double>(count));
      return w;
    }
    return w / total;
  }

  /// Derives an independent stream, for per-trial reproducibility.
  Rng fork(std::uint64_t salt) {
    std::uint64_t s = engine_() ^ (salt * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL);
    return Rng(s);
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace rci
