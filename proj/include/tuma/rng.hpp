#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

#include "tuma/types.hpp"

namespace tuma {

using Rng = std::mt19937_64;

// Independent randomness sources derived from one master seed.
enum class Stream : std::uint64_t {
  codebook = 0,
  fading = 1,
  noise = 2,
  scene = 3,
  mc_samples = 4,
  priors = 5,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Folds a list of 64-bit words into one seed with splitmix64. Order matters.
inline std::uint64_t mix_seed(std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (auto w : words) h = splitmix64(h ^ splitmix64(w));
  return h;
}

inline Rng make_rng(std::uint64_t seed, Stream stream) {
  return Rng(mix_seed({seed, static_cast<std::uint64_t>(stream)}));
}

/// Circularly-symmetric complex Gaussian with E|z|^2 = var.
inline cd complex_normal(Rng& rng, double var) {
  std::normal_distribution<double> n(0.0, std::sqrt(var / 2.0));
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

inline Point uniform_point(Rng& rng, double x0, double x1, double y0, double y1) {
  std::uniform_real_distribution<double> ux(x0, x1);
  std::uniform_real_distribution<double> uy(y0, y1);
  const double x = ux(rng);
  const double y = uy(rng);
  return {x, y};
}

}  // namespace tuma
