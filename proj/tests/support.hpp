#pragma once

// Small fixtures shared by the unit tests and the acceptance binary.

#include <vector>

#include "tuma/amp.hpp"
#include "tuma/priors.hpp"
#include "tuma/rng.hpp"

namespace tuma::testing {

/// One or more zones with explicitly placed APs, sized for fast decoding.
inline SystemConfig tiny_config(std::vector<Point> aps, int zones_per_side = 1) {
  SystemConfig cfg;
  cfg.area_side = 100.0 * zones_per_side;
  cfg.zone_rows = cfg.zone_cols = zones_per_side;
  cfg.ap_layout = ApLayout::explicit_list;
  cfg.ap_positions = std::move(aps);
  cfg.antennas = 2;
  cfg.messages = 16;
  cfg.nc = 96;
  cfg.sensors = 6;
  cfg.targets = 3;
  cfg.n_mc = 40;
  cfg.amp_iters = 5;
  cfg.k_max = 2;
  cfg.ec = 1.0;
  cfg.sigma_w2 = 1e-4;
  return cfg;
}

/// Prior with uniform message probabilities.
inline MultiplicityPrior uniform_prior(const SystemConfig& cfg, double p_active) {
  const RMatrix msg = RMatrix::Constant(zone_count(cfg), cfg.messages, 1.0 / cfg.messages);
  return build_prior(cfg, p_active, msg);
}

inline CVector random_cvector(Rng& rng, Eigen::Index n, double var = 1.0) {
  CVector v(n);
  for (auto& x : v) x = complex_normal(rng, var);
  return v;
}

inline CMatrix random_cmatrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double var = 1.0) {
  CMatrix m(rows, cols);
  for (auto& x : m.reshaped()) x = complex_normal(rng, var);
  return m;
}

}  // namespace tuma::testing
