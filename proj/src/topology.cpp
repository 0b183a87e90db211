#include "tuma/topology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tuma {

Topology build_topology(const SystemConfig& cfg) {
  Topology t;
  t.area_side = cfg.area_side;
  t.rows = cfg.zone_rows;
  t.cols = cfg.zone_cols;
  if (t.rows < 1 || t.cols < 1) throw ConfigError("zone grid must be at least 1x1");
  const double sx = cfg.area_side / t.cols;
  const double sy = cfg.area_side / t.rows;

  for (int r = 0; r < t.rows; ++r)
    for (int c = 0; c < t.cols; ++c) {
      Rect z{c * sx, r * sy, (c + 1) * sx, (r + 1) * sy};
      t.zone_rects.push_back(z);
      t.zone_centroids.push_back(z.center());
    }

  switch (cfg.ap_layout) {
    case ApLayout::lattice:
      for (int r = 0; r <= t.rows; ++r)
        for (int c = 0; c <= t.cols; ++c) t.ap_positions.emplace_back(c * sx, r * sy);
      // midpoints of horizontal edges, then vertical edges
      for (int r = 0; r <= t.rows; ++r)
        for (int c = 0; c < t.cols; ++c) t.ap_positions.emplace_back((c + 0.5) * sx, r * sy);
      for (int r = 0; r < t.rows; ++r)
        for (int c = 0; c <= t.cols; ++c) t.ap_positions.emplace_back(c * sx, (r + 0.5) * sy);
      break;
    case ApLayout::explicit_list:
      if (cfg.ap_positions.empty()) throw ConfigError("explicit-list layout needs ap_positions");
      t.ap_positions = cfg.ap_positions;
      break;
    default:
      throw ConfigError("unsupported AP layout");
  }
  return t;
}

double lsfc(const Point& rho, const Point& ap, double d0, double beta) {
  const double d = (rho - ap).norm();
  return 1.0 / (1.0 + std::pow(d / d0, beta));
}

double lsfc(const Point& rho, int ap_index, const Topology& topo, const SystemConfig& cfg) {
  return lsfc(rho, topo.ap_positions.at(ap_index), cfg.d0, cfg.beta);
}

RVector lsfc_vector(const Point& rho, const Topology& topo, const SystemConfig& cfg) {
  RVector g(topo.ap_count());
  for (int b = 0; b < topo.ap_count(); ++b) g[b] = lsfc(rho, topo.ap_positions[b], cfg.d0, cfg.beta);
  return g;
}

int zone_of(const Point& rho, const Topology& topo) {
  const double s = topo.area_side;
  if (!(rho.x() >= 0 && rho.x() <= s && rho.y() >= 0 && rho.y() <= s))
    throw DomainError("point outside the coverage area");
  const double sx = s / topo.cols, sy = s / topo.rows;
  const int c = std::min(static_cast<int>(std::floor(rho.x() / sx)), topo.cols - 1);
  const int r = std::min(static_cast<int>(std::floor(rho.y() / sy)), topo.rows - 1);
  return r * topo.cols + c;
}

double centroid_ap_distance(const Topology& topo) {
  double sum = 0;
  for (const auto& c : topo.zone_centroids) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& ap : topo.ap_positions) best = std::min(best, (c - ap).norm());
    sum += best;
  }
  return sum / topo.zone_count();
}

SnrPair snr_conversions(const SystemConfig& cfg, const Topology& topo) {
  const double tx = cfg.ec / (cfg.nc * cfg.sigma_w2);
  const double att = 1.0 + std::pow(centroid_ap_distance(topo) / cfg.d0, cfg.beta);
  return {tx, tx / att};
}

void set_snr_rx_db(SystemConfig& cfg, double snr_rx_db) {
  const Topology topo = build_topology(cfg);
  const double att = 1.0 + std::pow(centroid_ap_distance(topo) / cfg.d0, cfg.beta);
  const double snr_tx = db_to_linear(snr_rx_db) * att;
  if (cfg.ec <= 0) throw ConfigError("received SNR target needs ec > 0");
  cfg.sigma_w2 = cfg.ec / (cfg.nc * snr_tx);
}

}  // namespace tuma
