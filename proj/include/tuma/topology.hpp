#pragma once

#include <cmath>
#include <vector>

#include "tuma/config.hpp"
#include "tuma/types.hpp"

namespace tuma {

struct Rect {
  double x0, y0, x1, y1;
  double area() const { return (x1 - x0) * (y1 - y0); }
  Point center() const { return {(x0 + x1) / 2, (y0 + y1) / 2}; }
  // half-open: left/bottom edges inclusive
  bool contains(const Point& p) const { return p.x() >= x0 && p.x() < x1 && p.y() >= y0 && p.y() < y1; }
};

struct Topology {
  double area_side = 0;
  int rows = 0, cols = 0;
  std::vector<Point> ap_positions;
  std::vector<Rect> zone_rects;  // zone u = row * cols + col, row along y
  std::vector<Point> zone_centroids;

  int ap_count() const { return static_cast<int>(ap_positions.size()); }
  int zone_count() const { return static_cast<int>(zone_rects.size()); }
};

/// Zone lattice plus AP placement. The lattice layout puts one AP on every
/// zone corner and every zone-edge midpoint.
Topology build_topology(const SystemConfig& cfg);

/// Large-scale fading coefficient 1 / (1 + (d/d0)^beta).
double lsfc(const Point& rho, const Point& ap, double d0, double beta);
double lsfc(const Point& rho, int ap_index, const Topology& topo, const SystemConfig& cfg);

/// Per-AP coefficients; the covariance of a user at rho is diag(result) kron I_A.
RVector lsfc_vector(const Point& rho, const Topology& topo, const SystemConfig& cfg);

/// Throws DomainError outside the area. The outer right/top edge belongs to the
/// last row/column so the closed square is covered.
int zone_of(const Point& rho, const Topology& topo);

/// Mean distance from a zone centroid to its nearest AP.
double centroid_ap_distance(const Topology& topo);

struct SnrPair {
  double tx;
  double rx;
};
SnrPair snr_conversions(const SystemConfig& cfg, const Topology& topo);

/// Sets sigma_w2 so the received SNR (linear scale from dB) is met at the
/// configured Ec and Nc.
void set_snr_rx_db(SystemConfig& cfg, double snr_rx_db);

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

}  // namespace tuma
