#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "tuma/airlink.hpp"
#include "tuma/config.hpp"
#include "tuma/rng.hpp"
#include "tuma/topology.hpp"

namespace tuma {

struct Sensor {
  Point position = Point::Zero();
  int zone = 0;
  std::vector<int> detected;   // target indices, ascending
  std::optional<int> reported; // nearest detected target
  bool active() const { return reported.has_value(); }
};

struct Scene {
  std::vector<Point> targets;
  std::vector<Sensor> sensors;
  bool sensed = false;

  int active_count() const;
};

/// Uniform grid of 2^bits cell centers; 2^ceil(bits/2) columns by
/// 2^floor(bits/2) rows, index m = row * columns + column.
struct Quantizer {
  int bits = 0;
  int gx = 0, gy = 0;
  double area_side = 0;
  std::vector<Point> points;

  int size() const { return static_cast<int>(points.size()); }
  Rect cell(int m) const;
  /// Nearest grid point, lowest index on ties.
  int quantize(const Point& p) const;
};

Quantizer build_quantizer(int bits, double area_side);
inline int quantize(const Quantizer& q, const Point& p) { return q.quantize(p); }

/// Targets then sensors, i.i.d. uniform over the area.
Scene sample_scene(const SystemConfig& cfg, const Topology& topo, Rng& rng);
Scene sample_scene(const SystemConfig& cfg, const Topology& topo, std::uint64_t seed);

/// Noncentrality a^2 of the detection statistic at range `distance`.
double detection_noncentrality(double distance, const SystemConfig& cfg);
double detection_prob_at(double distance, const SystemConfig& cfg);
/// Q1(a, sqrt(threshold)); 1 when the sensor sits on the target.
double detection_prob(const Point& s, const Point& p, const SystemConfig& cfg);

/// Independent Bernoulli detection per (sensor, target) pair, one uniform draw
/// per pair in sensor-major order; each active sensor reports its nearest
/// detected target.
Scene sense_all(Scene scene, const SystemConfig& cfg, Rng& rng);

/// One transmission per active sensor, grouped by zone in sensor order.
TransmissionRound messages_of(const Scene& scene, const Quantizer& q, int zones);

nlohmann::json scene_to_json(const Scene& scene, const Quantizer* q = nullptr);

}  // namespace tuma
