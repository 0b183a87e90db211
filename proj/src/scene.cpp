#include "tuma/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tuma/specfun.hpp"

namespace tuma {

namespace {
constexpr double kSpeedOfLight = 299792458.0;
}

int Scene::active_count() const {
  return static_cast<int>(std::count_if(sensors.begin(), sensors.end(), [](const Sensor& s) { return s.active(); }));
}

Rect Quantizer::cell(int m) const {
  const double w = area_side / gx, h = area_side / gy;
  const int ix = m % gx, iy = m / gx;
  return {ix * w, iy * h, (ix + 1) * w, (iy + 1) * h};
}

int Quantizer::quantize(const Point& p) const {
  const double w = area_side / gx, h = area_side / gy;
  const int cx = std::clamp(static_cast<int>(std::floor(p.x() / w)), 0, gx - 1);
  const int cy = std::clamp(static_cast<int>(std::floor(p.y() / h)), 0, gy - 1);
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  // The nearest center is in the containing cell or a neighbour; scan those in
  // index order so ties go to the lowest index.
  for (int iy = std::max(cy - 1, 0); iy <= std::min(cy + 1, gy - 1); ++iy)
    for (int ix = std::max(cx - 1, 0); ix <= std::min(cx + 1, gx - 1); ++ix) {
      const int m = iy * gx + ix;
      const double d = (points[m] - p).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = m;
      }
    }
  return best;
}

Quantizer build_quantizer(int bits, double area_side) {
  if (bits < 1 || bits > 16) throw ConfigError("quantizer bits must be in [1,16]");
  Quantizer q;
  q.bits = bits;
  q.gx = 1 << ((bits + 1) / 2);
  q.gy = 1 << (bits / 2);
  q.area_side = area_side;
  const double w = area_side / q.gx, h = area_side / q.gy;
  for (int iy = 0; iy < q.gy; ++iy)
    for (int ix = 0; ix < q.gx; ++ix) q.points.emplace_back((ix + 0.5) * w, (iy + 0.5) * h);
  return q;
}

Scene sample_scene(const SystemConfig& cfg, const Topology& topo, Rng& rng) {
  Scene s;
  const double side = cfg.area_side;
  for (int i = 0; i < cfg.targets; ++i) s.targets.push_back(uniform_point(rng, 0, side, 0, side));
  for (int k = 0; k < cfg.sensors; ++k) {
    Sensor sensor;
    sensor.position = uniform_point(rng, 0, side, 0, side);
    sensor.zone = zone_of(sensor.position, topo);
    s.sensors.push_back(std::move(sensor));
  }
  return s;
}

Scene sample_scene(const SystemConfig& cfg, const Topology& topo, std::uint64_t seed) {
  Rng rng = make_rng(seed, Stream::scene);
  return sample_scene(cfg, topo, rng);
}

double detection_noncentrality(double distance, const SystemConfig& cfg) {
  const auto& s = cfg.sensing;
  const double lambda = kSpeedOfLight / s.carrier_hz;
  const double four_pi_cubed = std::pow(4 * M_PI, 3);
  const double d2 = distance * distance;
  return db_to_linear(s.gain_db) * 2.0 * cfg.ns * s.power_w * s.rcs_m2 * lambda * lambda /
         (four_pi_cubed * s.noise_w * d2 * d2);
}

double detection_prob_at(double distance, const SystemConfig& cfg) {
  if (distance <= 0) return 1.0;
  const double a2 = detection_noncentrality(distance, cfg);
  if (!std::isfinite(a2)) return 1.0;
  return marcum_q1(std::sqrt(a2), std::sqrt(cfg.sensing.threshold));
}

double detection_prob(const Point& s, const Point& p, const SystemConfig& cfg) {
  return detection_prob_at((s - p).norm(), cfg);
}

Scene sense_all(Scene scene, const SystemConfig& cfg, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (auto& sensor : scene.sensors) {
    sensor.detected.clear();
    sensor.reported.reset();
    double nearest = std::numeric_limits<double>::infinity();
    for (int i = 0; i < static_cast<int>(scene.targets.size()); ++i) {
      const double u = unif(rng);
      const double d = (sensor.position - scene.targets[i]).norm();
      if (u < detection_prob_at(d, cfg)) {
        sensor.detected.push_back(i);
        if (d < nearest) {
          nearest = d;
          sensor.reported = i;
        }
      }
    }
  }
  scene.sensed = true;
  return scene;
}

TransmissionRound messages_of(const Scene& scene, const Quantizer& q, int zones) {
  TransmissionRound round(zones, q.size());
  for (int j = 0; j < static_cast<int>(scene.sensors.size()); ++j) {
    const auto& s = scene.sensors[j];
    if (!s.active()) continue;
    round.per_zone.at(s.zone).push_back({q.quantize(scene.targets[*s.reported]), s.position, j});
  }
  return round;
}

nlohmann::json scene_to_json(const Scene& scene, const Quantizer* q) {
  using nlohmann::json;
  json targets = json::array();
  for (const auto& p : scene.targets) targets.push_back({p.x(), p.y()});
  json sensors = json::array();
  for (const auto& s : scene.sensors) {
    json js{{"position", {s.position.x(), s.position.y()}}, {"zone", s.zone}, {"detected", s.detected}};
    js["reported"] = s.reported ? json(*s.reported) : json(nullptr);
    if (q && s.reported) js["message"] = q->quantize(scene.targets[*s.reported]);
    sensors.push_back(std::move(js));
  }
  return json{{"targets", targets}, {"sensors", sensors}, {"sensed", scene.sensed}};
}

}  // namespace tuma
