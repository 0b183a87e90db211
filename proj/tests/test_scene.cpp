#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "tuma/scene.hpp"
#include "tuma/specfun.hpp"

using namespace tuma;

TEST_CASE("scene sampling") {
  SystemConfig cfg = paper_preset();
  const Topology topo = build_topology(cfg);
  cfg.sensors = 0;
  CHECK(sample_scene(cfg, topo, 1).sensors.empty());
  cfg.sensors = 200;
  const Scene a = sample_scene(cfg, topo, 1), b = sample_scene(cfg, topo, 1);
  REQUIRE(a.sensors.size() == 200);
  CHECK(a.targets.size() == 50);
  for (size_t i = 0; i < a.sensors.size(); ++i) {
    CHECK(a.sensors[i].position == b.sensors[i].position);
    CHECK(a.sensors[i].zone == zone_of(a.sensors[i].position, topo));
  }
  // per-zone counts follow multinomial(K, 1/U): pooled chi-square
  std::vector<double> counts(9, 0);
  const int seeds = 500;
  for (int s = 0; s < seeds; ++s)
    for (const auto& sen : sample_scene(cfg, topo, 1000 + s).sensors) counts[sen.zone] += 1;
  const double expect = seeds * 200.0 / 9;
  double chi2 = 0;
  for (double c : counts) chi2 += (c - expect) * (c - expect) / expect;
  CHECK(chi2 < 26.1);  // chi-square(8) at 0.999
}

TEST_CASE("detection probability") {
  SystemConfig cfg = paper_preset();
  const double pfa = std::exp(-cfg.sensing.threshold / 2);
  CHECK(detection_prob_at(1e7, cfg) == doctest::Approx(pfa).epsilon(1e-6));
  CHECK(detection_prob_at(1e-3, cfg) == doctest::Approx(1.0));
  CHECK(detection_prob(Point(3, 4), Point(3, 4), cfg) == 1.0);
  const double a = std::sqrt(detection_noncentrality(30.0, cfg));
  CHECK(std::abs(detection_prob(Point(0, 0), Point(30, 0), cfg) -
                 oracle::marcum_q1_quadrature(a, std::sqrt(cfg.sensing.threshold))) < 1e-10);
  // d^-4 law and linear scaling with Ns
  CHECK(detection_noncentrality(20.0, cfg) / detection_noncentrality(40.0, cfg) == doctest::Approx(16.0));
  SystemConfig half = cfg;
  half.ns = cfg.ns / 2;
  CHECK(detection_noncentrality(25.0, cfg) == doctest::Approx(2 * detection_noncentrality(25.0, half)));
  double prev = 1.1;
  for (double d = 1; d < 400; d *= 1.3) {
    const double p = detection_prob_at(d, cfg);
    CHECK(p <= prev);
    prev = p;
  }
}

TEST_CASE("sense_all: certain detection reports the co-located target") {
  SystemConfig cfg = paper_preset();
  const Topology topo = build_topology(cfg);
  Scene s = sample_scene(cfg, topo, 3);
  s.targets.clear();
  for (const auto& sen : s.sensors) s.targets.push_back(sen.position);
  Rng rng(4);
  const Scene out = sense_all(s, cfg, rng);
  CHECK(out.sensed);
  CHECK(out.active_count() == cfg.sensors);
  for (size_t j = 0; j < out.sensors.size(); ++j) CHECK(*out.sensors[j].reported == static_cast<int>(j));
}

TEST_CASE("sense_all: false-alarm-only activation rate") {
  SystemConfig cfg = desk_preset();
  cfg.sensing.gain_db = -400;            // no target return
  cfg.sensing.threshold = 2 * std::log(10.0);  // p_fa = 0.1
  cfg.targets = 5;
  cfg.sensors = 4000;
  const Topology topo = build_topology(cfg);
  Rng rng(5);
  Scene s = sample_scene(cfg, topo, rng);
  s = sense_all(s, cfg, rng);
  const double rate = double(s.active_count()) / cfg.sensors;
  const double want = 1 - std::pow(0.9, 5);
  CHECK(std::abs(rate - want) < 4 * std::sqrt(want * (1 - want) / cfg.sensors));

  // at the preset threshold the same setup almost never activates
  cfg.sensing.threshold = 36.84;
  Scene quiet = sense_all(sample_scene(cfg, topo, 6), cfg, rng);
  CHECK(quiet.active_count() == 0);
}

TEST_CASE("sense_all invariants") {
  SystemConfig cfg = paper_preset();
  const Topology topo = build_topology(cfg);
  Rng rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    const Scene s = sense_all(sample_scene(cfg, topo, rng), cfg, rng);
    for (const auto& sen : s.sensors) {
      CHECK(sen.active() == !sen.detected.empty());
      if (!sen.active()) continue;
      const int r = *sen.reported;
      CHECK(std::find(sen.detected.begin(), sen.detected.end(), r) != sen.detected.end());
      for (int i : sen.detected)
        CHECK((sen.position - s.targets[r]).norm() <= (sen.position - s.targets[i]).norm());
    }
  }
}

TEST_CASE("quantizer") {
  const Quantizer q2 = build_quantizer(2, 300);
  REQUIRE(q2.size() == 4);
  CHECK(q2.points[0] == Point(75, 75));
  CHECK(q2.points[1] == Point(225, 75));
  CHECK(q2.points[2] == Point(75, 225));
  CHECK(q2.points[3] == Point(225, 225));
  CHECK(q2.quantize(Point(10, 10)) == 0);
  CHECK(q2.quantize(Point(150, 10)) == 0);  // tie goes to the lower index
  CHECK(q2.quantize(Point(150, 150)) == 0);

  const Quantizer q6 = build_quantizer(6, 300);
  CHECK(q6.gx == 8);
  CHECK(q6.gy == 8);
  CHECK((q6.points[1] - q6.points[0]).norm() == doctest::Approx(37.5));
  const Quantizer q3 = build_quantizer(3, 300);
  CHECK(q3.gx == 4);
  CHECK(q3.gy == 2);
  const Quantizer q10 = build_quantizer(10, 300);
  for (const Quantizer* q : {&q2, &q3, &q6, &q10})
    for (int m = 0; m < q->size(); ++m) {
      CHECK(q->quantize(q->points[m]) == m);
      CHECK(q->cell(m).contains(q->points[m]));
    }
  // nearest-center agrees with brute force
  Rng rng(2);
  const Quantizer q7 = build_quantizer(7, 300);
  for (int i = 0; i < 2000; ++i) {
    const Point p = uniform_point(rng, 0, 300, 0, 300);
    int best = 0;
    for (int m = 1; m < q7.size(); ++m)
      if ((q7.points[m] - p).squaredNorm() < (q7.points[best] - p).squaredNorm()) best = m;
    CHECK(q7.quantize(p) == best);
  }
  CHECK_THROWS_AS(build_quantizer(0, 300), ConfigError);
  CHECK_THROWS_AS(build_quantizer(17, 300), ConfigError);
}

TEST_CASE("messages_of") {
  const SystemConfig cfg = paper_preset();
  const Topology topo = build_topology(cfg);
  const Quantizer q = build_quantizer(10, cfg.area_side);
  Scene s;
  s.targets = {Point(20, 20), Point(250, 250)};
  auto sensor = [&](Point p, std::optional<int> rep) {
    Sensor x;
    x.position = p;
    x.zone = zone_of(p, topo);
    if (rep) x.detected = {*rep};
    x.reported = rep;
    return x;
  };
  s.sensors = {sensor({10, 10}, 0), sensor({50, 60}, 0), sensor({280, 280}, 1), sensor({150, 150}, std::nullopt)};
  s.sensed = true;
  const TransmissionRound r = messages_of(s, q, topo.zone_count());
  CHECK(r.active_count() == 3);
  const int m0 = q.quantize(s.targets[0]);
  CHECK(r.multiplicities()(0, m0) == 2);
  CHECK(r.multiplicities()(8, q.quantize(s.targets[1])) == 1);
  CHECK(r.global_multiplicities()[m0] == 2);
  CHECK(r.type()[m0] == doctest::Approx(2.0 / 3));
  CHECK(r.per_zone[0][1].sensor == 1);

  Scene none = s;
  for (auto& x : none.sensors) {
    x.detected.clear();
    x.reported.reset();
  }
  CHECK(messages_of(none, q, 9).active_count() == 0);

  const auto j = scene_to_json(s, &q);
  CHECK(j["sensors"][0]["message"] == m0);
  CHECK(j["sensors"][3]["reported"].is_null());
}
