#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "tuma/priors.hpp"
#include "tuma/specfun.hpp"

using namespace tuma;

namespace {

SystemConfig small_area() {
  SystemConfig cfg = desk_preset();
  cfg.area_side = 40;
  cfg.zone_rows = cfg.zone_cols = 1;
  cfg.messages = 4;
  cfg.sensors = 4;
  cfg.k_max = 4;
  return cfg;
}

}  // namespace

TEST_CASE("detection profile tracks the exact model") {
  const SystemConfig cfg = paper_preset();
  const DetectionProfile pd(cfg, 300 * std::sqrt(2.0));
  Rng rng(1);
  std::uniform_real_distribution<double> u(0, 300 * std::sqrt(2.0));
  double worst = 0;
  for (int i = 0; i < 20000; ++i) {
    const double d = u(rng);
    worst = std::max(worst, std::abs(pd(d) - detection_prob_at(d, cfg)));
  }
  CHECK(worst < 1e-4);
  CHECK(pd(0.0) == 1.0);
}

TEST_CASE("p_active limits") {
  SystemConfig cfg = desk_preset();
  const Topology topo = build_topology(cfg);
  cfg.sensing.threshold = 0;  // p_d = 1
  CHECK(compute_p_active(cfg, topo, 200, 200, 1) == doctest::Approx(1.0));
  cfg.sensing.threshold = 1e4;  // p_d = 0 away from the target itself
  cfg.sensing.gain_db = -400;
  CHECK(compute_p_active(cfg, topo, 200, 200, 1) < 1e-12);
}

TEST_CASE("p_active factorization vs direct two-target MC") {
  SystemConfig cfg = small_area();
  cfg.targets = 2;
  cfg.ns = 10;  // detection probabilities in the middle of [0, 1] over a 40 m area
  const Topology topo = build_topology(cfg);
  const double fact = compute_p_active(cfg, topo, 4000, 4000, 3);
  Rng rng(77);
  const int n = 400000;
  double acc = 0, acc2 = 0;
  for (int i = 0; i < n; ++i) {
    const Point s = uniform_point(rng, 0, 40, 0, 40);
    const Point p1 = uniform_point(rng, 0, 40, 0, 40), p2 = uniform_point(rng, 0, 40, 0, 40);
    const double v = 1 - (1 - detection_prob(s, p1, cfg)) * (1 - detection_prob(s, p2, cfg));
    acc += v;
    acc2 += v * v;
  }
  const double mean = acc / n, se = std::sqrt((acc2 / n - mean * mean) / n);
  INFO("factorized " << fact << " direct " << mean);
  CHECK(mean > 0.05);
  CHECK(mean < 0.95);
  CHECK(std::abs(fact - mean) < 4 * se + 0.01);
}

TEST_CASE("p_closest") {
  SystemConfig cfg = small_area();
  cfg.ns = 10;
  cfg.targets = 1;
  CHECK(compute_p_closest(Point(1, 1), Point(30, 30), cfg, 100, 1) == 1.0);
  cfg.targets = 3;
  CHECK(compute_p_closest(Point(5, 5), Point(5, 5), cfg, 100, 1) == 1.0);

  // direct MC of the product over the other T-1 = 2 targets
  const Point s(10, 12), p(25, 30);
  const double fact = compute_p_closest(s, p, cfg, 20000, 4);
  Rng rng(5);
  const int n = 200000;
  double acc = 0;
  const double d = (s - p).norm();
  std::uniform_real_distribution<double> u01(0, 1);
  for (int i = 0; i < n; ++i) {
    bool closer = false;
    for (int j = 0; j < 2; ++j) {
      const Point q = uniform_point(rng, 0, 40, 0, 40);
      if ((s - q).norm() < d && u01(rng) < detection_prob(s, q, cfg)) closer = true;
    }
    acc += closer ? 0 : 1;
  }
  const double mean = acc / n;
  CHECK(std::abs(fact - mean) < 4 * std::sqrt(mean * (1 - mean) / n) + 0.01);
}

TEST_CASE("message probabilities") {
  SystemConfig cfg = small_area();
  cfg.sensing.threshold = 0;  // p_d = 1 everywhere
  cfg.targets = 1;
  const Topology topo = build_topology(cfg);
  const Quantizer q = build_quantizer(2, cfg.area_side);
  RMatrix raw;
  const RMatrix p = compute_msg_probs(cfg, topo, q, {100, 400, 2000, 20}, 1, &raw);
  // one target, certain detection: every cell is reported in proportion to its area
  CHECK((p.array() - 0.25).abs().maxCoeff() < 1e-12);
  CHECK((raw.array() - 0.25).abs().maxCoeff() < 1e-12);

  // symmetric cells get (statistically) equal mass
  cfg.targets = 3;
  cfg.ns = 10;
  cfg.sensing.threshold = 36.84;
  const RMatrix ps = compute_msg_probs(cfg, topo, q, {100, 2000, 2000, 50}, 2);
  CHECK(std::abs(ps.row(0).sum() - 1.0) < 1e-12);
  for (int m = 0; m < 4; ++m) CHECK(ps(0, m) == doctest::Approx(0.25).epsilon(0.08));

  // nobody detects anything: uniform fallback
  cfg.sensing.gain_db = -400;
  cfg.sensing.threshold = 1e4;
  const RMatrix none = compute_msg_probs(cfg, topo, q, {100, 50, 200, 5}, 3, &raw);
  CHECK(raw.isZero(0));
  CHECK((none.array() == 0.25).all());
}

TEST_CASE("message probabilities favour cells near the zone") {
  SystemConfig cfg = desk_preset();
  const Topology topo = build_topology(cfg);
  const Quantizer q = build_quantizer(quantizer_bits(cfg), cfg.area_side);
  const RMatrix p = compute_msg_probs(cfg, topo, q, {100, 100, 1000, 5}, 1);
  for (int u = 0; u < topo.zone_count(); ++u) {
    Eigen::Index best;
    p.row(u).maxCoeff(&best);
    CHECK(topo.zone_rects[u].contains(q.points[best]));
    CHECK(std::abs(p.row(u).sum() - 1) < 1e-12);
  }
}

TEST_CASE("multiplicity prior: closed forms") {
  SystemConfig cfg = small_area();
  cfg.sensors = 2;
  cfg.k_max = 2;
  const RVector p = full_multiplicity_distribution(2, 1, 1.0, 0.5);
  CHECK(p[0] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(p[2] == doctest::Approx(0.25).epsilon(1e-14));

  const MultiplicityPrior zero = build_prior(cfg, 0.0, RMatrix::Constant(1, 4, 0.25));
  for (Eigen::Index r = 0; r < zero.probs.rows(); ++r) {
    CHECK(zero.probs(r, 0) == 1.0);
    CHECK(zero.probs.row(r).tail(2).isZero(0));
  }
  CHECK(zero.log_prob(0, 1, 1) == kNegInf);
  CHECK(zero.log_prob(0, 1, 0) == 0.0);
}

TEST_CASE("multiplicity prior: enumeration oracle, K=4, U=2") {
  Rng rng(12);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const double pa = u(rng), pm = u(rng);
    const RVector got = full_multiplicity_distribution(4, 2, pa, pm);
    const RVector want = oracle::enumerate_multiplicity(4, 2, pa, pm);
    CHECK((got - want).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(std::abs(got.sum() - 1) <= 1e-10);
  }
}

TEST_CASE("multiplicity prior: normalization and mean consistency") {
  const int k = 200, u = 9, m = 1024;
  const double pa = 0.62;
  RMatrix msg(u, m);
  Rng rng(3);
  std::uniform_real_distribution<double> un(0, 1);
  for (int r = 0; r < u; ++r) {
    for (int c = 0; c < m; ++c) msg(r, c) = un(rng);
    msg.row(r) /= msg.row(r).sum();
  }
  const RVector act = zone_activity_distribution(k, u, pa);
  CHECK(std::abs(act.sum() - 1) <= 1e-10);
  for (int kk = 0; kk <= k; ++kk) CHECK(act[kk] == doctest::Approx(binom_pmf(kk, k, pa / u)).epsilon(1e-9));
  double total_mean = 0;
  for (int r = 0; r < u; ++r)
    for (int c = 0; c < m; c += 37) {
      const RVector p = full_multiplicity_distribution(k, u, pa, msg(r, c));
      CHECK(std::abs(p.sum() - 1) <= 1e-10);
    }
  for (int r = 0; r < u; ++r)
    for (int c = 0; c < m; ++c) total_mean += (k * pa / u) * msg(r, c);  // E[k_um] = E[Ka_u] p(m|u)
  // cross-check one entry's mean against the distribution
  const RVector p0 = full_multiplicity_distribution(k, u, pa, msg(0, 0));
  double mean0 = 0;
  for (int kk = 0; kk <= k; ++kk) mean0 += kk * p0[kk];
  CHECK(mean0 == doctest::Approx(k * pa / u * msg(0, 0)).epsilon(1e-9));
  CHECK(total_mean == doctest::Approx(k * pa).epsilon(0.01));

  SystemConfig cfg = paper_preset();
  const MultiplicityPrior prior = build_prior(cfg, pa, msg);
  CHECK(prior.probs.rows() == u * m);
  CHECK(prior.probs.cols() == cfg.k_max + 1);
  CHECK((prior.probs.array() >= 0).all());
  CHECK((prior.probs.rowwise().sum().array() <= 1 + 1e-12).all());
  CHECK(prior.row(2, 5).sum() == doctest::Approx(prior.probs.row(2 * m + 5).sum()));

  const int ka = auto_k_max(k, u, pa, msg);
  CHECK(ka >= 1);
  const RVector worst = full_multiplicity_distribution(k, u, pa, msg.maxCoeff());
  CHECK(worst.head(ka + 1).sum() >= 1 - 1e-4);
  CHECK(worst.head(ka).sum() < 1 - 1e-4);
  cfg.k_max_auto = true;
  CHECK(build_prior(cfg, pa, msg).k_max == ka);
}

TEST_CASE("p_active is monotone in Ns") {
  SystemConfig cfg = paper_preset();
  const Topology topo = build_topology(cfg);
  double prev = 0;
  for (int ns : {100, 500, 1000, 1900}) {
    cfg.ns = ns;
    const double p = compute_p_active(cfg, topo, 500, 500, 7);
    CHECK(p >= prev);
    prev = p;
  }
}

TEST_CASE("prior cache") {
  SystemConfig cfg = desk_preset();
  cfg.prior_sampling = {500, 10, 200, 2};
  const Topology topo = build_topology(cfg);
  const auto dir = std::filesystem::temp_directory_path() / "tuma_prior_cache_test";
  std::filesystem::remove_all(dir);
  const std::string h = prior_config_hash(cfg);
  CHECK(h.size() == 16);
  SystemConfig other = cfg;
  other.ns = 900;
  CHECK(prior_config_hash(other) != h);
  other = cfg;
  other.sigma_w2 *= 2;  // communication-only field
  CHECK(prior_config_hash(other) == h);

  const MultiplicityPrior a = load_or_compute_prior(cfg, topo, dir.string());
  const auto file = dir / ("prior-" + h + ".json");
  CHECK(std::filesystem::exists(file));
  const MultiplicityPrior b = load_or_compute_prior(cfg, topo, dir.string());
  CHECK(a.probs == b.probs);
  CHECK(a.msg_probs == b.msg_probs);
  CHECK(a.p_active == b.p_active);
  const MultiplicityPrior c = compute_prior(cfg, topo);
  CHECK(c.probs == a.probs);
  CHECK_FALSE(load_prior(file.string(), "0000000000000000").has_value());
  CHECK_FALSE(load_prior((dir / "missing.json").string(), h).has_value());
  std::filesystem::remove_all(dir);
}
