#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "tuma/amp_dist.hpp"
#include "tuma/specfun.hpp"

using namespace tuma;
using namespace tuma::testing;

namespace {

struct Instance {
  SystemConfig cfg;
  Topology topo;
  MultiplicityPrior prior;
  McTable mc;
  Codebook cb;
  EffectiveChannelSet x;
  CMatrix y;
};

Instance make_instance(std::vector<Point> aps, std::uint64_t seed, int active = 4) {
  Instance s;
  s.cfg = tiny_config(std::move(aps));
  s.topo = build_topology(s.cfg);
  s.prior = uniform_prior(s.cfg, 0.5);
  s.mc = build_mc_table(s.cfg, s.topo, s.prior.k_max, seed);
  s.cb = gen_codebook(s.cfg, seed);
  TransmissionRound round(1, s.cfg.messages);
  Rng rng(seed);
  std::uniform_int_distribution<int> msg(0, s.cfg.messages - 1);
  for (int i = 0; i < active; ++i) round.per_zone[0].push_back({msg(rng), uniform_point(rng, 0, 100, 0, 100), i});
  s.x = effective_channels(round, sample_round_fading(round, s.topo, s.cfg, seed), antenna_count(s.cfg));
  s.y = synthesize_rx(s.cb, s.x, s.cfg, seed);
  return s;
}

}  // namespace

TEST_CASE("single AP: distributed decode is bit-identical to centralized") {
  const Instance s = make_instance({Point(30, -20)}, 11);
  AmpOptions opts;
  opts.truth = &s.x;
  const DecodeResult c = amp_run(s.y, s.cb, s.prior, s.mc, s.cfg, opts);
  const DecodeResult d = distributed_decode(s.y, s.cb, s.prior, s.mc, s.cfg, opts);
  CHECK(c.k_hat == d.k_hat);
  CHECK(c.k_global == d.k_global);
  CHECK(c.t_hat.has_value() == d.t_hat.has_value());
  if (c.t_hat) CHECK(*c.t_hat == *d.t_hat);
  CHECK(c.residual == d.residual);
  CHECK(c.x_hat[0] == d.x_hat[0]);
  CHECK(c.posteriors[0] == d.posteriors[0]);
  CHECK(c.degenerate_rows == d.degenerate_rows);
  REQUIRE(c.trace.size() == d.trace.size());
  for (size_t t = 0; t < c.trace.size(); ++t) {
    CHECK(c.trace[t].tau == d.trace[t].tau);
    CHECK(*c.trace[t].est_error == *d.trace[t].est_error);
    CHECK(*c.trace[t].tau_excess == *d.trace[t].tau_excess);
  }
}

TEST_CASE("local likelihoods factorize across APs") {
  Rng rng(3);
  std::uniform_real_distribution<double> u(0.05, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int a = 2, nb = 2;
    const CVector r = random_cvector(rng, a * nb);
    RVector tau(nb), g(nb);
    for (int b = 0; b < nb; ++b) {
      tau[b] = u(rng);
      g[b] = u(rng);
    }
    const double whole = hypothesis_loglik(r, tau, g, 1.7, a);
    double parts = 0;
    for (int b = 0; b < nb; ++b)
      parts += hypothesis_loglik(r.segment(b * a, a), tau.segment(b, 1), g.segment(b, 1), 1.7, a);
    CHECK(std::abs(whole - parts) <= 1e-10 * std::max(1.0, std::abs(whole)));
  }
}

TEST_CASE("noise-only observation: local likelihoods favour k = 0") {
  Instance s = make_instance({Point(0, 0), Point(100, 100)}, 5, 0);
  for (int b = 0; b < 2; ++b) {
    const LocalApState st = local_amp_run(s.y.middleCols(b * 2, 2), b, s.cb, s.prior, s.mc, s.cfg);
    CHECK(st.ap == b);
    CHECK(st.tau.size() == 1);
    CHECK(st.residual.cols() == 2);
    // Rows whose noise energy happens to be high can prefer k >= 1 on their
    // own; the evidence pooled over rows and the MAP decision cannot.
    const RMatrix& ll = st.summary.log_lik[0];
    int wins = 0;
    for (Eigen::Index m = 0; m < ll.rows(); ++m) wins += ll(m, 0) > ll(m, 1) && ll(m, 0) > ll(m, 2);
    MESSAGE("AP " << b << ": k = 0 has the largest likelihood on " << wins << " of " << ll.rows() << " rows");
    CHECK(wins * 2 > ll.rows());
    CHECK(ll.col(0).sum() > ll.col(1).sum());
    CHECK(ll.col(0).sum() > ll.col(2).sum());
    ApSummary alone = st.summary;
    alone.ap = 0;
    const Aggregate agg = aggregate_posteriors({alone}, s.prior, 1);
    CHECK(agg.k_hat.isZero());
    CHECK(st.summary.payload() == s.cfg.messages * 3);
  }
  CHECK_THROWS_AS(local_amp_run(s.y, 0, s.cb, s.prior, s.mc, s.cfg), InternalError);
}

TEST_CASE("aggregation") {
  const Instance s = make_instance({Point(0, 0), Point(100, 100), Point(0, 100)}, 7);
  std::vector<ApSummary> sums;
  for (int b = 0; b < 3; ++b)
    sums.push_back(local_amp_run(s.y.middleCols(b * 2, 2), b, s.cb, s.prior, s.mc, s.cfg).summary);

  const Aggregate agg = aggregate_posteriors(sums, s.prior, 3);
  for (Eigen::Index m = 0; m < agg.posteriors[0].rows(); ++m)
    CHECK(std::abs(agg.posteriors[0].row(m).sum() - 1) <= 1e-10);

  // order of arrival does not matter
  std::vector<ApSummary> shuffled{sums[2], sums[0], sums[1]};
  CHECK(aggregate_posteriors(shuffled, s.prior, 3).posteriors[0] == agg.posteriors[0]);

  // single AP: identity on the local posterior
  const Aggregate one = aggregate_posteriors({sums[0]}, s.prior, 1);
  RVector post;
  const RMatrix pz = zone_prior(s.prior, 0);
  for (Eigen::Index m = 0; m < pz.rows(); ++m) {
    posterior_from_loglik(pz.row(m).transpose(), sums[0].log_lik[0].row(m).transpose(), post);
    CHECK((one.posteriors[0].row(m).transpose() - post).norm() == 0.0);
  }

  // flat likelihoods leave the prior
  ApSummary flat{0, {RMatrix::Constant(s.cfg.messages, 3, -4.2)}};
  const Aggregate f = aggregate_posteriors({flat}, s.prior, 1);
  for (Eigen::Index m = 0; m < pz.rows(); ++m)
    CHECK((f.posteriors[0].row(m) - pz.row(m) / pz.row(m).sum()).cwiseAbs().maxCoeff() < 1e-14);

  // errors
  try {
    aggregate_posteriors({sums[0], sums[2]}, s.prior, 3);
    FAIL("expected AggregationError");
  } catch (const AggregationError& e) {
    CHECK(std::string(e.what()).find("AP 1") != std::string::npos);
  }
  CHECK_THROWS_AS(aggregate_posteriors({sums[0], sums[0], sums[1]}, s.prior, 3), AggregationError);
  ApSummary bad = sums[1];
  bad.log_lik[0] = RMatrix::Zero(3, 3);
  CHECK_THROWS_AS(aggregate_posteriors({sums[0], bad, sums[2]}, s.prior, 3), AggregationError);

  // the full pipeline agrees with the pieces
  const DecodeResult d = distributed_decode(s.y, s.cb, s.prior, s.mc, s.cfg);
  CHECK(d.posteriors[0] == agg.posteriors[0]);
  CHECK(d.k_hat == agg.k_hat);
  CHECK(d.trace.size() == static_cast<size_t>(s.cfg.amp_iters));
  CHECK(d.trace[0].tau.size() == 3);
}

TEST_CASE("summary serialization round trip") {
  ApSummary s{4, {RMatrix(2, 3), RMatrix(2, 3)}};
  s.log_lik[0] << -1.5, kNegInf, 3.25, 0.0, -1e300, 1e-17;
  s.log_lik[1] << 1, 2, 3, 4, 5, 6;
  const ApSummary back = summary_from_json(nlohmann::json::parse(summary_to_json(s).dump()));
  CHECK(back.ap == 4);
  CHECK(back.log_lik[0] == s.log_lik[0]);
  CHECK(back.log_lik[1] == s.log_lik[1]);
  CHECK_THROWS_AS(summary_from_json(nlohmann::json{{"ap", 1}}), AggregationError);
}
