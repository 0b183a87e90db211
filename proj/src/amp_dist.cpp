#include "tuma/amp_dist.hpp"

#include <cmath>
#include <map>

#include "tuma/specfun.hpp"

namespace tuma {

long ApSummary::payload() const {
  long n = 0;
  for (const auto& z : log_lik) n += static_cast<long>(z.size());
  return n;
}

LocalApState local_amp_run(const CMatrix& y_b, int b, const Codebook& codebook, const MultiplicityPrior& prior,
                           const McTable& mc, const SystemConfig& cfg, const AmpOptions& opts) {
  if (y_b.cols() != cfg.antennas) throw InternalError("local_amp_run: Y_b must have A columns");
  if (b < 0 || b >= mc.aps()) throw InternalError("local_amp_run: AP index out of range");
  const McTable local_mc = mc.aps() == 1 ? mc : mc.restrict_to_ap(b);

  EffectiveChannelSet local_truth;
  AmpOptions local_opts = opts;
  if (opts.truth) {
    local_truth.ground_truth = opts.truth->ground_truth;
    for (const auto& x : opts.truth->per_zone)
      local_truth.per_zone.push_back(x.middleCols(static_cast<Eigen::Index>(b) * cfg.antennas, cfg.antennas));
    local_opts.truth = &local_truth;
  }

  DecodeResult r = amp_run(y_b, codebook, prior, local_mc, cfg, local_opts);
  LocalApState s;
  s.ap = b;
  s.tau = residual_covariance(r.residual, cfg.antennas);
  s.residual = std::move(r.residual);
  s.x_hat = std::move(r.x_hat);
  s.trace = std::move(r.trace);
  s.summary.ap = b;
  s.summary.log_lik = std::move(r.log_lik);
  return s;
}

Aggregate aggregate_posteriors(const std::vector<ApSummary>& summaries, const MultiplicityPrior& prior, int aps) {
  std::map<int, const ApSummary*> by_ap;
  for (const auto& s : summaries) {
    if (s.ap < 0 || s.ap >= aps) throw AggregationError("summary from unknown AP " + std::to_string(s.ap));
    if (!by_ap.emplace(s.ap, &s).second) throw AggregationError("duplicate summary from AP " + std::to_string(s.ap));
  }
  for (int b = 0; b < aps; ++b)
    if (!by_ap.count(b)) throw AggregationError("missing summary from AP " + std::to_string(b));

  const int zones = prior.zones, msgs = prior.messages, nk = prior.k_max + 1;
  for (const auto& [b, s] : by_ap) {
    if (static_cast<int>(s->log_lik.size()) != zones) throw AggregationError("AP " + std::to_string(b) + ": zone count");
    for (const auto& z : s->log_lik)
      if (z.rows() != msgs || z.cols() != nk) throw AggregationError("AP " + std::to_string(b) + ": table shape");
  }

  Aggregate out;
  RVector post(nk);
  for (int u = 0; u < zones; ++u) {
    RMatrix total = RMatrix::Zero(msgs, nk);
    for (const auto& [b, s] : by_ap) total += s->log_lik[u];
    const RMatrix pz = zone_prior(prior, u);
    RMatrix pu(msgs, nk);
    for (int m = 0; m < msgs; ++m) {
      if (!posterior_from_loglik(pz.row(m).transpose(), total.row(m).transpose(), post)) ++out.degenerate_rows;
      pu.row(m) = post.transpose();
    }
    out.posteriors.push_back(std::move(pu));
  }
  out.k_hat = estimate_multiplicities(out.posteriors);
  std::tie(out.k_global, out.t_hat) = estimate_type(out.k_hat);
  return out;
}

DecodeResult distributed_decode(const CMatrix& y, const Codebook& codebook, const MultiplicityPrior& prior,
                                const McTable& mc, const SystemConfig& cfg, const AmpOptions& opts) {
  const int aps = mc.aps(), a = cfg.antennas;
  if (y.cols() != static_cast<Eigen::Index>(aps) * a) throw InternalError("distributed_decode: Y width != B*A");

  std::vector<LocalApState> locals;
  std::vector<ApSummary> summaries;
  AmpOptions quiet = opts;
  quiet.diagnostics = nullptr;
  for (int b = 0; b < aps; ++b) {
    locals.push_back(local_amp_run(y.middleCols(static_cast<Eigen::Index>(b) * a, a), b, codebook, prior, mc, cfg,
                                   quiet));
    summaries.push_back(locals.back().summary);
  }
  Aggregate agg = aggregate_posteriors(summaries, prior, aps);

  DecodeResult r;
  r.k_hat = std::move(agg.k_hat);
  r.k_global = std::move(agg.k_global);
  r.t_hat = std::move(agg.t_hat);
  r.posteriors = std::move(agg.posteriors);
  r.degenerate_rows = agg.degenerate_rows;
  r.residual.resize(y.rows(), y.cols());
  r.x_hat.assign(prior.zones, CMatrix(prior.messages, y.cols()));
  r.log_lik.assign(prior.zones, RMatrix::Zero(prior.messages, prior.k_max + 1));
  for (int b = 0; b < aps; ++b) {
    r.residual.middleCols(static_cast<Eigen::Index>(b) * a, a) = locals[b].residual;
    for (int u = 0; u < prior.zones; ++u) {
      r.x_hat[u].middleCols(static_cast<Eigen::Index>(b) * a, a) = locals[b].x_hat[u];
      r.log_lik[u] += locals[b].summary.log_lik[u];
    }
  }
  for (int t = 0; t < cfg.amp_iters; ++t) {
    IterationRecord rec;
    rec.t = t + 1;
    rec.tau.resize(aps);
    for (int b = 0; b < aps; ++b) {
      const auto& lr = locals[b].trace[t];
      rec.tau[b] = lr.tau[0];
      rec.degenerate_rows += lr.degenerate_rows;
      if (lr.est_error) rec.est_error = rec.est_error.value_or(0.0) + *lr.est_error;
      if (lr.tau_excess) rec.tau_excess = rec.tau_excess.value_or(0.0) + *lr.tau_excess;
    }
    if (opts.diagnostics) write_iteration_json(*opts.diagnostics, rec);
    r.trace.push_back(std::move(rec));
  }
  return r;
}

namespace {

nlohmann::json encode_log(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

nlohmann::json summary_to_json(const ApSummary& s) {
  nlohmann::json zones = nlohmann::json::array();
  for (const auto& z : s.log_lik) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index m = 0; m < z.rows(); ++m) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index k = 0; k < z.cols(); ++k) row.push_back(encode_log(z(m, k)));
      rows.push_back(std::move(row));
    }
    zones.push_back(std::move(rows));
  }
  // -inf (impossible hypothesis) is written as null.
  return {{"ap", s.ap}, {"log_lik", zones}};
}

ApSummary summary_from_json(const nlohmann::json& j) {
  ApSummary s;
  try {
    s.ap = j.at("ap").get<int>();
    for (const auto& rows : j.at("log_lik")) {
      const Eigen::Index m = static_cast<Eigen::Index>(rows.size());
      const Eigen::Index nk = m ? static_cast<Eigen::Index>(rows[0].size()) : 0;
      RMatrix z(m, nk);
      for (Eigen::Index i = 0; i < m; ++i) {
        if (static_cast<Eigen::Index>(rows[i].size()) != nk) throw AggregationError("ragged summary table");
        for (Eigen::Index k = 0; k < nk; ++k) z(i, k) = rows[i][k].is_null() ? kNegInf : rows[i][k].get<double>();
      }
      s.log_lik.push_back(std::move(z));
    }
  } catch (const nlohmann::json::exception& e) {
    throw AggregationError(std::string("malformed AP summary: ") + e.what());
  }
  return s;
}

}  // namespace tuma
