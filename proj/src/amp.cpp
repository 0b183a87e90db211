#include "tuma/amp.hpp"

#include <cmath>

#include <json.hpp>

#include "tuma/rng.hpp"
#include "tuma/specfun.hpp"

namespace tuma {

namespace {

// Sample weights below this contribute nothing measurable to the Jacobian.
constexpr double kJacobianWeightCut = 1e-15;

bool all_finite(const CMatrix& m) { return m.allFinite(); }

}  // namespace

McTable::McTable(std::vector<std::vector<RMatrix>> samples) : g_(std::move(samples)) {
  for (const auto& zone : g_) {
    if (zone.size() != g_[0].size()) throw InternalError("McTable: ragged hypothesis count");
    for (const auto& s : zone)
      if (s.rows() != g_[0][0].rows() || s.cols() != g_[0][0].cols())
        throw InternalError("McTable: inconsistent sample shapes");
  }
}

McTable McTable::restrict_to_ap(int b) const {
  std::vector<std::vector<RMatrix>> out(g_.size());
  for (std::size_t u = 0; u < g_.size(); ++u)
    for (const auto& s : g_[u]) out[u].push_back(s.col(b));
  return McTable(std::move(out));
}

McTable build_mc_table(const SystemConfig& cfg, const Topology& topo, int k_max, std::uint64_t seed) {
  Rng rng = make_rng(seed, Stream::mc_samples);
  const int nb = topo.ap_count();
  std::vector<std::vector<RMatrix>> g(topo.zone_count());
  for (int u = 0; u < topo.zone_count(); ++u) {
    const Rect& z = topo.zone_rects[u];
    for (int k = 1; k <= k_max; ++k) {
      RMatrix s = RMatrix::Zero(cfg.n_mc, nb);
      for (int i = 0; i < cfg.n_mc; ++i)
        for (int j = 0; j < k; ++j)
          s.row(i) += lsfc_vector(uniform_point(rng, z.x0, z.x1, z.y0, z.y1), topo, cfg).transpose();
      g[u].push_back(std::move(s));
    }
  }
  return McTable(std::move(g));
}

RVector residual_covariance(const CMatrix& z, int antennas) {
  const Eigen::Index nb = z.cols() / antennas;
  RVector tau(nb);
  const double scale = 1.0 / (static_cast<double>(antennas) * static_cast<double>(z.rows()));
  for (Eigen::Index b = 0; b < nb; ++b) {
    // Re of the diagonal of Z^H Z is the column energy.
    const double e = z.middleCols(b * antennas, antennas).cwiseAbs2().sum();
    tau[b] = std::max(e * scale, kTauFloor);
  }
  return tau;
}

double hypothesis_loglik(const CVector& r, const RVector& tau, const RVector& g, double ec, int antennas) {
  RVector v = tau;
  if (g.size() > 0) v += ec * g;
  return log_cgauss_diag(r, std::span<const double>(v.data(), static_cast<std::size_t>(v.size())), antennas);
}

bool normalize_posterior(const RVector& log_terms, RVector& out) {
  const double z = logsumexp(log_terms);
  if (z == kNegInf || !std::isfinite(z)) return false;
  out = (log_terms.array() - z).unaryExpr([](double v) { return std::exp(v); }).matrix();
  return true;
}

bool posterior_from_loglik(const RVector& prior, const RVector& log_lik, RVector& out) {
  const RVector terms = prior.array().log().matrix() + log_lik;
  if (normalize_posterior(terms, out)) return true;
  const double s = prior.sum();
  if (s > 0) {
    out = prior / s;
  } else {
    out = RVector::Zero(prior.size());
    out[0] = 1.0;
  }
  return false;
}

RMatrix zone_prior(const MultiplicityPrior& prior, int u) {
  return prior.probs.middleRows(static_cast<Eigen::Index>(u) * prior.messages, prior.messages);
}

ZoneDenoise denoise_zone(const CMatrix& r, const RVector& tau, const std::vector<RMatrix>& samples,
                         const RMatrix& prior, double ec, int antennas) {
  const Eigen::Index m_rows = r.rows(), nb = tau.size();
  const int k_max = static_cast<int>(samples.size());
  if (r.cols() != nb * antennas) throw InternalError("denoise_zone: F != B*A");
  if (prior.rows() != m_rows || prior.cols() != k_max + 1) throw InternalError("denoise_zone: prior shape");
  const double sqrt_ec = std::sqrt(ec);

  ZoneDenoise d;
  d.tau = tau;
  d.log_lik.resize(m_rows, k_max + 1);

  RMatrix energy(m_rows, nb);
  for (Eigen::Index b = 0; b < nb; ++b)
    energy.col(b) = r.middleCols(b * antennas, antennas).cwiseAbs2().rowwise().sum();

  // k = 0: pure residual noise, one deterministic "sample".
  const double c0 = -antennas * (std::log(M_PI) * nb + tau.array().log().sum());
  d.log_lik.col(0) = (-(energy * tau.cwiseInverse())).array() + c0;

  std::vector<RMatrix> cond_shrink;  // per k, M x B
  for (int k = 1; k <= k_max; ++k) {
    const RMatrix& g = samples[k - 1];
    const Eigen::Index n = g.rows();
    RMatrix var = (ec * g).rowwise() + tau.transpose();
    RMatrix inv = var.cwiseInverse();
    RMatrix gain = sqrt_ec * g.cwiseProduct(inv);
    const RVector cst = -antennas * (var.array().log().rowwise().sum() + std::log(M_PI) * nb).matrix();

    RMatrix ll = -(energy * inv.transpose());
    ll.rowwise() += cst.transpose();
    const double log_n = std::log(static_cast<double>(n));
    for (Eigen::Index m = 0; m < m_rows; ++m) {
      const double top = ll.row(m).maxCoeff();
      if (!std::isfinite(top)) {
        ll.row(m).setZero();
        d.log_lik(m, k) = kNegInf;
        continue;
      }
      ll.row(m) = (ll.row(m).array() - top).exp();
      const double s = ll.row(m).sum();
      ll.row(m) /= s;
      d.log_lik(m, k) = top + std::log(s) - log_n;
    }
    cond_shrink.push_back(ll * gain);
    d.weights.push_back(std::move(ll));
    d.inv_var.push_back(std::move(inv));
    d.gain.push_back(std::move(gain));
  }

  d.posterior.resize(m_rows, k_max + 1);
  d.shrink = RMatrix::Zero(m_rows, nb);
  d.x_hat = CMatrix::Zero(m_rows, r.cols());
  d.degenerate.assign(m_rows, false);
  RVector post(k_max + 1);
  for (Eigen::Index m = 0; m < m_rows; ++m) {
    const bool ok = posterior_from_loglik(prior.row(m).transpose(), d.log_lik.row(m).transpose(), post);
    d.posterior.row(m) = post.transpose();
    if (!ok) {
      d.degenerate[m] = true;
      ++d.degenerate_count;
      continue;
    }
    for (int k = 1; k <= k_max; ++k) d.shrink.row(m) += post[k] * cond_shrink[k - 1].row(m);
    for (Eigen::Index b = 0; b < nb; ++b)
      d.x_hat.row(m).segment(b * antennas, antennas) = d.shrink(m, b) * r.row(m).segment(b * antennas, antennas);
  }
  return d;
}

ZoneDenoise denoise_row(const CVector& r, const RVector& tau, const std::vector<RMatrix>& samples,
                        const RVector& prior, double ec, int antennas) {
  return denoise_zone(r.transpose(), tau, samples, prior.transpose(), ec, antennas);
}

namespace {

// S[a', b'] = sum_k G_k M_k[a', b'] - H_b' Ebar_a', so that
// J[a, b] = delta_ab H_b' - conj(r_a) r_b S[a', b'].
RMatrix jacobian_core(const ZoneDenoise& d, Eigen::Index m) {
  const Eigen::Index nb = d.tau.size();
  const int k_max = static_cast<int>(d.weights.size());
  RMatrix sum_gm = RMatrix::Zero(nb, nb);
  RVector ebar = d.posterior(m, 0) * d.tau.cwiseInverse();
  for (int k = 1; k <= k_max; ++k) {
    const double gk = d.posterior(m, k);
    if (gk == 0) continue;
    const RMatrix& w = d.weights[k - 1];
    const RMatrix& inv = d.inv_var[k - 1];
    const RMatrix& gain = d.gain[k - 1];
    for (Eigen::Index i = 0; i < w.cols(); ++i) {
      const double omega = gk * w(m, i);
      if (omega < kJacobianWeightCut) continue;
      ebar.noalias() += omega * inv.row(i).transpose();
      sum_gm.noalias() += omega * inv.row(i).transpose() * gain.row(i);
    }
  }
  return sum_gm - ebar * d.shrink.row(m);
}

void accumulate_jacobian(const Eigen::Ref<const Eigen::RowVectorXcd>& r, const ZoneDenoise& d, Eigen::Index m,
                         int antennas, CMatrix& out) {
  if (d.degenerate[m]) return;
  const Eigen::Index nb = d.tau.size();
  const RMatrix s = jacobian_core(d, m);
  const CMatrix outer = r.adjoint() * r;  // [a, b] = conj(r_a) r_b
  for (Eigen::Index ap = 0; ap < nb; ++ap) {
    for (Eigen::Index bp = 0; bp < nb; ++bp)
      out.block(ap * antennas, bp * antennas, antennas, antennas) -=
          s(ap, bp) * outer.block(ap * antennas, bp * antennas, antennas, antennas);
    for (int a = 0; a < antennas; ++a) out(ap * antennas + a, ap * antennas + a) += d.shrink(m, ap);
  }
}

}  // namespace

CMatrix row_jacobian(const CVector& r, const ZoneDenoise& d, int row, int antennas) {
  CMatrix j = CMatrix::Zero(r.size(), r.size());
  accumulate_jacobian(r.transpose(), d, row, antennas, j);
  return j;
}

CMatrix onsager(const CMatrix& r, const ZoneDenoise& d, int antennas) {
  CMatrix q = CMatrix::Zero(r.cols(), r.cols());
  for (Eigen::Index m = 0; m < r.rows(); ++m) accumulate_jacobian(r.row(m), d, m, antennas, q);
  return q / static_cast<double>(r.rows());
}

Eigen::MatrixXi estimate_multiplicities(const std::vector<RMatrix>& posteriors) {
  if (posteriors.empty()) return {};
  Eigen::MatrixXi k(static_cast<Eigen::Index>(posteriors.size()), posteriors[0].rows());
  for (std::size_t u = 0; u < posteriors.size(); ++u)
    for (Eigen::Index m = 0; m < posteriors[u].rows(); ++m) {
      int best = 0;
      for (Eigen::Index j = 1; j < posteriors[u].cols(); ++j)
        if (posteriors[u](m, j) > posteriors[u](m, best)) best = static_cast<int>(j);
      k(static_cast<Eigen::Index>(u), m) = best;
    }
  return k;
}

std::pair<Eigen::VectorXi, std::optional<RVector>> estimate_type(const Eigen::MatrixXi& k_hat) {
  Eigen::VectorXi global = k_hat.colwise().sum().transpose();
  const int total = global.sum();
  if (total == 0) return {global, std::nullopt};
  return {global, RVector(global.cast<double>() / total)};
}

void write_iteration_json(std::ostream& os, const IterationRecord& rec) {
  nlohmann::json j;
  j["t"] = rec.t;
  j["tau"] = std::vector<double>(rec.tau.data(), rec.tau.data() + rec.tau.size());
  j["est_error"] = rec.est_error ? nlohmann::json(*rec.est_error) : nlohmann::json(nullptr);
  j["tau_excess"] = rec.tau_excess ? nlohmann::json(*rec.tau_excess) : nlohmann::json(nullptr);
  j["degenerate_rows"] = rec.degenerate_rows;
  os << j.dump() << '\n';
}

DecodeResult amp_run(const CMatrix& y, const Codebook& codebook, const MultiplicityPrior& prior, const McTable& mc,
                     const SystemConfig& cfg, const AmpOptions& opts) {
  const int antennas = cfg.antennas, zones = codebook.zones, msgs = codebook.messages;
  const Eigen::Index f = y.cols(), nc = y.rows();
  if (static_cast<Eigen::Index>(mc.aps()) * antennas != f) throw InternalError("amp_run: Y width != B*A");
  if (mc.zones() != zones || prior.zones != zones || prior.messages != msgs)
    throw InternalError("amp_run: zone/message counts disagree");
  if (prior.k_max != mc.k_max()) throw InternalError("amp_run: prior and MC table K_max differ");
  if (codebook.entries.rows() != nc) throw InternalError("amp_run: codebook length != Nc");
  if (opts.truth && static_cast<int>(opts.truth->per_zone.size()) != zones)
    throw InternalError("amp_run: ground truth zone count");

  const double sqrt_ec = std::sqrt(cfg.ec);
  const double alpha = static_cast<double>(msgs) / static_cast<double>(nc);
  std::vector<RMatrix> priors;
  for (int u = 0; u < zones; ++u) priors.push_back(zone_prior(prior, u));

  DecodeResult res;
  res.posteriors.resize(zones);
  res.log_lik.resize(zones);
  res.x_hat.assign(zones, CMatrix::Zero(msgs, f));
  CMatrix z = y;
  CMatrix x_all = CMatrix::Zero(static_cast<Eigen::Index>(zones) * msgs, f);

  for (int t = 1; t <= cfg.amp_iters; ++t) {
    IterationRecord rec;
    rec.t = t;
    rec.tau = residual_covariance(z, antennas);
    const CMatrix r_all = codebook.entries.adjoint() * z;
    CMatrix q_sum = CMatrix::Zero(f, f);
    for (int u = 0; u < zones; ++u) {
      const CMatrix r = r_all.middleRows(static_cast<Eigen::Index>(u) * msgs, msgs) + sqrt_ec * res.x_hat[u];
      if (!all_finite(r)) throw DecodeError(t, "non-finite effective observation");
      ZoneDenoise d = denoise_zone(r, rec.tau, mc.zone(u), priors[u], cfg.ec, antennas);
      q_sum += onsager(r, d, antennas);
      rec.degenerate_rows += d.degenerate_count;
      res.x_hat[u] = std::move(d.x_hat);
      res.posteriors[u] = std::move(d.posterior);
      res.log_lik[u] = std::move(d.log_lik);
      x_all.middleRows(static_cast<Eigen::Index>(u) * msgs, msgs) = res.x_hat[u];
    }
    CMatrix z_next = y - sqrt_ec * (codebook.entries * x_all) + (sqrt_ec * alpha) * (z * q_sum);
    if (!all_finite(z_next) || !all_finite(x_all)) throw DecodeError(t, "non-finite residual or estimate");
    z = std::move(z_next);

    if (opts.truth) {
      double err = 0;
      for (int u = 0; u < zones; ++u) err += (res.x_hat[u] - opts.truth->per_zone[u]).squaredNorm();
      rec.est_error = cfg.ec / static_cast<double>(nc) * err;
      rec.tau_excess = antennas * (residual_covariance(z, antennas).array() - cfg.sigma_w2).sum();
    }
    res.degenerate_rows = rec.degenerate_rows;
    if (opts.diagnostics) write_iteration_json(*opts.diagnostics, rec);
    res.trace.push_back(std::move(rec));
  }

  res.residual = std::move(z);
  res.k_hat = estimate_multiplicities(res.posteriors);
  std::tie(res.k_global, res.t_hat) = estimate_type(res.k_hat);
  return res;
}

}  // namespace tuma
