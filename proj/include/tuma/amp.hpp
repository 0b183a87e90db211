#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "tuma/airlink.hpp"
#include "tuma/config.hpp"
#include "tuma/priors.hpp"
#include "tuma/topology.hpp"
#include "tuma/types.hpp"

namespace tuma {

inline constexpr double kTauFloor = 1e-15;

/// Aggregate LSFC samples per (zone, hypothesis k >= 1): an N_MC x B matrix
/// whose row i is sum_j gamma_b(rho_j^i) over k i.i.d. uniform positions in
/// the zone. Drawn once and shared by every row, iteration and Jacobian.
class McTable {
 public:
  McTable() = default;
  /// samples[u][k-1] is N_MC x B.
  explicit McTable(std::vector<std::vector<RMatrix>> samples);

  int zones() const { return static_cast<int>(g_.size()); }
  int k_max() const { return g_.empty() ? 0 : static_cast<int>(g_[0].size()); }
  int n_mc() const { return k_max() ? static_cast<int>(g_[0][0].rows()) : 0; }
  int aps() const { return k_max() ? static_cast<int>(g_[0][0].cols()) : 0; }
  const RMatrix& samples(int u, int k) const { return g_.at(u).at(k - 1); }
  const std::vector<RMatrix>& zone(int u) const { return g_.at(u); }

  /// Same samples with only AP b's column; the table a lone AP would hold.
  McTable restrict_to_ap(int b) const;

 private:
  std::vector<std::vector<RMatrix>> g_;
};

McTable build_mc_table(const SystemConfig& cfg, const Topology& topo, int k_max, std::uint64_t seed);

/// Per-AP residual variance, (1/(A Nc)) sum over the AP's antennas of
/// Re[Z^H Z]_{ff}, floored at kTauFloor.
RVector residual_covariance(const CMatrix& z, int antennas);

/// log CN(r; 0, diag(tau_b + Ec g_b) kron I_A). g empty means k = 0.
double hypothesis_loglik(const CVector& r, const RVector& tau, const RVector& g, double ec, int antennas);

/// Denoiser output for all M rows of one zone, plus what the Jacobian needs.
struct ZoneDenoise {
  CMatrix x_hat;      // M x F
  RMatrix posterior;  // M x (K_max+1)
  RMatrix log_lik;    // M x (K_max+1), log of the MC-averaged likelihood
  RMatrix shrink;     // M x B, H_b
  std::vector<bool> degenerate;
  int degenerate_count = 0;

  // Cached per-sample quantities, k = 1..K_max (index k-1).
  std::vector<RMatrix> weights;  // M x N_MC self-normalized sample weights
  std::vector<RMatrix> inv_var;  // N_MC x B, 1 / (tau_b + Ec g_b)
  std::vector<RMatrix> gain;     // N_MC x B, sqrt(Ec) g_b / (tau_b + Ec g_b)
  RVector tau;
};

/// Posterior-mean denoiser applied row-wise. `prior` is M x (K_max+1) with
/// the prior pmf of each row; `samples` is the zone's McTable slice.
ZoneDenoise denoise_zone(const CMatrix& r, const RVector& tau, const std::vector<RMatrix>& samples,
                         const RMatrix& prior, double ec, int antennas);

/// Single-row convenience wrapper.
ZoneDenoise denoise_row(const CVector& r, const RVector& tau, const std::vector<RMatrix>& samples,
                        const RVector& prior, double ec, int antennas);

/// Average Wirtinger Jacobian (1/M) sum_m d eta_b / d r_a of the denoiser
/// evaluated in `d`, F x F, row index a.
CMatrix onsager(const CMatrix& r, const ZoneDenoise& d, int antennas);

/// Jacobian of a single row, exposed for tests.
CMatrix row_jacobian(const CVector& r, const ZoneDenoise& d, int row, int antennas);

/// Prior pmf rows of one zone, M x (K_max+1).
RMatrix zone_prior(const MultiplicityPrior& prior, int u);

/// Normalizes log p(k) + log L(k) into a posterior. Returns false (and
/// leaves `out` untouched) when every term is -inf.
bool normalize_posterior(const RVector& log_terms, RVector& out);

/// Posterior from a prior pmf row and log-likelihoods. On an all -inf row the
/// renormalized prior is returned instead (point mass at 0 if the prior row is
/// empty) and the result is false.
bool posterior_from_loglik(const RVector& prior, const RVector& log_lik, RVector& out);

struct IterationRecord {
  int t = 0;
  RVector tau;                          // used by iteration t
  std::optional<double> est_error;      // (Ec/Nc) sum_u ||X_u^(t) - X_u||_F^2
  std::optional<double> tau_excess;     // sum_b A (tau_b(Z^(t)) - sigma_w^2)
  int degenerate_rows = 0;
};

struct DecodeResult {
  Eigen::MatrixXi k_hat;            // U x M
  Eigen::VectorXi k_global;         // M
  std::optional<RVector> t_hat;     // nullopt: nothing detected
  std::vector<RMatrix> posteriors;  // per zone, M x (K_max+1)
  std::vector<RMatrix> log_lik;     // per zone, final-iteration log L
  std::vector<CMatrix> x_hat;       // per zone, M x F
  CMatrix residual;                 // final Z
  std::vector<IterationRecord> trace;
  int degenerate_rows = 0;          // rows that fell back to the prior, final iteration

  bool empty_type() const { return !t_hat.has_value(); }
};

Eigen::MatrixXi estimate_multiplicities(const std::vector<RMatrix>& posteriors);
/// Global multiplicities and normalized type; type is nullopt when all zero.
std::pair<Eigen::VectorXi, std::optional<RVector>> estimate_type(const Eigen::MatrixXi& k_hat);

struct AmpOptions {
  const EffectiveChannelSet* truth = nullptr;  // enables error tracking
  std::ostream* diagnostics = nullptr;         // JSON lines, one per iteration
};

/// Multisource AMP with the multiplicity-aware denoiser. The number of APs is
/// taken from `mc`, F from Y. Throws DecodeError on non-finite iterates.
DecodeResult amp_run(const CMatrix& y, const Codebook& codebook, const MultiplicityPrior& prior, const McTable& mc,
                     const SystemConfig& cfg, const AmpOptions& opts = {});

void write_iteration_json(std::ostream& os, const IterationRecord& rec);

}  // namespace tuma
