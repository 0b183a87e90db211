#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "tuma/amp.hpp"

namespace tuma {

/// What one AP ships to the CPU: log of its MC-averaged local likelihood per
/// (u, m, k), taken from its final AMP iteration.
struct ApSummary {
  int ap = -1;
  std::vector<RMatrix> log_lik;  // per zone, M x (K_max+1)

  /// Number of reals on the fronthaul.
  long payload() const;
};

struct LocalApState {
  int ap = -1;
  CMatrix residual;            // Nc x A
  RVector tau;                 // length 1, final iteration
  std::vector<CMatrix> x_hat;  // per zone, M x A
  std::vector<IterationRecord> trace;
  ApSummary summary;
};

/// AMP restricted to AP b: local residual, local tau, local denoiser and local
/// Onsager term. `y_b` holds AP b's A columns of Y. No exchange with other APs.
LocalApState local_amp_run(const CMatrix& y_b, int b, const Codebook& codebook, const MultiplicityPrior& prior,
                           const McTable& mc, const SystemConfig& cfg, const AmpOptions& opts = {});

struct Aggregate {
  std::vector<RMatrix> posteriors;
  Eigen::MatrixXi k_hat;
  Eigen::VectorXi k_global;
  std::optional<RVector> t_hat;
  int degenerate_rows = 0;
};

/// posterior(k) ∝ p(k) prod_b L_b(k), folded in AP order. `aps` is the number
/// of summaries expected; a missing one raises AggregationError.
Aggregate aggregate_posteriors(const std::vector<ApSummary>& summaries, const MultiplicityPrior& prior, int aps);

/// Every AP's local run followed by aggregation, packed like a centralized result.
DecodeResult distributed_decode(const CMatrix& y, const Codebook& codebook, const MultiplicityPrior& prior,
                                const McTable& mc, const SystemConfig& cfg, const AmpOptions& opts = {});

nlohmann::json summary_to_json(const ApSummary& s);
ApSummary summary_from_json(const nlohmann::json& j);

}  // namespace tuma
