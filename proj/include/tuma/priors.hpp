#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tuma/config.hpp"
#include "tuma/rng.hpp"
#include "tuma/scene.hpp"
#include "tuma/topology.hpp"

namespace tuma {

/// Detection probability tabulated against range, linear interpolation.
/// Used by the prior integrals, which evaluate p_d tens of millions of times.
class DetectionProfile {
 public:
  DetectionProfile(const SystemConfig& cfg, double max_range, int nodes = 20001);
  double operator()(double distance) const;

 private:
  double step_;
  std::vector<double> values_;
};

/// p(k_{u,m} = k) for k = 0..k_max, row index u*M + m.
struct MultiplicityPrior {
  int zones = 0;
  int messages = 0;
  int k_max = 0;
  int sensors = 0;  // K
  RMatrix probs;
  double p_active = 0;
  RMatrix msg_probs;  // U x M, rows sum to one
  PriorSampling sampling;

  auto row(int u, int m) const { return probs.row(static_cast<Eigen::Index>(u) * messages + m); }
  double log_prob(int u, int m, int k) const;
};

/// Average over sensor positions of 1 - I(s)^T, with I(s) the mean of
/// 1 - p_d(s, p) over one shared set of target samples.
double compute_p_active(const SystemConfig& cfg, const Topology& topo, int sensor_samples, int target_samples,
                        std::uint64_t seed);

/// J(s, p)^(T-1) where J = mean over target samples p' of
/// 1 - p_d(s, p') * 1{|s - p'| < |s - p|}.
double compute_p_closest(const Point& s, const Point& p, const SystemConfig& cfg, int target_samples,
                         std::uint64_t seed);

/// Per-zone message selection probabilities, U x M with unit row sums.
/// `raw`, when given, receives the unnormalized estimates.
RMatrix compute_msg_probs(const SystemConfig& cfg, const Topology& topo, const Quantizer& q,
                          const PriorSampling& sampling, std::uint64_t seed, RMatrix* raw = nullptr);

/// Distribution of active users in one zone: sum over Ka of
/// Bin(k; Ka, 1/U) Bin(Ka; K, p_active), for k = 0..K.
RVector zone_activity_distribution(int sensors, int zones, double p_active);

/// Untruncated p(k_{u,m} = k) for k = 0..K.
RVector full_multiplicity_distribution(int sensors, int zones, double p_active, double msg_prob);

/// Truncates to k <= k_max without renormalizing.
MultiplicityPrior build_prior(const SystemConfig& cfg, double p_active, const RMatrix& msg_probs);

/// Smallest k with cumulative untruncated mass >= 1 - tol in every (u, m).
int auto_k_max(int sensors, int zones, double p_active, const RMatrix& msg_probs, double tol = 1e-4);

/// Runs the full pipeline with seeds from the priors stream of cfg.master_seed.
MultiplicityPrior compute_prior(const SystemConfig& cfg, const Topology& topo);

// Cache keyed by a hash of every config field the prior depends on.
std::string prior_config_hash(const SystemConfig& cfg);
void save_prior(const MultiplicityPrior& prior, const std::string& hash, const std::string& path);
std::optional<MultiplicityPrior> load_prior(const std::string& path, const std::string& expected_hash);
/// Loads `<dir>/prior-<hash>.json` or computes and writes it. Empty dir disables caching.
MultiplicityPrior load_or_compute_prior(const SystemConfig& cfg, const Topology& topo, const std::string& dir);

}  // namespace tuma
