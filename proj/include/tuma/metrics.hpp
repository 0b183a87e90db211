#pragma once

#include <optional>
#include <vector>

#include "tuma/scene.hpp"
#include "tuma/types.hpp"

namespace tuma {

struct WeightedPointSet {
  std::vector<Point> points;
  RVector weights;

  /// Throws DomainError unless weights are nonnegative and sum to one (1e-9).
  void validate() const;
  int size() const { return static_cast<int>(points.size()); }
};

/// Half the l1 distance between two distributions over the same index set.
double tv_distance(const RVector& t, const RVector& t_hat);

struct TargetType {
  RVector omega;      // reporting fractions over all T targets
  int detected = 0;   // T_d
  int active = 0;     // K_a
};

/// nullopt when the scene has no active sensor.
std::optional<TargetType> target_type(const Scene& scene);

struct TransportSolution {
  RMatrix plan;          // m x n flows
  double objective = 0;  // sum plan .* cost
  int pivots = 0;
};

/// Exact balanced transportation problem by the transportation simplex
/// (MODI potentials, Dantzig pricing, Bland's rule on degenerate stalls).
TransportSolution solve_transport(const RVector& supply, const RVector& demand, const RMatrix& cost);

/// Optimal plan for cost |p_i - q_j|^p after dropping zero-weight points;
/// plan rows/cols refer to the original indices.
TransportSolution wasserstein_plan(const WeightedPointSet& mu, const WeightedPointSet& nu, double p);
double wasserstein_p(const WeightedPointSet& mu, const WeightedPointSet& nu, double p);

double misdetection(int detected, int targets);

/// (W^p + c^p (1 - T_d/T))^(1/p).
double gospa_like(double w, int detected, int targets, double c, double p);

WeightedPointSet target_measure(const Scene& scene, const TargetType& tt);
WeightedPointSet type_measure(const RVector& t, const Quantizer& q);

}  // namespace tuma
