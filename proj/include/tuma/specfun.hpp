#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "tuma/types.hpp"

namespace tuma {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// First-order Marcum Q function Q1(a, b), i.e. the upper tail at b^2 of a
/// noncentral chi-square with 2 degrees of freedom and noncentrality a^2.
/// Evaluated as a Poisson(a^2/2)-weighted sum of central tails, truncated once
/// the unvisited Poisson mass drops below 1e-14.
double marcum_q1(double a, double b);

/// log of CN(r; 0, diag(v_b) kron I_A) with r laid out AP-major (antenna a of
/// AP b at index b*A + a).
template <class Derived>
double log_cgauss_diag(const Eigen::MatrixBase<Derived>& r, std::span<const double> v, int antennas) {
  const Eigen::Index nb = static_cast<Eigen::Index>(v.size());
  if (r.size() != nb * antennas) throw DomainError("log_cgauss_diag: size mismatch");
  double acc = 0.0;
  for (Eigen::Index b = 0; b < nb; ++b) {
    if (!(v[b] > 0)) throw DomainError("log_cgauss_diag: variances must be positive");
    const double energy = r.segment(b * antennas, antennas).squaredNorm();
    acc += -antennas * std::log(M_PI * v[b]) - energy / v[b];
  }
  return acc;
}

/// Max-shifted log(sum(exp(x))); -inf when every entry is -inf.
template <class Derived>
double logsumexp(const Eigen::DenseBase<Derived>& xs) {
  if (xs.size() == 0) throw DomainError("logsumexp of an empty sequence");
  const double m = xs.maxCoeff();
  if (m == kNegInf) return kNegInf;
  if (!std::isfinite(m)) return m;
  return m + std::log((xs.derived().array() - m).exp().sum());
}

inline double logsumexp(std::span<const double> xs) {
  return logsumexp(Eigen::Map<const RVector>(xs.data(), static_cast<Eigen::Index>(xs.size())));
}

/// Natural-log weights with an index meaning supplied by the caller.
struct LogWeightVector {
  RVector log_weights;

  /// Probabilities summing to one. Throws DomainError if all weights are -inf.
  RVector normalized() const;
};

double log_binom_pmf(int k, int n, double p);
/// Exact pmf via log-gamma. Returns 0 for k < 0 or k > n.
double binom_pmf(int k, int n, double p);

}  // namespace tuma
