#include "tuma/specfun.hpp"

#include <algorithm>

namespace tuma {

namespace {

double log_poisson(int k, double mean) {
  if (mean == 0) return k == 0 ? 0.0 : kNegInf;
  return k * std::log(mean) - mean - std::lgamma(k + 1.0);
}

}  // namespace

double marcum_q1(double a, double b) {
  if (!(a >= 0) || !(b >= 0) || !std::isfinite(a) || !std::isfinite(b))
    throw DomainError("marcum_q1: arguments must be finite and nonnegative");
  if (b == 0) return 1.0;
  if (a == 0) return std::exp(-b * b / 2);
  // The Rician mass below b is ~Phi(b - a) < 1e-32 here.
  if (a - b > 12.0) return 1.0;

  const double lambda = a * a / 2;
  const double x = b * b / 2;

  // Visit Poisson(lambda) terms outward from the mode, always taking the
  // heavier neighbour, until the unvisited mass is below tolerance.
  const int mode = static_cast<int>(std::floor(lambda));
  int lo = mode, hi = mode;
  double mass = std::exp(log_poisson(mode, lambda));
  while (1.0 - mass >= 1e-14) {
    const double down = lo > 0 ? std::exp(log_poisson(lo - 1, lambda)) : 0.0;
    const double up = std::exp(log_poisson(hi + 1, lambda));
    if (down == 0.0 && up == 0.0) break;
    if (down >= up) {
      --lo;
      mass += down;
    } else {
      ++hi;
      mass += up;
    }
  }

  // Central tail for 2(k+1) degrees of freedom: P(Poisson(x) <= k).
  double tail = 0.0;
  for (int j = 0; j < lo; ++j) tail += std::exp(log_poisson(j, x));
  double q = 0.0;
  double log_w = log_poisson(lo, lambda);
  for (int k = lo; k <= hi; ++k) {
    tail += std::exp(log_poisson(k, x));
    q += std::exp(log_w) * std::min(tail, 1.0);
    log_w += std::log(lambda) - std::log(k + 1.0);
  }
  return std::clamp(q, 0.0, 1.0);
}

RVector LogWeightVector::normalized() const {
  const double z = logsumexp(log_weights);
  if (!std::isfinite(z)) throw DomainError("cannot normalize: no finite log-weight");
  // std::exp maps -inf to exactly 0; the vectorized exp clamps it to a denormal.
  return (log_weights.array() - z).unaryExpr([](double v) { return std::exp(v); }).matrix();
}

double log_binom_pmf(int k, int n, double p) {
  if (!(p >= 0 && p <= 1)) throw DomainError("binom_pmf: p must lie in [0,1]");
  if (n < 0) throw DomainError("binom_pmf: n must be nonnegative");
  if (k < 0 || k > n) return kNegInf;
  if (p == 0) return k == 0 ? 0.0 : kNegInf;
  if (p == 1) return k == n ? 0.0 : kNegInf;
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + k * std::log(p) +
         (n - k) * std::log1p(-p);
}

double binom_pmf(int k, int n, double p) { return std::exp(log_binom_pmf(k, n, p)); }

}  // namespace tuma
