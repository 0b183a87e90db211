#pragma once

// Independent reference implementations used only by the tests. None of them
// share code paths with the library kernels they check.

#include <functional>
#include <vector>

#include "tuma/types.hpp"

namespace tuma::oracle {

/// Q1(a, b) by adaptive Gauss-Kronrod quadrature of its defining integral.
double marcum_q1_quadrature(double a, double b);

/// log CN(r; 0, Sigma) with a dense Hermitian covariance, via Cholesky.
double log_cgauss_dense(const CVector& r, const CMatrix& sigma);

/// Gauss-Legendre nodes and weights on [lo, hi].
void gauss_legendre(int n, double lo, double hi, std::vector<double>& x, std::vector<double>& w);

struct GridDenoise {
  RVector posterior;  // k = 0..K
  CVector x_hat;
};

/// Posterior over k and posterior mean of x for one row, integrating the
/// position uniformly over `rect` ([x0,x1]x[y0,y1]) for k = 1, 2 with a
/// tensor Gauss-Legendre rule (composite over `panels` per axis).
/// `lsfc(p)` returns the per-AP coefficient vector at p.
GridDenoise grid_denoise(const CVector& r, const RVector& tau, double ec, int antennas, const RVector& prior,
                         const std::function<RVector(double, double)>& lsfc, double x0, double x1, double y0,
                         double y1, int nodes, int panels);

/// Wirtinger Jacobian d f_b / d r_a by central differences on real and
/// imaginary parts, [a, b] layout.
CMatrix fd_wirtinger(const std::function<CVector(const CVector&)>& f, const CVector& r, double h);

/// p(k_{u,m} = k), k = 0..K, by enumerating the state of every sensor:
/// inactive, or active in one of U zones with or without message m.
RVector enumerate_multiplicity(int sensors, int zones, double p_active, double msg_prob);

/// Minimum-cost vertex of the transportation polytope by enumerating every
/// (m+n-1)-cell basis. Exponential; for m*n <= 12 or so.
double transport_vertex_enumeration(const RVector& a, const RVector& b, const RMatrix& cost);

}  // namespace tuma::oracle
