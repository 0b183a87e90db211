#include "tuma/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

namespace tuma {

namespace {

void check_distribution(const RVector& w, const char* what) {
  if (w.size() == 0) throw DomainError(std::string(what) + ": empty support");
  if ((w.array() < 0).any() || !w.allFinite()) throw DomainError(std::string(what) + ": negative or non-finite weight");
  if (std::abs(w.sum() - 1.0) > 1e-9) throw DomainError(std::string(what) + ": weights do not sum to one");
}

}  // namespace

void WeightedPointSet::validate() const {
  if (weights.size() != static_cast<Eigen::Index>(points.size()))
    throw DomainError("WeightedPointSet: points/weights length mismatch");
  check_distribution(weights, "WeightedPointSet");
}

double tv_distance(const RVector& t, const RVector& t_hat) {
  if (t.size() != t_hat.size()) throw DomainError("tv_distance: length mismatch");
  check_distribution(t, "tv_distance");
  check_distribution(t_hat, "tv_distance");
  return std::min(1.0, 0.5 * (t - t_hat).cwiseAbs().sum());
}

std::optional<TargetType> target_type(const Scene& scene) {
  TargetType tt;
  tt.omega = RVector::Zero(static_cast<Eigen::Index>(scene.targets.size()));
  for (const auto& s : scene.sensors)
    if (s.reported) {
      tt.omega[*s.reported] += 1.0;
      ++tt.active;
    }
  if (tt.active == 0) return std::nullopt;
  tt.detected = static_cast<int>((tt.omega.array() > 0).count());
  tt.omega /= tt.active;
  return tt;
}

namespace {

struct Cell {
  int i, j;
  double x;
};

// Transportation simplex over a spanning-tree basis of m + n - 1 cells.
class TransportSimplex {
 public:
  TransportSimplex(const RVector& a, const RVector& b, const RMatrix& c)
      : m_(static_cast<int>(a.size())), n_(static_cast<int>(b.size())), c_(c) {
    cost_eps_ = 1e-12 * std::max(1.0, c.cwiseAbs().maxCoeff());
    northwest(a, b);
  }

  TransportSolution solve() {
    const long cap = 50L * (m_ + n_) * std::max(m_, n_) + 1000;
    int stall = 0;
    TransportSolution sol;
    for (;;) {
      potentials();
      int ei = -1, ej = -1;
      if (stall > m_ + n_) {
        bland(ei, ej);
      } else {
        dantzig(ei, ej);
      }
      if (ei < 0) break;
      const double theta = pivot(ei, ej);
      stall = theta > 0 ? 0 : stall + 1;
      if (++sol.pivots > cap) throw InternalError("transport simplex did not terminate");
    }
    sol.plan = RMatrix::Zero(m_, n_);
    for (const auto& cell : basis_) sol.plan(cell.i, cell.j) += std::max(cell.x, 0.0);
    sol.objective = (sol.plan.array() * c_.array()).sum();
    return sol;
  }

 private:
  void northwest(RVector a, RVector b) {
    int i = 0, j = 0;
    for (;;) {
      const double x = std::min(a[i], b[j]);
      basis_.push_back({i, j, x});
      a[i] -= x;
      b[j] -= x;
      if (i == m_ - 1 && j == n_ - 1) break;
      if (i == m_ - 1)
        ++j;
      else if (j == n_ - 1)
        ++i;
      else if (a[i] < b[j])
        ++i;
      else
        ++j;
    }
  }

  // Nodes 0..m-1 are rows, m..m+n-1 columns; edges are basic cells.
  void build_adjacency() {
    adj_.assign(m_ + n_, {});
    for (int e = 0; e < static_cast<int>(basis_.size()); ++e) {
      adj_[basis_[e].i].push_back(e);
      adj_[m_ + basis_[e].j].push_back(e);
    }
  }

  int other(int e, int node) const { return node < m_ ? m_ + basis_[e].j : basis_[e].i; }

  void potentials() {
    build_adjacency();
    u_.assign(m_, 0.0);
    v_.assign(n_, 0.0);
    std::vector<char> seen(m_ + n_, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const int node = stack.back();
      stack.pop_back();
      for (int e : adj_[node]) {
        const int nxt = other(e, node);
        if (seen[nxt]) continue;
        seen[nxt] = 1;
        const Cell& cl = basis_[e];
        if (nxt >= m_)
          v_[cl.j] = c_(cl.i, cl.j) - u_[cl.i];
        else
          u_[cl.i] = c_(cl.i, cl.j) - v_[cl.j];
        stack.push_back(nxt);
      }
    }
  }

  double reduced(int i, int j) const { return c_(i, j) - u_[i] - v_[j]; }

  void dantzig(int& ei, int& ej) const {
    double best = -cost_eps_;
    for (int i = 0; i < m_; ++i)
      for (int j = 0; j < n_; ++j)
        if (const double d = reduced(i, j); d < best) {
          best = d;
          ei = i;
          ej = j;
        }
  }

  void bland(int& ei, int& ej) const {
    for (int i = 0; i < m_; ++i)
      for (int j = 0; j < n_; ++j)
        if (reduced(i, j) < -cost_eps_) {
          ei = i;
          ej = j;
          return;
        }
  }

  // Adds cell (ei, ej), pushes theta around the unique cycle, drops a blocking cell.
  double pivot(int ei, int ej) {
    const int start = m_ + ej, goal = ei;
    std::vector<int> parent_edge(m_ + n_, -1);
    std::vector<char> seen(m_ + n_, 0);
    std::vector<int> stack{start};
    seen[start] = 1;
    while (!stack.empty() && !seen[goal]) {
      const int node = stack.back();
      stack.pop_back();
      for (int e : adj_[node]) {
        const int nxt = other(e, node);
        if (seen[nxt]) continue;
        seen[nxt] = 1;
        parent_edge[nxt] = e;
        stack.push_back(nxt);
      }
    }
    if (!seen[goal]) throw InternalError("transport basis is not a spanning tree");

    // Walk back from the row node to the column node. Edges alternate -, +
    // starting at the edge that touches column ej.
    std::vector<int> path;
    for (int node = goal; node != start;) {
      const int e = parent_edge[node];
      path.push_back(e);
      node = other(e, node);
    }
    std::reverse(path.begin(), path.end());  // now starts at column ej
    double theta = std::numeric_limits<double>::infinity();
    int leave = -1;
    for (std::size_t k = 0; k < path.size(); k += 2) {
      const Cell& cl = basis_[path[k]];
      // Ties go to the lexicographically smallest cell.
      if (leave < 0 || cl.x < theta ||
          (cl.x == theta && std::tie(cl.i, cl.j) < std::tie(basis_[leave].i, basis_[leave].j))) {
        theta = cl.x;
        leave = path[k];
      }
    }
    theta = std::max(theta, 0.0);
    for (std::size_t k = 0; k < path.size(); ++k) basis_[path[k]].x += (k % 2 == 0 ? -theta : theta);
    basis_[leave] = {ei, ej, theta};
    return theta;
  }

  int m_, n_;
  const RMatrix& c_;
  double cost_eps_;
  std::vector<Cell> basis_;
  std::vector<std::vector<int>> adj_;
  std::vector<double> u_, v_;
};

}  // namespace

TransportSolution solve_transport(const RVector& supply, const RVector& demand, const RMatrix& cost) {
  if (supply.size() == 0 || demand.size() == 0) throw DomainError("solve_transport: empty side");
  if (cost.rows() != supply.size() || cost.cols() != demand.size()) throw DomainError("solve_transport: cost shape");
  if ((supply.array() < 0).any() || (demand.array() < 0).any()) throw DomainError("solve_transport: negative mass");
  const double sa = supply.sum(), sb = demand.sum();
  if (std::abs(sa - sb) > 1e-9 * std::max(1.0, sa)) throw DomainError("solve_transport: unbalanced problem");
  // Put the rounding residue on the demand side so the basis closes exactly.
  RVector b = demand * (sa / sb);
  return TransportSimplex(supply, b, cost).solve();
}

TransportSolution wasserstein_plan(const WeightedPointSet& mu, const WeightedPointSet& nu, double p) {
  if (!(p >= 1)) throw DomainError("wasserstein_p: order must be >= 1");
  mu.validate();
  nu.validate();
  std::vector<int> rows, cols;
  for (int i = 0; i < mu.size(); ++i)
    if (mu.weights[i] > 0) rows.push_back(i);
  for (int j = 0; j < nu.size(); ++j)
    if (nu.weights[j] > 0) cols.push_back(j);
  RVector a(rows.size()), b(cols.size());
  RMatrix c(rows.size(), cols.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    a[r] = mu.weights[rows[r]];
    for (std::size_t s = 0; s < cols.size(); ++s)
      c(r, s) = std::pow((mu.points[rows[r]] - nu.points[cols[s]]).norm(), p);
  }
  for (std::size_t s = 0; s < cols.size(); ++s) b[s] = nu.weights[cols[s]];

  TransportSolution small = solve_transport(a, b, c);
  TransportSolution full;
  full.plan = RMatrix::Zero(mu.size(), nu.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t s = 0; s < cols.size(); ++s) full.plan(rows[r], cols[s]) = small.plan(r, s);
  full.objective = small.objective;
  full.pivots = small.pivots;
  return full;
}

double wasserstein_p(const WeightedPointSet& mu, const WeightedPointSet& nu, double p) {
  return std::pow(std::max(0.0, wasserstein_plan(mu, nu, p).objective), 1.0 / p);
}

double misdetection(int detected, int targets) {
  if (targets <= 0 || detected < 0 || detected > targets) throw DomainError("misdetection: need 0 <= T_d <= T, T > 0");
  return 1.0 - static_cast<double>(detected) / targets;
}

double gospa_like(double w, int detected, int targets, double c, double p) {
  if (!(w >= 0)) throw DomainError("gospa_like: negative transport cost");
  return std::pow(std::pow(w, p) + std::pow(c, p) * misdetection(detected, targets), 1.0 / p);
}

WeightedPointSet target_measure(const Scene& scene, const TargetType& tt) {
  return {scene.targets, tt.omega};
}

WeightedPointSet type_measure(const RVector& t, const Quantizer& q) {
  if (t.size() != q.size()) throw DomainError("type_measure: type length != quantizer size");
  return {q.points, t};
}

}  // namespace tuma
