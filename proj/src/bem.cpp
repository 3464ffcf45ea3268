#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "capmink/errors.hpp"
#include "capmink/potential.hpp"

namespace capmink {

namespace {

// Two-sided power grading of [0,1] toward both endpoints.
double grade01b(double u, double q) {
  if (u <= 0.5) return 0.5 * std::pow(2.0 * u, q);
  return 1.0 - 0.5 * std::pow(2.0 * (1.0 - u), q);
}

// Exact integral of log|x - y| over a straight panel [a, b].
double panel_log_integral(const Vec2& x, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double L = norm(ab);
  const Vec2 t = (1.0 / L) * ab;
  const Vec2 w = x - a;
  const double c0 = dot(w, t);
  const double h2 = std::max(sqnorm(w) - c0 * c0, 0.0);
  const double h = std::sqrt(h2);
  auto F = [&](double v) {
    const double r2 = v * v + h2;
    if (r2 == 0.0) return 0.0;
    double val = 0.5 * v * std::log(r2) - v;
    if (h > 0.0) val += h * std::atan(v / h);
    return val;
  };
  return F(L - c0) - F(-c0);
}

}  // namespace

PotentialSolution solve_harmonic_bem(const ConvexPolygon& P, const SolverConfig& cfg, Exec ex) {
  validate_config(cfg);
  const int m = static_cast<int>(P.size());

  // Per-edge panel count: honor cfg.panels but cap the dense system size.
  const int budget = 4096;
  const int per_edge = std::max(4, std::min(cfg.panels, std::max(4, budget / m)));
  const double q = std::min(1.0 / (1.0 - std::min(cfg.grading, 0.95)), 6.0);

  struct Panel {
    int edge;
    double s0, s1;
    Vec2 a, b, mid;
    double len;
  };
  std::vector<Panel> pan;
  pan.reserve(static_cast<std::size_t>(m) * per_edge);
  for (int j = 0; j < m; ++j) {
    const double L = P.edge_length(j);
    const Vec2 e0 = P.edge_begin(j);
    const Vec2 t = tangent_of(P.theta(j));
    double sprev = 0.0;
    for (int i = 1; i <= per_edge; ++i) {
      const double s = (i == per_edge) ? L : grade01b(double(i) / per_edge, q) * L;
      Panel pl;
      pl.edge = j;
      pl.s0 = sprev;
      pl.s1 = s;
      pl.a = e0 + sprev * t;
      pl.b = e0 + s * t;
      pl.mid = e0 + 0.5 * (sprev + s) * t;
      pl.len = s - sprev;
      pan.push_back(pl);
      sprev = s;
    }
  }
  const int N = static_cast<int>(pan.size());

  // Collocation system for the equilibrium density sigma and the constant
  // gamma: single-layer log potential is constant on the boundary, total
  // density mass is one.  The augmented block keeps the system nonsingular
  // for every contour scale.
  Eigen::MatrixXd A(N + 1, N + 1);
  par_for(
      static_cast<std::size_t>(N),
      [&](std::size_t i) {
        for (int j = 0; j < N; ++j)
          A(i, j) = panel_log_integral(pan[i].mid, pan[j].a, pan[j].b);
        A(i, N) = -1.0;
      },
      ex);
  for (int j = 0; j < N; ++j) A(N, j) = pan[j].len;
  A(N, N) = 0.0;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N + 1);
  rhs[N] = 1.0;

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  {
    const Eigen::VectorXd d = lu.matrixLU().diagonal().cwiseAbs();
    const double dmax = d.maxCoeff(), dmin = d.minCoeff();
    if (!(dmin > 0.0) || dmax / dmin > 1e14)
      throw IllConditioned("boundary panel matrix is numerically singular");
  }
  const Eigen::VectorXd sol_vec = lu.solve(rhs);

  PotentialSolution sol;
  sol.p = 2.0;
  sol.cfg = cfg;
  sol.backend = PotentialSolution::Backend::bem;
  sol.robin_gamma = sol_vec[N];
  sol.panels_used = N;
  sol.trace.per_edge.assign(m, {});
  sol.trace.edge_len.resize(m);
  for (int j = 0; j < m; ++j) sol.trace.edge_len[j] = P.edge_length(j);
  for (int k = 0; k < N; ++k) {
    const double grad = 2.0 * PI * sol_vec[k];
    sol.trace.per_edge[pan[k].edge].push_back({pan[k].s0, pan[k].s1, grad});
  }
  return sol;
}

}  // namespace capmink
