#include "capmink/capacitary.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>

#include "capmink/errors.hpp"

namespace capmink {

namespace {

// p = 2 is handled through the Robin constant rather than the p < 2 trace
// integral, so the two regimes are dispatched on this predicate.
bool harmonic_exponent(double p) { return p >= 2.0 - 1e-12; }

// Shared preconditions: exponent in range, solution solved at that exponent,
// and (when the boundary trace is consumed) solved on this very polygon.
void check_pair(const ConvexPolygon& P, double p, const PotentialSolution& sol,
                bool need_trace) {
  if (p < P_MIN - 1e-12 || p > P_MAX + 1e-12) {
    std::ostringstream os;
    os << "exponent p=" << p << " outside the supported range [" << P_MIN
       << ", " << P_MAX << "]";
    throw BadInput(os.str());
  }
  if (sol.backend == PotentialSolution::Backend::bem && !harmonic_exponent(p))
    throw BackendUnavailable(
        "the boundary-integral backend is harmonic-only (p = 2); "
        "use the volume backend for p < 2");
  if (std::abs(sol.p - p) > 1e-12) {
    std::ostringstream os;
    os << "potential was solved at p=" << sol.p << " but p=" << p
       << " was requested";
    throw BadInput(os.str());
  }
  if (!need_trace) return;
  if (static_cast<int>(sol.trace.per_edge.size()) != P.size())
    throw BadInput(
        "potential solution does not belong to this polygon "
        "(edge count differs)");
  for (int j = 0; j < P.size(); ++j)
    if (std::abs(sol.trace.edge_len[j] - P.edge_length(j)) >
        1e-9 * (1.0 + P.edge_length(j)))
      throw BadInput(
          "potential solution does not belong to this polygon "
          "(edge lengths differ)");
}

// First zero of the angular profile f for the separable wedge solution
// u = r^lambda f(theta) of the p-Laplace equation, integrated by RK4 up to
// thmax; returns +infinity when f stays positive that far.  Writing
// H = (lambda^2 f^2 + f'^2)^{(p-2)/2}, the profile solves
//   (H f')' + lambda (lambda (p-1) - p + 2) H f = 0,  f(0) = 0, f'(0) = 1,
// which resolves to an explicit second-order ODE for f.
double wedge_crossing(double lam, double p, double thmax) {
  const int n = 2048;
  const double beta = lam * (lam * (p - 1.0) - p + 2.0);
  const double h = thmax / n;
  auto rhs = [&](double F, double G) {
    const double s = lam * lam * F * F + G * G;
    return -(beta * F * s + (p - 2.0) * lam * lam * F * G * G) /
           (lam * lam * F * F + (p - 1.0) * G * G);
  };
  double f = 0.0, g = 1.0, th = 0.0;
  for (int i = 0; i < n; ++i) {
    const double k1f = g, k1g = rhs(f, g);
    const double k2f = g + 0.5 * h * k1g;
    const double k2g = rhs(f + 0.5 * h * k1f, g + 0.5 * h * k1g);
    const double k3f = g + 0.5 * h * k2g;
    const double k3g = rhs(f + 0.5 * h * k2f, g + 0.5 * h * k2g);
    const double k4f = g + h * k3g;
    const double k4g = rhs(f + h * k3f, g + h * k3g);
    const double fn = f + h / 6.0 * (k1f + 2.0 * k2f + 2.0 * k3f + k4f);
    const double gn = g + h / 6.0 * (k1g + 2.0 * k2g + 2.0 * k3g + k4g);
    th += h;
    if (fn <= 0.0 && f > 0.0) return th - h + h * f / (f - fn);
    f = fn;
    g = gn;
  }
  return 2.0 * thmax;
}

// Gradient growth exponent at a vertex where the outward normal turns by
// `gap`: the exterior wedge solution has |grad u| ~ d^nu with
// nu = lambda(p, gap) - 1 < 0.  For p = 2 the exponent is the classical
// lambda = pi/(pi + gap); for p < 2 it is strictly smaller (the corner
// singularity strengthens as p drops), and it solves the one-dimensional
// eigenvalue problem above.  The crossing angle decreases in lambda, so
// bisection on "first zero before the wedge opening" converges to it.
double wedge_exponent(double p, double gap) {
  if (gap <= 1e-9) return 0.0;
  const double th0 = PI + gap;
  if (p >= 2.0 - 1e-12) return PI / th0 - 1.0;
  double lo = 0.02, hi = 1.2;
  for (int it = 0; it < 44; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (wedge_crossing(mid, p, th0) > th0)
      lo = mid;  // profile still positive at th0: lambda too small
    else
      hi = mid;
  }
  return 0.5 * (lo + hi) - 1.0;
}

double fan_gap(const ConvexPolygon& P, int a, int b) {
  return wrap_angle(P.theta(b) - P.theta(a));
}

// Integral of |grad u|^q over [lo, hi] within one edge.  The trace is
// sampled per cell, but the integrand is singular at the vertices, so a
// piecewise-constant rule biases the result near strong corners.  Instead,
// each cell is modeled as C * t^nu with t the distance to the nearest
// vertex, and the model is integrated in closed form over the clipped part
// of the cell.  C is calibrated so the model's cell average of g^r matches
// the sampled value's r-th power, where r is the flux power p - 1: the
// recovered trace conserves the cell integrals of g^{p-1} exactly, so this
// calibration preserves them under the model too.  Exact when the trace
// follows the corner power law, and it degenerates to the flat rule away
// from the vertices.
double seg_power(const std::vector<TraceSample>& cells, double L, double nu_b,
                 double nu_e, double q, double r, double lo, double hi) {
  double s = 0.0;
  for (const TraceSample& c : cells) {
    const double a = std::max(c.s0, lo), b = std::min(c.s1, hi);
    if (b <= a || c.grad <= 0.0) continue;
    const bool from_begin = c.s0 + c.s1 <= L;
    const double nu = from_begin ? nu_b : nu_e;
    // Full-cell distances calibrate the model; clipped ones are integrated.
    const double fa = from_begin ? c.s0 : L - c.s1;
    const double fb = from_begin ? c.s1 : L - c.s0;
    const double da = from_begin ? a : L - b;
    const double db = from_begin ? b : L - a;
    const double er = std::max(1.0 + r * nu, 0.05);
    const double eq = std::max(1.0 + q * nu, 0.05);
    const double avg_r =
        (std::pow(fb, er) - std::pow(fa, er)) / (er * (fb - fa));
    if (!(avg_r > 0.0)) continue;
    const double C = c.grad * std::pow(avg_r, -1.0 / r);
    s += std::pow(C, q) * (std::pow(db, eq) - std::pow(da, eq)) / eq;
  }
  return s;
}

// Per-edge integrals of |grad u|^q from the boundary trace.  The cells
// nearest a vertex carry the least reliable samples (the wall extrapolation
// degrades right at the corner), so a cut of radius c is removed at each end
// and re-estimated by Richardson extrapolation in the cut radius: the tail
// over [0, c] of a d^(q*nu) integrand equals the window integral over
// [c, 2c] divided by (2^alpha - 1), alpha = 1 + q*nu.  The cut scales with
// the local cell width so the window sits on resolved cells.
std::vector<double> edge_power_integrals(const ConvexPolygon& P,
                                         const PotentialSolution& sol,
                                         double q, Exec ex) {
  const int m = P.size();
  const double diam = body_metrics(P).diameter;
  const double cut_rel = sol.cfg.corner_cut_rel;
  // Vertex exponents up front: vertex j joins edges j and j+1, and equal
  // normal gaps (regular fixtures) share one eigenvalue solve.
  std::vector<double> nu_vertex(static_cast<std::size_t>(m));
  {
    std::vector<std::pair<double, double>> memo;
    for (int j = 0; j < m; ++j) {
      const double gap = fan_gap(P, j, (j + 1) % m);
      double nu = 0.0;
      bool hit = false;
      for (const auto& kv : memo)
        if (std::abs(kv.first - gap) < 1e-12) {
          nu = kv.second;
          hit = true;
          break;
        }
      if (!hit) {
        nu = wedge_exponent(sol.p, gap);
        memo.emplace_back(gap, nu);
      }
      nu_vertex[static_cast<std::size_t>(j)] = nu;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(m), 0.0);
  par_for(
      static_cast<std::size_t>(m),
      [&](std::size_t jj) {
        const int j = static_cast<int>(jj);
        const std::vector<TraceSample>& cells = sol.trace.per_edge[jj];
        const double L = sol.trace.edge_len[jj];
        const double nu_b = nu_vertex[static_cast<std::size_t>((j + m - 1) % m)];
        const double nu_e = nu_vertex[static_cast<std::size_t>(j)];
        const double r = std::max(sol.p - 1.0, 0.05);
        auto seg = [&](double a, double b) {
          return seg_power(cells, L, nu_b, nu_e, q, r, a, b);
        };
        if (cut_rel <= 0.0) {
          out[jj] = seg(0.0, L);
          return;
        }
        // Keep the two cut windows [c,2c], [L-2c,L-c] inside the edge and
        // disjoint from each other.
        const double wb = cells.front().s1 - cells.front().s0;
        const double we = cells.back().s1 - cells.back().s0;
        const double cut_b =
            std::min(std::max(cut_rel * diam, 2.0 * wb), 0.125 * L);
        const double cut_e =
            std::min(std::max(cut_rel * diam, 2.0 * we), 0.125 * L);
        const double alpha_b = std::max(0.1, 1.0 + q * nu_b);
        const double alpha_e = std::max(0.1, 1.0 + q * nu_e);
        const double core = seg(cut_b, L - cut_e);
        const double tail_b =
            seg(cut_b, 2.0 * cut_b) / (std::pow(2.0, alpha_b) - 1.0);
        const double tail_e = seg(L - 2.0 * cut_e, L - cut_e) /
                              (std::pow(2.0, alpha_e) - 1.0);
        out[jj] = core + tail_b + tail_e;
      },
      ex);
  return out;
}

// Per-facet curvature-measure weights from the distributed (volume) form of
// the Hadamard derivative.  The p-capacity equals the exterior Dirichlet
// p-energy, so its derivative along a support perturbation is, for any
// Lipschitz velocity field V with normal trace 1 on facet j and 0 on the
// others,
//   mu_j = p/(p-1) * dE(V),
//   dE(V) = sum_T A_T [ Ft/p * div V - ct * grad_u . (grad_V grad_u) ],
// with Ft = (|grad_u|^2 + eps^2)^{p/2} and ct its (p-2)/2 power.  Evaluated
// on the discrete minimizer this volume form inherits the superconvergence
// of the energy (Galerkin orthogonality cancels the first-order solution
// error) and needs no boundary extraction, which is what limits trace-based
// rules at the wedge corners.  V interpolates the exact vertex velocities
// dv/dh_j linearly along the wall and decays radially through the rings.
std::vector<double> shape_measures(const ConvexPolygon& P,
                                   const PotentialSolution& sol, Exec ex) {
  const ExteriorMesh& M = *sol.mesh;
  const double p = sol.p;
  const double eps = sol.eps_reg;
  const int m = P.size();
  const int nb = M.nb;

  // Vertex velocities: vertex j (between edges j and j+1) moves under dh_j
  // with normal components (1, 0) against (nu_j, nu_j+1); under dh_j+1 the
  // roles swap.  a[j] moves edge j's begin vertex, b[j] its end vertex.
  std::vector<Vec2> va(static_cast<std::size_t>(m)), vb(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    const Vec2 nj = P.normal(j);
    const Vec2 nm_ = P.normal((j + m - 1) % m);
    const Vec2 np_ = P.normal((j + 1) % m);
    const double cm = dot(nj, nm_), cp = dot(nj, np_);
    va[static_cast<std::size_t>(j)] =
        (1.0 / (1.0 - cm * cm)) * (nj - cm * nm_);
    vb[static_cast<std::size_t>(j)] =
        (1.0 / (1.0 - cp * cp)) * (nj - cp * np_);
  }

  // Wall placement of every boundary column: owning edge and arc position.
  std::vector<int> node_edge(static_cast<std::size_t>(nb), 0);
  std::vector<double> node_s(static_cast<std::size_t>(nb), 0.0);
  for (const WallCell& c : M.wall) {
    node_edge[static_cast<std::size_t>(c.col)] = c.edge;
    node_s[static_cast<std::size_t>(c.col)] = c.s0;
  }
  std::vector<int> first_col(static_cast<std::size_t>(m) + 1, 0);
  for (int j = 0; j < m; ++j)
    first_col[static_cast<std::size_t>(j) + 1] =
        first_col[static_cast<std::size_t>(j)] + M.per_edge_cols[j];

  // Radial decay of the velocity field: reach several rings but stay well
  // inside the resolved part of the mesh.
  const BodyMetrics met = body_metrics(P);
  const double h1 = M.layer_dist[1];
  double D = std::max(0.35 * std::sqrt(met.area / PI), 8.0 * h1);
  D = std::min(D, 0.9 * M.layer_dist[static_cast<std::size_t>(M.nr) - 1]);
  int kmax = 1;
  while (kmax < M.nr && M.layer_dist[kmax] < D) ++kmax;
  auto decay = [&](int layer) {
    const double rho = M.layer_dist[layer];
    return rho >= D ? 0.0 : 1.0 - rho / D;
  };

  std::vector<double> mu(static_cast<std::size_t>(m), 0.0);
  par_for(
      static_cast<std::size_t>(m),
      [&](std::size_t jj) {
        const int j = static_cast<int>(jj);
        const int jm_ = (j + m - 1) % m, jp_ = (j + 1) % m;
        const Vec2 a = va[jj], b = vb[jj];
        const Vec2 zero{0, 0};
        auto wall_v = [&](int col) {
          const int e = node_edge[static_cast<std::size_t>(col)];
          const double s = node_s[static_cast<std::size_t>(col)];
          if (e == j) {
            const double t = s / sol.trace.edge_len[static_cast<std::size_t>(j)];
            return a + t * (b - a);
          }
          if (e == jp_)
            return (1.0 - s / sol.trace.edge_len[static_cast<std::size_t>(jp_)]) * b;
          if (e == jm_)
            return (s / sol.trace.edge_len[static_cast<std::size_t>(jm_)]) * a;
          return zero;
        };
        double dE = 0.0;
        for (int e : {jm_, j, jp_}) {
          for (int col = first_col[static_cast<std::size_t>(e)];
               col < first_col[static_cast<std::size_t>(e) + 1]; ++col) {
            const Vec2 vw = wall_v(col);
            const Vec2 vw1 = wall_v((col + 1) % nb);
            for (int k = 0; k < kmax; ++k) {
              for (int half = 0; half < 2; ++half) {
                const std::size_t t =
                    2 * (static_cast<std::size_t>(k) * nb + col) +
                    static_cast<std::size_t>(half);
                const auto& tri = M.tri[t];
                const Vec2 v0 = M.node[tri[0]], v1 = M.node[tri[1]],
                           v2 = M.node[tri[2]];
                const double twoA = cross(v1 - v0, v2 - v0);
                const Vec2 g[3] = {
                    (1.0 / twoA) * Vec2{-(v2 - v1).y, (v2 - v1).x},
                    (1.0 / twoA) * Vec2{-(v0 - v2).y, (v0 - v2).x},
                    (1.0 / twoA) * Vec2{-(v1 - v0).y, (v1 - v0).x}};
                Vec2 gu{0, 0};
                double vxx = 0, vxy = 0, vyx = 0, vyy = 0;
                for (int i = 0; i < 3; ++i) {
                  const int n = tri[i];
                  gu = gu + sol.u[n] * g[i];
                  const int cc = n % nb;
                  const double d = decay(n / nb);
                  if (d == 0.0) continue;
                  // Nodes of this quad column: reuse the two wall values.
                  const Vec2 vn =
                      d * (cc == col ? vw : (cc == (col + 1) % nb ? vw1 : wall_v(cc)));
                  vxx += vn.x * g[i].x;
                  vxy += vn.x * g[i].y;
                  vyx += vn.y * g[i].x;
                  vyy += vn.y * g[i].y;
                }
                const double s2 = sqnorm(gu) + eps * eps;
                const double Ft = std::pow(s2, 0.5 * p);
                const double ct = std::pow(s2, 0.5 * (p - 2.0));
                const double quad = gu.x * (vxx * gu.x + vxy * gu.y) +
                                    gu.y * (vyx * gu.x + vyy * gu.y);
                dE += 0.5 * twoA * (Ft / p * (vxx + vyy) - ct * quad);
              }
            }
          }
        }
        mu[jj] = p / (p - 1.0) * dE;
      },
      ex);
  return mu;
}

// Momentum identity residual from precomputed pieces.  Supports are taken
// from the centroid: the identity is translation invariant because the
// curvature measure has zero centroid, and cancellation is mildest there.
double pohozaev_residual_from(const ConvexPolygon& P, double p,
                              const SurfaceMeasure& mu, double cap) {
  const Vec2 c = body_metrics(P).centroid;
  double lhs = 0.0;
  for (int j = 0; j < P.size(); ++j)
    lhs += (P.support(j) - dot(c, P.normal(j))) *
           mu.atoms[static_cast<std::size_t>(j)].weight;
  const double rhs = harmonic_exponent(p) ? tau_p(p) : tau_p(p) * cap;
  return std::abs(lhs - rhs) / std::abs(rhs);
}

ChainReport chain_from_cap(const ConvexPolygon& P, double p, double cap,
                           double slack) {
  const BodyMetrics met = body_metrics(P);
  ChainReport r;
  r.slack = slack;
  const double r_area = std::sqrt(met.area / PI);
  if (harmonic_exponent(p)) {
    r.labels = {"area radius", "half diameter", "twice log-capacity",
                "diameter"};
    r.values = {r_area, 0.5 * met.diameter, 2.0 * cap, met.diameter};
  } else {
    const double denom =
        2.0 * PI * std::pow((p - 1.0) / (2.0 - p), 1.0 - p);
    r.labels = {"area radius", "capacitary radius", "half diameter"};
    r.values = {r_area, std::pow(cap / denom, 1.0 / (2.0 - p)),
                0.5 * met.diameter};
  }
  r.passed = true;
  for (std::size_t i = 0; i + 1 < r.values.size(); ++i) {
    const bool ok = r.values[i] <= r.values[i + 1] * (1.0 + slack);
    r.ok.push_back(ok);
    r.passed = r.passed && ok;
  }
  return r;
}

}  // namespace

double tau_p(double p) {
  return harmonic_exponent(p) ? 2.0 * PI : (2.0 - p) / (p - 1.0);
}

double pcap(const ConvexPolygon& P, double p, const PotentialSolution& sol,
            Exec ex) {
  if (harmonic_exponent(p)) {
    // Robin constant route: gamma comes from the panel solve directly or
    // from the outer-circle mean of the volume solution.
    check_pair(P, p, sol, /*need_trace=*/false);
    return std::exp(sol.robin_gamma);
  }
  check_pair(P, p, sol, /*need_trace=*/true);
  if (sol.backend == PotentialSolution::Backend::fem) {
    // The traced cell fluxes are the exact Galerkin boundary fluxes, so the
    // plain cell sum reproduces the conserved discrete total; no quadrature
    // model can improve on it.
    double total = 0.0;
    for (const auto& cells : sol.trace.per_edge)
      for (const TraceSample& c : cells)
        total += std::pow(c.grad, p - 1.0) * (c.s1 - c.s0);
    return total;
  }
  const std::vector<double> per_edge =
      edge_power_integrals(P, sol, p - 1.0, ex);
  double total = 0.0;
  for (double v : per_edge) total += v;
  return total;
}

SurfaceMeasure curvature_measure(const ConvexPolygon& P, double p,
                                 const PotentialSolution& sol, Exec ex) {
  check_pair(P, p, sol, /*need_trace=*/true);
  // Volume backend: distributed shape derivative (superconvergent, immune to
  // the corner trace halo).  Panel backend: the density itself is the
  // corner-graded unknown, so the boundary quadrature is the sharp tool.
  const std::vector<double> w =
      (sol.backend == PotentialSolution::Backend::fem && sol.mesh)
          ? shape_measures(P, sol, ex)
          : edge_power_integrals(P, sol, p, ex);
  // Built directly (not through make_measure): the contract is exactly one
  // atom per polygon normal in fan order, and the fan is already sorted with
  // pairwise distinct directions.
  SurfaceMeasure mu;
  mu.atoms.resize(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) {
    mu.atoms[j].theta = P.theta(static_cast<int>(j));
    mu.atoms[j].weight = w[j];
  }
  return mu;
}

std::vector<double> hadamard_gradient(const ConvexPolygon& P, double p,
                                      const PotentialSolution& sol, Exec ex,
                                      int expected_normals) {
  if (expected_normals >= 0 && expected_normals != P.size()) {
    std::ostringstream os;
    os << "only " << P.size() << " of " << expected_normals
       << " prescribed normals carry an edge; the capacity gradient is "
          "one-sided at the vanished ones";
    throw InactiveNormal(os.str());
  }
  const SurfaceMeasure mu = curvature_measure(P, p, sol, ex);
  std::vector<double> g(mu.atoms.size(), 0.0);
  if (harmonic_exponent(p)) {
    const double factor = pcap(P, p, sol, ex) / (2.0 * PI);
    for (std::size_t j = 0; j < g.size(); ++j)
      g[j] = factor * mu.atoms[j].weight;
  } else {
    for (std::size_t j = 0; j < g.size(); ++j)
      g[j] = (p - 1.0) * mu.atoms[j].weight;
  }
  return g;
}

double check_pohozaev(const ConvexPolygon& P, double p,
                      const PotentialSolution& sol, Exec ex) {
  const SurfaceMeasure mu = curvature_measure(P, p, sol, ex);
  const double cap = harmonic_exponent(p) ? 0.0 : pcap(P, p, sol, ex);
  return pohozaev_residual_from(P, p, mu, cap);
}

ChainReport check_radius_chain(const ConvexPolygon& P, double p,
                               const PotentialSolution& sol, Exec ex,
                               double slack) {
  return chain_from_cap(P, p, pcap(P, p, sol, ex), slack);
}

CapacityReport capacity_report(const ConvexPolygon& P, double p,
                               const PotentialSolution& sol, Exec ex) {
  CapacityReport r;
  r.p = p;
  r.tau = tau_p(p);
  r.edge_measures = curvature_measure(P, p, sol, ex);
  double total = 0.0;
  for (const Atom& a : r.edge_measures.atoms) total += a.weight;
  r.boundary_energy = total;
  r.pcap = pcap(P, p, sol, ex);
  r.pohozaev_residual = pohozaev_residual_from(P, p, r.edge_measures, r.pcap);
  r.radius_chain = chain_from_cap(P, p, r.pcap, 0.01);
  return r;
}

TrendTable p_to_one_trend(const ConvexPolygon& P,
                          const std::vector<double>& p_list,
                          const SolverConfig& cfg, Exec ex) {
  if (p_list.empty()) throw BadInput("trend exponent list is empty");
  for (std::size_t i = 0; i < p_list.size(); ++i) {
    if (p_list[i] < P_MIN - 1e-12 || p_list[i] > 1.5 + 1e-12) {
      std::ostringstream os;
      os << "trend exponents must lie in [" << P_MIN << ", 1.5], got "
         << p_list[i];
      throw BadInput(os.str());
    }
    if (i > 0 && p_list[i] >= p_list[i - 1] - 1e-12)
      throw BadInput("trend exponents must be strictly descending");
  }
  TrendTable t;
  t.perimeter = body_metrics(P).perimeter;
  PotentialSolution prev;
  bool have_prev = false;
  for (double p : p_list) {
    PotentialSolution sol =
        solve_potential(P, p, cfg, have_prev ? &prev : nullptr, ex);
    const double cap = pcap(P, p, sol, ex);
    TrendRow row;
    row.p = p;
    row.capacity = cap;
    row.perimeter_gap = std::abs(cap - t.perimeter) / t.perimeter;
    t.rows.push_back(row);
    prev = std::move(sol);
    have_prev = true;
  }
  t.gap_decreasing = true;
  for (std::size_t i = 1; i < t.rows.size(); ++i)
    t.gap_decreasing =
        t.gap_decreasing &&
        t.rows[i].perimeter_gap <=
            t.rows[i - 1].perimeter_gap * (1.0 + 1e-9);
  return t;
}

}  // namespace capmink
