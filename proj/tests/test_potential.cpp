#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "capmink/errors.hpp"
#include "capmink/mesh.hpp"
#include "capmink/potential.hpp"
#include "common.hpp"

using namespace capmink;

namespace {

SolverConfig quick_cfg(int elements) {
  SolverConfig cfg;
  cfg.elements = elements;
  return cfg;
}

// Relative L1 distance between a trace and a constant reference value.
double trace_l1_error(const BoundaryTrace& tr, double ref) {
  double num = 0, den = 0;
  for (const auto& edge : tr.per_edge)
    for (const TraceSample& s : edge) {
      const double w = s.s1 - s.s0;
      num += std::abs(s.grad - ref) * w;
      den += ref * w;
    }
  return num / den;
}

// Relative L1 distance between two traces of the same polygon, skipping a
// cut neighborhood of each corner.
double trace_l1_diff(const BoundaryTrace& A, const BoundaryTrace& B, double cut) {
  double num = 0, den = 0;
  for (std::size_t j = 0; j < A.per_edge.size(); ++j) {
    const double L = A.edge_len[j];
    std::vector<double> brk{0.0, L};
    for (const auto& s : A.per_edge[j]) brk.push_back(s.s1);
    for (const auto& s : B.per_edge[j]) brk.push_back(s.s1);
    std::sort(brk.begin(), brk.end());
    auto value_at = [](const std::vector<TraceSample>& v, double s) {
      for (const auto& c : v)
        if (s >= c.s0 && s < c.s1) return c.grad;
      return v.back().grad;
    };
    for (std::size_t k = 0; k + 1 < brk.size(); ++k) {
      const double x0 = std::max(brk[k], cut), x1 = std::min(brk[k + 1], L - cut);
      if (x1 - x0 < 1e-15) continue;
      const double mid = 0.5 * (x0 + x1), w = x1 - x0;
      const double ga = value_at(A.per_edge[j], mid), gb = value_at(B.per_edge[j], mid);
      num += std::abs(ga - gb) * w;
      den += std::abs(gb) * w;
    }
  }
  return num / den;
}

double fit_loglog_slope(const std::vector<double>& d, const std::vector<double>& g) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = double(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double x = std::log(d[i]), y = std::log(g[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("mesh: structure, coverage, and quality") {
  for (auto [P, name] : {std::pair{ct::make_square(1.0), "square"},
                         std::pair{ct::make_regular(64), "64-gon"},
                         std::pair{ct::make_rect(1.0, 0.01), "thin rectangle"}}) {
    CAPTURE(name);
    const SolverConfig cfg = quick_cfg(6000);
    const ExteriorMesh M = build_mesh(P, cfg);
    CHECK(M.min_tri_area > 0.0);
    CHECK(M.tri.size() == std::size_t(2) * M.nb * M.nr);
    CHECK(std::abs(double(M.tri.size()) - cfg.elements) < 0.35 * cfg.elements);
    // outer ring exactly on the circle
    for (int i = 0; i < M.nb; ++i) {
      const double r = norm(M.node[M.node_index(M.nr, i)] - M.center);
      CHECK(std::abs(r - M.r_out) <= 1e-12 * M.r_out);
    }
    // wall cells tile each edge in order
    std::vector<double> covered(P.size(), 0.0);
    double prev_s1 = 0.0;
    int prev_edge = -1;
    for (const WallCell& w : M.wall) {
      if (w.edge != prev_edge) {
        CHECK(w.s0 == doctest::Approx(0.0));
        prev_edge = w.edge;
      } else {
        CHECK(w.s0 == doctest::Approx(prev_s1));
      }
      CHECK(w.s1 > w.s0);
      covered[w.edge] += w.s1 - w.s0;
      prev_s1 = w.s1;
    }
    for (std::size_t j = 0; j < P.size(); ++j)
      CHECK(covered[j] == doctest::Approx(P.edge_length(j)).epsilon(1e-12));
    // wall nodes lie on the polygon boundary (some support line attained)
    for (int i = 0; i < M.nb; ++i) {
      double worst = -1e300;
      for (std::size_t j = 0; j < P.size(); ++j)
        worst = std::max(worst, dot(M.node[i], P.normal(int(j))) - P.support(int(j)));
      CHECK(std::abs(worst) <= 1e-10 * M.diam);
    }
  }
}

TEST_CASE("mesh: near-boundary band keeps healthy angles") {
  for (auto m : {16, 64}) {
    const ExteriorMesh M = build_mesh(ct::make_regular(m), quick_cfg(8000));
    CHECK(M.min_angle_wall_deg > 20.0);
  }
  const ExteriorMesh Ms = build_mesh(ct::make_square(1.0), quick_cfg(8000));
  CHECK(Ms.min_angle_wall_deg > 20.0);
}

TEST_CASE("analytic disk closed forms") {
  const DiskPotential d15 = analytic_disk(1.0, 1.5);
  CHECK(d15.boundary_gradient == doctest::Approx(1.0));
  CHECK(d15.pcap == doctest::Approx(2 * PI));
  const DiskPotential d2 = analytic_disk(1.0, 2.0);
  CHECK(d2.boundary_gradient == doctest::Approx(1.0));
  CHECK(d2.pcap == doctest::Approx(1.0));
  const DiskPotential dR = analytic_disk(2.0, 1.5);
  CHECK(dR.pcap == doctest::Approx(2 * PI * std::sqrt(2.0)));
  CHECK(analytic_disk_u(1.0, 1.5, 1.0) == doctest::Approx(0.0));
  CHECK(analytic_disk_u(1.0, 1.5, 100.0) == doctest::Approx(0.99));
  CHECK(analytic_disk_u(1.0, 2.0, std::exp(1.0)) == doctest::Approx(1.0));
  CHECK_THROWS_AS(analytic_disk(-1.0, 1.5), BadInput);
  CHECK_THROWS_AS(analytic_disk(1.0, 2.5), BadInput);
}

TEST_CASE("disk oracle: boundary gradient on a fine regular polygon") {
  const ConvexPolygon P = ct::make_regular(128);
  const SolverConfig cfg = quick_cfg(6000);
  for (double p : {1.3, 1.5, 1.8, 2.0}) {
    CAPTURE(p);
    const PotentialSolution sol = solve_potential(P, p, cfg);
    const double ref = analytic_disk(1.0, p).boundary_gradient;
    CHECK(trace_l1_error(sol.trace, ref) < 0.02);
    CHECK(sol.newton_iters >= 1);
    if (p < 2.0) {
      CHECK(sol.min_u >= -1e-8);
      CHECK(sol.max_u <= 1.0 + 1e-8);
    }
    // gradient positivity everywhere
    for (const auto& e : sol.trace.per_edge)
      for (const auto& s : e) CHECK(s.grad > 0.0);
  }
}

TEST_CASE("disk oracle error decreases under simultaneous refinement") {
  std::vector<double> errs;
  const double p = 1.5;
  for (auto [m, elems] : {std::pair{16, 2500}, std::pair{32, 5000}, std::pair{64, 10000}}) {
    const PotentialSolution sol = solve_potential(ct::make_regular(m), p, quick_cfg(elems));
    errs.push_back(trace_l1_error(sol.trace, 1.0));
  }
  CHECK(errs[1] < errs[0]);
  CHECK(errs[2] < errs[1]);
}

TEST_CASE("p=2 via mesh solver: log growth and capacity constant of the disk") {
  const ConvexPolygon P = ct::make_regular(128);
  const PotentialSolution sol = solve_potential(P, 2.0, quick_cfg(6000));
  // unit disk: capacity constant 0, so exp(gamma) close to 1
  CHECK(std::exp(sol.robin_gamma) == doctest::Approx(1.0).epsilon(0.01));
  CHECK(sol.max_u > 1.5);  // grows like log of the truncation radius
}

TEST_CASE("warm start reproduces the cold solution faster") {
  const ConvexPolygon P = ct::make_regular(48);
  const SolverConfig cfg = quick_cfg(4000);
  const PotentialSolution cold = solve_potential(P, 1.5, cfg);
  const PotentialSolution warm = solve_potential(P, 1.5, cfg, &cold);
  CHECK(warm.newton_iters <= cold.newton_iters);
  CHECK(trace_l1_diff(warm.trace, cold.trace, 1e-3 * 2.0) < 1e-6);
}

TEST_CASE("square corner: gradient blow-up exponent near -1/3") {
  const ConvexPolygon P = ct::make_square(1.0);
  SUBCASE("mesh solver at p = 2") {
    const PotentialSolution sol = solve_potential(P, 2.0, quick_cfg(12000));
    std::vector<double> d, g;
    for (const auto& s : sol.trace.per_edge[0]) {
      const double mid = 0.5 * (s.s0 + s.s1);
      if (mid >= 0.02 && mid <= 0.12) {
        d.push_back(mid);
        g.push_back(s.grad);
      }
    }
    REQUIRE(d.size() >= 3);
    CHECK(fit_loglog_slope(d, g) == doctest::Approx(-1.0 / 3.0).epsilon(0.15));
  }
  SUBCASE("panel solver") {
    const PotentialSolution sol = solve_harmonic_bem(P, quick_cfg(4000));
    std::vector<double> d, g;
    for (const auto& s : sol.trace.per_edge[0]) {
      const double mid = 0.5 * (s.s0 + s.s1);
      if (mid >= 3e-3 && mid <= 6e-2) {
        d.push_back(mid);
        g.push_back(s.grad);
      }
    }
    REQUIRE(d.size() >= 4);
    CHECK(fit_loglog_slope(d, g) == doctest::Approx(-1.0 / 3.0).epsilon(0.15));
  }
}

TEST_CASE("panel solver: square capacity constant with refinement") {
  const double ref = 0.5901702995080481;  // unit-side square log-capacity
  std::vector<double> errs;
  for (int panels : {16, 32, 64}) {
    SolverConfig cfg;
    cfg.panels = panels;
    const PotentialSolution sol = solve_harmonic_bem(ct::make_square(1.0), cfg);
    errs.push_back(std::abs(std::exp(sol.robin_gamma) - ref) / ref);
  }
  CHECK(errs[2] < 0.01);
  CHECK(errs[2] <= errs[1]);
  CHECK(errs[1] <= errs[0]);
}

TEST_CASE("panel solver: disk limit and translation invariance") {
  SolverConfig cfg;
  const PotentialSolution gon = solve_harmonic_bem(ct::make_regular(64), cfg);
  CHECK(std::exp(gon.robin_gamma) == doctest::Approx(1.0).epsilon(0.005));
  // the equilibrium density is near-uniform away from the vertices (it
  // still rises like a small negative power of the vertex distance there)
  for (std::size_t j = 0; j < gon.trace.per_edge.size(); ++j) {
    const double L = gon.trace.edge_len[j];
    for (const auto& s : gon.trace.per_edge[j]) {
      const double mid = 0.5 * (s.s0 + s.s1);
      if (mid < 0.2 * L || mid > 0.8 * L) continue;
      CHECK(s.grad == doctest::Approx(1.0).epsilon(0.03));
    }
  }

  const ConvexPolygon S = ct::make_square(1.0);
  const ConvexPolygon S2 = transform(S, 1.0, Vec2{10.75, -3.0});
  const double g1 = solve_harmonic_bem(S, cfg).robin_gamma;
  const double g2 = solve_harmonic_bem(S2, cfg).robin_gamma;
  CHECK(std::abs(g1 - g2) <= 1e-10);
}

TEST_CASE("mesh and panel traces agree at p = 2") {
  const ConvexPolygon P = ct::make_square(1.0);
  const PotentialSolution fem = solve_potential(P, 2.0, quick_cfg(12000));
  const PotentialSolution bem = solve_harmonic_bem(P, quick_cfg(12000));
  const double cut = 3e-2;  // outside the corner blow-up region of each edge
  CHECK(trace_l1_diff(fem.trace, bem.trace, cut) < 0.02);
}

TEST_CASE("boundary gradient uniformly positive across inscribed fixtures") {
  // convex bodies inscribed in the unit disk share a positive lower bound
  double overall_min = 1e300;
  for (int m : {3, 4, 6, 12}) {
    const ConvexPolygon P = ct::make_regular(m, std::cos(PI / m));  // circumradius 1
    const PotentialSolution sol = solve_potential(P, 1.5, quick_cfg(4000));
    for (const auto& e : sol.trace.per_edge)
      for (const auto& s : e) overall_min = std::min(overall_min, s.grad);
  }
  CHECK(overall_min > 0.05);
}

TEST_CASE("newton budget exhaustion reported, not silently accepted") {
  SolverConfig cfg = quick_cfg(2000);
  cfg.newton_max = 1;
  CHECK_THROWS_AS(solve_potential(ct::make_square(1.0), 1.3, cfg), NewtonDivergence);
}

TEST_CASE("out-of-range exponent and config rejected") {
  CHECK_THROWS_AS(solve_potential(ct::make_square(1.0), 1.01, quick_cfg(2000)), BadInput);
  CHECK_THROWS_AS(solve_potential(ct::make_square(1.0), 2.2, quick_cfg(2000)), BadInput);
  SolverConfig bad;
  bad.elements = 10;
  CHECK_THROWS_AS(build_mesh(ct::make_square(1.0), bad), BadInput);
  SolverConfig bad2;
  bad2.grading = 1.5;
  CHECK_THROWS_AS(build_mesh(ct::make_square(1.0), bad2), BadInput);
}
