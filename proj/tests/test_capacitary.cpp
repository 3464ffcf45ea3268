#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "capmink/capacitary.hpp"
#include "capmink/errors.hpp"
#include "capmink/potential.hpp"
#include "common.hpp"

using namespace capmink;

namespace {

SolverConfig quick_cfg(int elements) {
  SolverConfig cfg;
  cfg.elements = elements;
  return cfg;
}

double weight_spread(const SurfaceMeasure& mu) {
  double lo = mu.atoms.front().weight, hi = lo, sum = 0.0;
  for (const Atom& a : mu.atoms) {
    lo = std::min(lo, a.weight);
    hi = std::max(hi, a.weight);
    sum += a.weight;
  }
  return (hi - lo) / (sum / static_cast<double>(mu.atoms.size()));
}

}  // namespace

TEST_CASE("normalization constant and closed-form disk relations") {
  CHECK(tau_p(2.0) == doctest::Approx(2.0 * PI));
  CHECK(tau_p(1.5) == doctest::Approx(1.0));
  CHECK(tau_p(1.25) == doctest::Approx(3.0));

  for (double p : {1.2, 1.5, 1.8}) {
    const double R = 1.7;
    const DiskPotential d = analytic_disk(R, p);
    // Boundary momentum integral on the disk: |grad u|^p (x.nu) = g^p R on
    // the circle, and the identity pairs it with tau_p * pcap.
    const double lhs = std::pow(d.boundary_gradient, p) * R * 2.0 * PI * R;
    CHECK(lhs == doctest::Approx(tau_p(p) * d.pcap).epsilon(1e-12));
    // The capacitary radius in the comparison chain recovers R exactly.
    const double denom = 2.0 * PI * std::pow((p - 1.0) / (2.0 - p), 1.0 - p);
    CHECK(std::pow(d.pcap / denom, 1.0 / (2.0 - p)) ==
          doctest::Approx(R).epsilon(1e-12));
  }

  // pcap tends to the perimeter as p drops toward 1 (prefactor -> 1).
  const double R = 1.0;
  double prev_gap = 1e300;
  for (double p : {1.2, 1.1, 1.05, 1.01}) {
    const double gap = std::abs(analytic_disk(R, p).pcap - 2.0 * PI * R);
    CHECK(gap < prev_gap);
    prev_gap = gap;
  }
}

TEST_CASE("disk capacity oracle with symmetric edge weights") {
  const ConvexPolygon P = ct::make_regular(128, 1.0);
  const SolverConfig cfg = quick_cfg(6000);
  for (double p : {1.3, 1.8}) {
    const PotentialSolution sol = solve_potential(P, p, cfg);
    const double cap = pcap(P, p, sol);
    CHECK(cap == doctest::Approx(analytic_disk(1.0, p).pcap).epsilon(0.02));

    const SurfaceMeasure mu = curvature_measure(P, p, sol);
    REQUIRE(mu.size() == P.size());
    CHECK(weight_spread(mu) < 0.005);
    // Zero centroid of the boundary measure (closed body).
    CHECK(norm(mu.weighted_centroid()) < 5e-3 * mu.total_mass());
  }

  // Harmonic endpoint through the volume backend: logcap of the unit disk.
  const PotentialSolution sol2 = solve_potential(P, 2.0, cfg);
  CHECK(pcap(P, 2.0, sol2) == doctest::Approx(1.0).epsilon(0.015));
}

TEST_CASE("square log-capacity from both backends") {
  // Closed form for the unit-side square.
  const double exact = 0.5901702995080481;
  const ConvexPolygon P = ct::make_square(1.0);

  const PotentialSolution bem = solve_harmonic_bem(P, quick_cfg(6000));
  CHECK(pcap(P, 2.0, bem) == doctest::Approx(exact).epsilon(0.01));

  SolverConfig fcfg = quick_cfg(12000);
  fcfg.truncation_factor = 20.0;
  const PotentialSolution fem = solve_potential(P, 2.0, fcfg);
  CHECK(pcap(P, 2.0, fem) == doctest::Approx(exact).epsilon(0.02));
  CHECK(pcap(P, 2.0, fem) ==
        doctest::Approx(pcap(P, 2.0, bem)).epsilon(0.02));

  // Fourfold symmetry of the harmonic curvature measure, via panels.
  const SurfaceMeasure mu = curvature_measure(P, 2.0, bem);
  REQUIRE(mu.size() == 4);
  CHECK(weight_spread(mu) < 0.005);
}

TEST_CASE("dilation and translation covariance") {
  const ConvexPolygon P = ct::make_regular(5, 1.0, 0.3);
  const SolverConfig cfg = quick_cfg(4000);
  const double p = 1.5;

  const PotentialSolution sol = solve_potential(P, p, cfg);
  const double cap = pcap(P, p, sol);
  const SurfaceMeasure mu = curvature_measure(P, p, sol);

  SUBCASE("dilation by two") {
    const ConvexPolygon Q = transform(P, 2.0, Vec2{0.0, 0.0});
    const PotentialSolution qsol = solve_potential(Q, p, cfg);
    // pcap(rP) = r^(2-p) pcap(P)
    CHECK(pcap(Q, p, qsol) ==
          doctest::Approx(std::pow(2.0, 2.0 - p) * cap).epsilon(0.005));
    // every curvature weight scales by r^(1-p)
    const SurfaceMeasure qmu = curvature_measure(Q, p, qsol);
    for (int j = 0; j < mu.size(); ++j)
      CHECK(qmu.atoms[j].weight ==
            doctest::Approx(std::pow(2.0, 1.0 - p) * mu.atoms[j].weight)
                .epsilon(0.005));
  }

  SUBCASE("translation invariance") {
    const ConvexPolygon Q = transform(P, 1.0, Vec2{0.37, -1.21});
    const PotentialSolution qsol = solve_potential(Q, p, cfg);
    CHECK(pcap(Q, p, qsol) == doctest::Approx(cap).epsilon(0.005));
    const SurfaceMeasure qmu = curvature_measure(Q, p, qsol);
    for (int j = 0; j < mu.size(); ++j)
      CHECK(qmu.atoms[j].weight ==
            doctest::Approx(mu.atoms[j].weight).epsilon(0.005));
  }

  SUBCASE("harmonic endpoint scales logcap linearly") {
    const ConvexPolygon Q = transform(P, 2.0, Vec2{0.0, 0.0});
    const PotentialSolution b1 = solve_harmonic_bem(P, cfg);
    const PotentialSolution b2 = solve_harmonic_bem(Q, cfg);
    CHECK(pcap(Q, 2.0, b2) ==
          doctest::Approx(2.0 * pcap(P, 2.0, b1)).epsilon(0.005));
    const SurfaceMeasure m1 = curvature_measure(P, 2.0, b1);
    const SurfaceMeasure m2 = curvature_measure(Q, 2.0, b2);
    for (int j = 0; j < m1.size(); ++j)
      CHECK(m2.atoms[j].weight ==
            doctest::Approx(0.5 * m1.atoms[j].weight).epsilon(0.005));
  }
}

TEST_CASE("momentum identity on fixtures with refinement decrease") {
  SUBCASE("near-disk at p = 1.5") {
    const ConvexPolygon P = ct::make_regular(64, 1.0);
    const PotentialSolution sol = solve_potential(P, 1.5, quick_cfg(8000));
    CHECK(check_pohozaev(P, 1.5, sol) < 0.01);
  }

  SUBCASE("square at the harmonic endpoint, panel backend") {
    const ConvexPolygon P = ct::make_square(1.0);
    const PotentialSolution bem = solve_harmonic_bem(P, quick_cfg(6000));
    // Here the identity pins the boundary momentum integral to 2 pi.
    const SurfaceMeasure mu = curvature_measure(P, 2.0, bem);
    const BodyMetrics met = body_metrics(P);
    double lhs = 0.0;
    for (int j = 0; j < P.size(); ++j)
      lhs += (P.support(j) - dot(met.centroid, P.normal(j))) *
             mu.atoms[j].weight;
    CHECK(lhs == doctest::Approx(2.0 * PI).epsilon(0.01));
    CHECK(check_pohozaev(P, 2.0, bem) < 0.01);
  }

  SUBCASE("pentagon at p = 1.5, residual drops under refinement") {
    const ConvexPolygon P = ct::make_regular(5, 1.0, 0.3);
    const PotentialSolution coarse = solve_potential(P, 1.5, quick_cfg(3000));
    const PotentialSolution fine = solve_potential(P, 1.5, quick_cfg(12000));
    const double rc = check_pohozaev(P, 1.5, coarse);
    const double rf = check_pohozaev(P, 1.5, fine);
    CHECK(rf < 0.01);
    CHECK(rf < rc);
  }
}

TEST_CASE("capacity gradient matches finite differences") {
  SUBCASE("pentagon at p = 1.5, volume backend") {
    const ConvexPolygon P = ct::make_regular(5, 1.0, 0.3);
    const SolverConfig cfg = quick_cfg(4000);
    const double p = 1.5;
    const PotentialSolution base = solve_potential(P, p, cfg);
    const std::vector<double> grad = hadamard_gradient(P, p, base);
    const double step = 1e-4 * body_metrics(P).diameter;
    for (int j = 0; j < P.size(); ++j) {
      std::vector<double> hp = P.supports(), hm = P.supports();
      hp[j] += step;
      hm[j] -= step;
      const ConvexPolygon Pp = polygon_from_support(P.thetas(), hp);
      const ConvexPolygon Pm = polygon_from_support(P.thetas(), hm);
      const PotentialSolution sp = solve_potential(Pp, p, cfg, &base);
      const PotentialSolution sm = solve_potential(Pm, p, cfg, &base);
      const double fd =
          (pcap(Pp, p, sp) - pcap(Pm, p, sm)) / (2.0 * step);
      CHECK(fd == doctest::Approx(grad[j]).epsilon(0.01));
    }
  }

  SUBCASE("hexagon at the harmonic endpoint, panel backend") {
    const ConvexPolygon P = ct::make_regular(6, 1.0, 0.15);
    const SolverConfig cfg = quick_cfg(4000);
    const PotentialSolution base = solve_harmonic_bem(P, cfg);
    const std::vector<double> grad = hadamard_gradient(P, 2.0, base);
    const double step = 1e-4 * body_metrics(P).diameter;
    for (int j = 0; j < P.size(); ++j) {
      std::vector<double> hp = P.supports(), hm = P.supports();
      hp[j] += step;
      hm[j] -= step;
      const PotentialSolution sp =
          solve_harmonic_bem(polygon_from_support(P.thetas(), hp), cfg);
      const PotentialSolution sm =
          solve_harmonic_bem(polygon_from_support(P.thetas(), hm), cfg);
      const double fd = (std::exp(sp.robin_gamma) - std::exp(sm.robin_gamma)) /
                        (2.0 * step);
      CHECK(fd == doctest::Approx(grad[j]).epsilon(0.01));
    }
  }

  SUBCASE("symmetry and the inactive-normal guard") {
    const ConvexPolygon P = ct::make_regular(6, 1.0);
    const PotentialSolution sol = solve_potential(P, 1.5, quick_cfg(2500));
    const std::vector<double> grad = hadamard_gradient(P, 1.5, sol);
    const double mean =
        std::accumulate(grad.begin(), grad.end(), 0.0) / grad.size();
    for (double g : grad) CHECK(g == doctest::Approx(mean).epsilon(0.005));
    CHECK_THROWS_AS(hadamard_gradient(P, 1.5, sol, Exec::parallel, 7),
                    InactiveNormal);
  }
}

TEST_CASE("radius comparison chains") {
  SUBCASE("disk saturates the isocapacitary bound") {
    const ConvexPolygon P = ct::make_regular(64, 1.0);
    const PotentialSolution sol = solve_potential(P, 1.5, quick_cfg(8000));
    const ChainReport r = check_radius_chain(P, 1.5, sol);
    REQUIRE(r.values.size() == 3);
    CHECK(r.passed);
    CHECK(r.values[0] == doctest::Approx(r.values[1]).epsilon(0.02));
  }

  SUBCASE("square strictly inside the chain") {
    const ConvexPolygon P = ct::make_square(1.0);
    const PotentialSolution sol = solve_potential(P, 1.7, quick_cfg(6000));
    const ChainReport r = check_radius_chain(P, 1.7, sol);
    CHECK(r.passed);
    CHECK(r.values[0] < r.values[1] * 0.999);
    CHECK(r.values[1] < r.values[2] * 0.999);
  }

  SUBCASE("thin rectangle approaches the segment capacity") {
    const ConvexPolygon P = ct::make_rect(0.5, 0.005);
    const PotentialSolution bem = solve_harmonic_bem(P, quick_cfg(4000));
    const ChainReport r = check_radius_chain(P, 2.0, bem);
    REQUIRE(r.values.size() == 4);
    CHECK(r.passed);
    // A segment of length L has logcap L/4, so twice the log-capacity hugs
    // the half-diameter from above.
    const double diam = r.values[3];
    CHECK(r.values[2] >= 0.5 * diam * 0.99);
    CHECK(r.values[2] <= 0.58 * diam);
  }
}

TEST_CASE("report bundling and error paths") {
  const ConvexPolygon P = ct::make_regular(5, 1.0, 0.3);
  const SolverConfig cfg = quick_cfg(2500);
  const double p = 1.5;
  const PotentialSolution sol = solve_potential(P, p, cfg);

  const CapacityReport rep = capacity_report(P, p, sol);
  CHECK(rep.p == p);
  CHECK(rep.tau == doctest::Approx(1.0));
  CHECK(rep.pcap > 0.0);
  REQUIRE(rep.edge_measures.size() == P.size());
  double total = 0.0;
  for (const Atom& a : rep.edge_measures.atoms) total += a.weight;
  CHECK(rep.boundary_energy ==
        doctest::Approx(total).epsilon(1e-12));
  for (int j = 0; j < P.size(); ++j)
    CHECK(rep.edge_measures.atoms[j].theta == doctest::Approx(P.theta(j)));
  CHECK(rep.pohozaev_residual < 0.05);
  CHECK(rep.radius_chain.passed);

  // Exponent mismatch between query and solution.
  CHECK_THROWS_AS(pcap(P, 1.8, sol), BadInput);
  CHECK_THROWS_AS(curvature_measure(P, 1.8, sol), BadInput);
  // Panel backend cannot answer p < 2 questions.
  const PotentialSolution bem = solve_harmonic_bem(P, cfg);
  CHECK_THROWS_AS(pcap(P, 1.5, bem), BackendUnavailable);
  CHECK_THROWS_AS(curvature_measure(P, 1.5, bem), BackendUnavailable);
  // Solution from a different polygon is rejected.
  const ConvexPolygon Q = ct::make_regular(6, 1.0);
  CHECK_THROWS_AS(pcap(Q, 1.5, sol), BadInput);
}

TEST_CASE("outer truncation insensitivity") {
  const ConvexPolygon P = ct::make_square(1.0);
  SolverConfig near_cfg = quick_cfg(4000);
  SolverConfig far_cfg = quick_cfg(4000);
  far_cfg.truncation_factor = 20.0;
  const PotentialSolution a = solve_potential(P, 1.5, near_cfg);
  const PotentialSolution b = solve_potential(P, 1.5, far_cfg);
  CHECK(pcap(P, 1.5, a) == doctest::Approx(pcap(P, 1.5, b)).epsilon(0.005));
}

TEST_CASE("capacity approaches perimeter as the exponent drops") {
  const ConvexPolygon P = ct::make_square(1.0);
  const SolverConfig cfg = quick_cfg(8000);

  const TrendTable t = p_to_one_trend(P, {1.3, 1.2, 1.1, 1.05}, cfg);
  CHECK(t.perimeter == doctest::Approx(4.0));
  REQUIRE(t.rows.size() == 4);
  CHECK(t.gap_decreasing);
  CHECK(t.rows.back().perimeter_gap < t.rows.front().perimeter_gap);
  CHECK(t.rows.back().perimeter_gap < 0.15);

  CHECK_THROWS_AS(p_to_one_trend(P, {1.1, 1.2}, cfg), BadInput);
  CHECK_THROWS_AS(p_to_one_trend(P, {1.6, 1.3}, cfg), BadInput);
  CHECK_THROWS_AS(p_to_one_trend(P, {}, cfg), BadInput);
}
