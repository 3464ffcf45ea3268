#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "capmink/errors.hpp"
#include "capmink/measure.hpp"
#include "common.hpp"

using namespace capmink;
using doctest::Approx;

namespace {

DensitySamples sample_density(double (*f)(double), int n) {
  DensitySamples d;
  d.theta.resize(n);
  d.psi.resize(n);
  for (int i = 0; i < n; ++i) {
    d.theta[i] = 2.0 * PI * i / n;
    d.psi[i] = f(d.theta[i]);
  }
  return d;
}

double psi_one(double) { return 1.0; }
double psi_cos(double t) { return 1.0 + 0.5 * std::cos(t); }
double psi_exp_sin(double t) { return std::exp(std::sin(t)); }

SurfaceMeasure atoms(std::initializer_list<Atom> list) {
  return make_measure(std::vector<Atom>(list));
}

}  // namespace

TEST_CASE("make_measure sorts, wraps and merges duplicates") {
  SurfaceMeasure mu = atoms({{7.0, 1.0}, {0.1, 2.0}, {7.0 - 2 * PI, 3.0}});
  REQUIRE(mu.size() == 2);
  CHECK(mu.atoms[0].theta == Approx(0.1));
  CHECK(mu.atoms[1].weight == Approx(4.0));
  CHECK(mu.total_mass() == Approx(6.0));
  CHECK_THROWS_AS(make_measure({}), EmptyMeasure);
  CHECK_THROWS_AS(make_measure({{0.0, -1.0}}), BadInput);
}

TEST_CASE("validate: balanced symmetric triple is admissible") {
  SurfaceMeasure mu = atoms({{0.0, 1.0}, {2 * PI / 3, 1.0}, {4 * PI / 3, 1.0}});
  AdmissibilityReport rep = validate_measure(mu);
  CHECK(rep.balanced);
  CHECK_FALSE(rep.has_antipodal_pair);
  CHECK(rep.admissible);
  CHECK(rep.centroid_residual < 1e-14);
  // Worst equator direction is a quarter turn from an atom.
  CHECK(rep.equator_infimum == Approx(std::sqrt(3.0)).epsilon(1e-9));
}

TEST_CASE("validate: axis pairs are antipodal, tilted mass is unbalanced") {
  SurfaceMeasure sq = atoms({{0.0, 1.0}, {PI / 2, 1.0}, {PI, 1.0}, {3 * PI / 2, 1.0}});
  AdmissibilityReport rep = validate_measure(sq);
  CHECK(rep.balanced);
  CHECK(rep.has_antipodal_pair);
  CHECK_FALSE(rep.admissible);
  CHECK(rep.antipodal_i == 0);
  CHECK(rep.antipodal_j == 2);

  SurfaceMeasure tilt = atoms({{0.0, 1.5}, {2 * PI / 3, 1.0}, {4 * PI / 3, 1.0}});
  rep = validate_measure(tilt);
  CHECK_FALSE(rep.balanced);
  CHECK(rep.centroid_residual == Approx(0.5).epsilon(1e-12));
  CHECK_FALSE(rep.admissible);
}

TEST_CASE("projection: symmetric triple with one heavy atom") {
  SurfaceMeasure mu = atoms({{0.0, 1.0}, {2 * PI / 3, 1.0}, {4 * PI / 3, 1.3}});
  SurfaceMeasure out = project_to_centroid_zero(mu);
  for (const Atom& a : out.atoms) CHECK(a.weight == Approx(1.1).epsilon(1e-12));
  CHECK(norm(out.weighted_centroid()) < 1e-12 * out.total_mass());
}

TEST_CASE("projection: stationarity on the free set") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> uw(0.05, 2.0);
  for (int rep = 0; rep < 30; ++rep) {
    ConvexPolygon P = ct::random_polygon(rng, 6);  // reuse its spanning fan
    std::vector<Atom> as;
    for (int j = 0; j < P.size(); ++j) as.push_back({P.theta(j), uw(rng)});
    SurfaceMeasure mu = make_measure(as);
    SurfaceMeasure out = project_to_centroid_zero(mu);
    const double mass = out.total_mass();
    const double floor_w = 1e-8 * mu.total_mass() / mu.size();
    CHECK(norm(out.weighted_centroid()) <= 1e-12 * mass);
    // KKT: on non-floored atoms the correction is a linear functional of the
    // direction, i.e. w - w0 = -lambda . zeta for one fixed lambda.
    Eigen::Matrix2d M = Eigen::Matrix2d::Zero();
    Eigen::Vector2d rhs = Eigen::Vector2d::Zero();
    for (int j = 0; j < out.size(); ++j) {
      if (out.atoms[j].weight <= floor_w * (1 + 1e-9)) continue;
      Vec2 z = unit_vec(out.atoms[j].theta);
      Eigen::Vector2d zj(z.x, z.y);
      M += zj * zj.transpose();
      rhs += (mu.atoms[j].weight - out.atoms[j].weight) * zj;
    }
    Eigen::Vector2d lam = M.ldlt().solve(rhs);
    for (int j = 0; j < out.size(); ++j) {
      if (out.atoms[j].weight <= floor_w * (1 + 1e-9)) continue;
      Vec2 z = unit_vec(out.atoms[j].theta);
      CHECK(mu.atoms[j].weight - out.atoms[j].weight ==
            Approx(lam[0] * z.x + lam[1] * z.y).epsilon(1e-8).scale(1.0));
    }
  }
}

TEST_CASE("projection refuses half-circle supports") {
  SurfaceMeasure mu = atoms({{0.0, 1.0}, {0.5, 1.0}, {1.0, 1.0}});
  CHECK_THROWS_AS(project_to_centroid_zero(mu), InfeasibleProjection);
}

TEST_CASE("discretize: constant density, odd m") {
  SurfaceMeasure mu = discretize_density(sample_density(psi_one, 64), 3);
  REQUIRE(mu.size() == 3);
  for (int k = 0; k < 3; ++k) {
    CHECK(mu.atoms[k].weight == Approx(2 * PI / 3).epsilon(1e-12));
    CHECK(mu.atoms[k].theta == Approx(2 * PI * (k + 0.5) / 3).epsilon(1e-12));
  }
  CHECK(validate_measure(mu).admissible);
}

TEST_CASE("discretize: even m avoids antipodal centers and stays admissible") {
  for (int m : {4, 6, 8, 16, 32}) {
    SurfaceMeasure mu = discretize_density(sample_density(psi_one, 128), m);
    REQUIRE(mu.size() == m);
    AdmissibilityReport rep = validate_measure(mu);
    CHECK(rep.admissible);
    CHECK_FALSE(rep.has_antipodal_pair);
    // Balancing the jittered cells moves a little mass around; the total
    // stays within the jitter scale of the exact integral.
    CHECK(mu.total_mass() == Approx(2 * PI).epsilon(5e-3));
  }
}

TEST_CASE("discretize: total mass converges at fourth order") {
  const double exact = 7.954926521012845;  // 2*pi*I0(1) for psi = exp(sin)
  double err_c = std::fabs(discretize_density(sample_density(psi_exp_sin, 48), 5)
                               .total_mass() -
                           exact);
  double err_f = std::fabs(discretize_density(sample_density(psi_exp_sin, 96), 5)
                               .total_mass() -
                           exact);
  CHECK(err_f < err_c);
  CHECK(err_c / err_f > 8.0);  // O(n^-4): halving the spacing gains ~16x
  CHECK(err_f < 1e-6);
}

TEST_CASE("discretize: tilted density gets balanced") {
  SurfaceMeasure mu = discretize_density(sample_density(psi_cos, 128), 9);
  CHECK(validate_measure(mu).admissible);
  for (const Atom& a : mu.atoms) CHECK(a.weight > 0.0);
  // Mass redistribution, not mass invention: total stays near integral 2*pi.
  CHECK(mu.total_mass() == Approx(2 * PI).epsilon(0.05));
}

TEST_CASE("discretize input validation") {
  DensitySamples d = sample_density(psi_one, 32);
  d.psi[7] = 0.0;
  CHECK_THROWS_AS(discretize_density(d, 5), NonpositiveDensity);
  d = sample_density(psi_one, 32);
  d.psi.pop_back();
  CHECK_THROWS_AS(discretize_density(d, 5), LengthMismatch);
  d = sample_density(psi_one, 32);
  d.theta[3] += 0.01;
  CHECK_THROWS_AS(discretize_density(d, 5), BadInput);
}

TEST_CASE("weak distance: closed forms") {
  SurfaceMeasure a = atoms({{1.0, 2.0}});
  SurfaceMeasure b = atoms({{1.3, 2.0}});
  CHECK(weak_distance(a, b) == Approx(2.0 * 0.3).epsilon(1e-10));
  // Far apart (geodesic > 2): create/destroy at unit rate wins.
  SurfaceMeasure c = atoms({{1.0 + 2.5, 2.0}});
  CHECK(weak_distance(a, c) == Approx(4.0).epsilon(1e-10));
  // Same support, different mass.
  SurfaceMeasure d = atoms({{1.0, 5.0}});
  CHECK(weak_distance(a, d) == Approx(3.0).epsilon(1e-10));
  CHECK(weak_distance(a, a) == 0.0);
}

TEST_CASE("weak distance: metric axioms and scaling on random measures") {
  std::mt19937_64 rng(97);
  std::uniform_real_distribution<double> ut(0.0, 2 * PI), uw(0.1, 2.0);
  auto rand_measure = [&](int n) {
    std::vector<Atom> as;
    for (int i = 0; i < n; ++i) as.push_back({ut(rng), uw(rng)});
    return make_measure(as);
  };
  for (int rep = 0; rep < 15; ++rep) {
    SurfaceMeasure A = rand_measure(4), B = rand_measure(5), C = rand_measure(3);
    const double ab = weak_distance(A, B);
    CHECK(ab == Approx(weak_distance(B, A)).epsilon(1e-11));
    CHECK(ab + weak_distance(B, C) >= weak_distance(A, C) - 1e-11);
    CHECK(ab >= 0.0);
    // Homogeneity under scaling both measures.
    SurfaceMeasure A2 = A, B2 = B;
    for (Atom& t : A2.atoms) t.weight *= 3.0;
    for (Atom& t : B2.atoms) t.weight *= 3.0;
    CHECK(weak_distance(A2, B2) == Approx(3.0 * ab).epsilon(1e-10));
  }
}

TEST_CASE("weak distance dominates every feasible test function") {
  std::mt19937_64 rng(131);
  std::uniform_real_distribution<double> ut(0.0, 2 * PI), uw(0.1, 2.0),
      uf(-1.0, 1.0);
  for (int rep = 0; rep < 40; ++rep) {
    std::vector<Atom> as, bs;
    for (int i = 0; i < 4; ++i) as.push_back({ut(rng), uw(rng)});
    for (int i = 0; i < 4; ++i) bs.push_back({ut(rng), uw(rng)});
    SurfaceMeasure A = make_measure(as), B = make_measure(bs);
    const double d = weak_distance(A, B);

    // Random bounded Lipschitz candidate on the merged support.
    std::vector<std::pair<double, double>> pts;  // (theta, signed weight)
    for (const Atom& t : A.atoms) pts.push_back({t.theta, t.weight});
    for (const Atom& t : B.atoms) pts.push_back({t.theta, -t.weight});
    std::sort(pts.begin(), pts.end());
    const int n = static_cast<int>(pts.size());
    std::vector<double> f(n);
    f[0] = uf(rng);
    bool feasible = true;
    for (int i = 1; i < n; ++i) {
      const double gap = pts[i].first - pts[i - 1].first;
      f[i] = std::clamp(f[i - 1] + gap * uf(rng),
                        std::max(-1.0, f[i - 1] - gap),
                        std::min(1.0, f[i - 1] + gap));
    }
    const double wrap_gap = pts[0].first + 2 * PI - pts[n - 1].first;
    if (std::fabs(f[0] - f[n - 1]) > wrap_gap) feasible = false;
    if (!feasible) continue;
    double val = 0.0;
    for (int i = 0; i < n; ++i) val += pts[i].second * f[i];
    CHECK(d >= val - 1e-10);
  }
}

TEST_CASE("weak distance is deterministic") {
  SurfaceMeasure A = atoms({{0.2, 1.0}, {2.0, 0.7}, {4.0, 1.4}});
  SurfaceMeasure B = atoms({{0.3, 1.1}, {2.5, 0.9}, {5.2, 0.4}});
  const double d1 = weak_distance(A, B);
  const double d2 = weak_distance(A, B);
  CHECK(d1 == d2);
}
