#include "capmink/measure.hpp"

#include <algorithm>
#include <cmath>

#include "capmink/errors.hpp"
#include "capmink/simplex.hpp"

namespace capmink {

double SurfaceMeasure::total_mass() const {
  double s = 0.0;
  for (const Atom& a : atoms) s += a.weight;
  return s;
}

Vec2 SurfaceMeasure::weighted_centroid() const {
  Vec2 c{0.0, 0.0};
  for (const Atom& a : atoms) c = c + a.weight * unit_vec(a.theta);
  return c;
}

SurfaceMeasure make_measure(std::vector<Atom> atoms) {
  if (atoms.empty()) throw EmptyMeasure("make_measure: no atoms");
  for (const Atom& a : atoms)
    if (!(a.weight > 0.0))
      throw BadInput("make_measure: atom weight must be positive (got " +
                     std::to_string(a.weight) + ")");
  for (Atom& a : atoms) a.theta = wrap_angle(a.theta);
  std::sort(atoms.begin(), atoms.end(),
            [](const Atom& a, const Atom& b) { return a.theta < b.theta; });
  SurfaceMeasure mu;
  for (const Atom& a : atoms) {
    if (!mu.atoms.empty() && angle_dist(a.theta, mu.atoms.back().theta) <= TOL_ANGLE)
      mu.atoms.back().weight += a.weight;
    else
      mu.atoms.push_back(a);
  }
  if (mu.size() >= 2 &&
      angle_dist(mu.atoms.front().theta, mu.atoms.back().theta) <= TOL_ANGLE) {
    mu.atoms.front().weight += mu.atoms.back().weight;
    mu.atoms.pop_back();
  }
  return mu;
}

AdmissibilityReport validate_measure(const SurfaceMeasure& mu) {
  if (mu.atoms.empty()) throw EmptyMeasure("validate_measure: no atoms");
  AdmissibilityReport rep;
  rep.centroid = mu.weighted_centroid();
  rep.centroid_residual = norm(rep.centroid);
  const double mass = mu.total_mass();
  rep.balanced = rep.centroid_residual <= TOL_CENTROID_REL * mass;

  const int n = mu.size();
  for (int i = 0; i < n && !rep.has_antipodal_pair; ++i)
    for (int j = i + 1; j < n; ++j)
      if (angle_dist(mu.atoms[i].theta, wrap_angle(mu.atoms[j].theta + PI)) <=
          TOL_ANGLE) {
        rep.has_antipodal_pair = true;
        rep.antipodal_i = i;
        rep.antipodal_j = j;
        break;
      }

  // min over directions of integral |theta . xi| dmu; the minimum sits at a
  // kink (a quarter turn from an atom), so those angles plus a uniform grid
  // pin it down.
  std::vector<double> cand;
  cand.reserve(2 * n + 720);
  for (const Atom& a : mu.atoms) {
    cand.push_back(a.theta);
    cand.push_back(wrap_angle(a.theta + PI / 2));
  }
  for (int g = 0; g < 720; ++g) cand.push_back(2.0 * PI * g / 720.0);
  double inf = 1e300;
  for (double t : cand) {
    double v = 0.0;
    for (const Atom& a : mu.atoms) v += a.weight * std::fabs(std::cos(t - a.theta));
    inf = std::min(inf, v);
  }
  rep.equator_infimum = inf;
  rep.admissible = rep.balanced && !rep.has_antipodal_pair;
  return rep;
}

SurfaceMeasure project_to_centroid_zero(const SurfaceMeasure& mu) {
  const int n = mu.size();
  if (n < 3)
    throw InfeasibleProjection("project_to_centroid_zero: need at least 3 atoms");
  // Positive weights cannot balance if every direction fits in a closed
  // half-circle.
  double max_gap = 0.0;
  for (int j = 0; j < n; ++j) {
    const double a = mu.atoms[j].theta;
    const double b = (j + 1 < n) ? mu.atoms[j + 1].theta : mu.atoms[0].theta + 2 * PI;
    max_gap = std::max(max_gap, b - a);
  }
  if (max_gap >= PI - TOL_ANGLE)
    throw InfeasibleProjection(
        "project_to_centroid_zero: directions lie in a closed half-circle");

  const double mass = mu.total_mass();
  const double floor_w = 1e-8 * mass / n;

  std::vector<double> w(n);
  std::vector<bool> floored(n, false);
  for (int pass = 0; pass <= n; ++pass) {
    // Equality-constrained least squares on the free weights.
    Eigen::Matrix2d M = Eigen::Matrix2d::Zero();
    Eigen::Vector2d rhs = Eigen::Vector2d::Zero();
    for (int j = 0; j < n; ++j) {
      const Vec2 z = unit_vec(mu.atoms[j].theta);
      const Eigen::Vector2d zj(z.x, z.y);
      if (floored[j])
        rhs += floor_w * zj;
      else {
        M += zj * zj.transpose();
        rhs += mu.atoms[j].weight * zj;
      }
    }
    if (std::fabs(M.determinant()) < 1e-12)
      throw InfeasibleProjection(
          "project_to_centroid_zero: free directions do not span the plane");
    const Eigen::Vector2d lam = M.inverse() * rhs;
    int worst = -1;
    double worst_val = floor_w;
    for (int j = 0; j < n; ++j) {
      if (floored[j]) {
        w[j] = floor_w;
        continue;
      }
      const Vec2 z = unit_vec(mu.atoms[j].theta);
      w[j] = mu.atoms[j].weight - (lam[0] * z.x + lam[1] * z.y);
      if (w[j] < worst_val) {
        worst_val = w[j];
        worst = j;
      }
    }
    if (worst < 0) break;
    floored[worst] = true;
    if (pass == n)
      throw InfeasibleProjection("project_to_centroid_zero: no feasible point");
  }

  SurfaceMeasure out;
  out.atoms.resize(n);
  Vec2 resid{0.0, 0.0};
  double new_mass = 0.0;
  for (int j = 0; j < n; ++j) {
    out.atoms[j] = {mu.atoms[j].theta, w[j]};
    resid = resid + w[j] * unit_vec(mu.atoms[j].theta);
    new_mass += w[j];
  }
  if (norm(resid) > 1e-12 * new_mass)
    throw InfeasibleProjection("project_to_centroid_zero: residual " +
                               std::to_string(norm(resid)) + " after projection");
  return out;
}

// ====== density discretization ======

namespace {

// Periodic 4-point (cubic Lagrange) interpolation on a uniform grid.
double interp_periodic(const std::vector<double>& f, double t) {
  const int n = static_cast<int>(f.size());
  const double h = 2.0 * PI / n;
  double u = wrap_angle(t) / h;
  int i0 = static_cast<int>(std::floor(u));
  if (i0 >= n) i0 -= n;
  const double x = u - i0;
  const double lm1 = -x * (x - 1.0) * (x - 2.0) / 6.0;
  const double l0 = (x + 1.0) * (x - 1.0) * (x - 2.0) / 2.0;
  const double l1 = -(x + 1.0) * x * (x - 2.0) / 2.0;
  const double l2 = (x + 1.0) * x * (x - 1.0) / 6.0;
  const int im = (i0 + n - 1) % n;
  const int i1 = (i0 + 1) % n;
  const int i2 = (i0 + 2) % n;
  return lm1 * f[im] + l0 * f[i0] + l1 * f[i1] + l2 * f[i2];
}

// Composite Simpson over [a, b].
double simpson(const std::vector<double>& f, double a, double b, int panels) {
  const double h = (b - a) / (2 * panels);
  double s = interp_periodic(f, a) + interp_periodic(f, b);
  for (int i = 1; i < 2 * panels; ++i)
    s += interp_periodic(f, a + i * h) * ((i % 2) ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace

SurfaceMeasure discretize_density(const DensitySamples& density, int m) {
  const int n = static_cast<int>(density.theta.size());
  if (n != static_cast<int>(density.psi.size()))
    throw LengthMismatch("discretize_density: theta_rad has " + std::to_string(n) +
                         " entries, psi has " + std::to_string(density.psi.size()));
  if (n < 8) throw BadInput("discretize_density: need at least 8 samples");
  if (m < 3) throw BadInput("discretize_density: need at least 3 cells");
  for (int i = 0; i < n; ++i) {
    if (std::fabs(density.theta[i] - 2.0 * PI * i / n) > 1e-9)
      throw BadInput("discretize_density: theta_rad[" + std::to_string(i) +
                     "] is not on the uniform grid 2*pi*i/n");
    if (!(density.psi[i] > 0.0))
      throw NonpositiveDensity("discretize_density: psi[" + std::to_string(i) +
                               "] = " + std::to_string(density.psi[i]));
  }

  // Cell centers.  Odd m: half-cell offset keeps centers off antipodal pairs.
  // Even m: a uniform shift cannot do that (k and k+m/2 always differ by pi),
  // so a golden-ratio jitter of the individual centers is used instead.
  const double phi0 = 0.5 * (std::sqrt(5.0) - 1.0);
  std::vector<double> center(m);
  if (m % 2 == 1) {
    for (int k = 0; k < m; ++k) center[k] = wrap_angle(2.0 * PI * (k + 0.5) / m);
  } else {
    double eps = 0.2;
    for (int attempt = 0;; ++attempt) {
      for (int k = 0; k < m; ++k) {
        double frac = (k + 1) * phi0;
        frac -= std::floor(frac);
        center[k] = wrap_angle(2.0 * PI * (k + phi0 + eps * (frac - 0.5)) / m);
      }
      bool anti = false;
      for (int a = 0; a < m && !anti; ++a)
        for (int b = a + 1; b < m; ++b)
          if (angle_dist(center[a], wrap_angle(center[b] + PI)) <= 64 * TOL_ANGLE) {
            anti = true;
            break;
          }
      if (!anti) break;
      if (attempt > 40)
        throw BadInput("discretize_density: could not avoid antipodal centers");
      eps = std::min(0.45, eps * 1.37);
    }
    std::sort(center.begin(), center.end());
  }

  // Weights: integral of psi over the angular cell around each center.
  std::vector<Atom> atoms(m);
  const double hs = 2.0 * PI / n;
  for (int k = 0; k < m; ++k) {
    const double prev = (k == 0) ? center[m - 1] - 2.0 * PI : center[k - 1];
    const double next = (k == m - 1) ? center[0] + 2.0 * PI : center[k + 1];
    const double a = 0.5 * (prev + center[k]);
    const double b = 0.5 * (center[k] + next);
    const int panels = std::max(8, 2 * static_cast<int>(std::ceil((b - a) / hs)));
    atoms[k] = {center[k], simpson(density.psi, a, b, panels)};
  }
  return project_to_centroid_zero(make_measure(atoms));
}

// ====== weak (bounded-Lipschitz) distance ======

double weak_distance(const SurfaceMeasure& mu, const SurfaceMeasure& nu) {
  if (mu.atoms.empty() || nu.atoms.empty())
    throw EmptyMeasure("weak_distance: empty measure");
  // Merged support with signed weights.
  std::vector<std::pair<double, double>> pts;
  pts.reserve(mu.size() + nu.size());
  for (const Atom& a : mu.atoms) pts.push_back({a.theta, a.weight});
  for (const Atom& a : nu.atoms) pts.push_back({a.theta, -a.weight});
  std::sort(pts.begin(), pts.end());
  std::vector<double> th, g;
  for (const auto& [t, w] : pts) {
    if (!th.empty() && angle_dist(t, th.back()) <= TOL_ANGLE)
      g.back() += w;
    else {
      th.push_back(t);
      g.push_back(w);
    }
  }
  if (th.size() >= 2 && angle_dist(th.front(), th.back()) <= TOL_ANGLE) {
    g.front() += g.back();
    th.pop_back();
    g.pop_back();
  }
  // Points with zero signed weight do not enter the objective, and dropping
  // them only chains adjacent Lipschitz constraints together.
  std::vector<double> tk, gk;
  for (size_t i = 0; i < th.size(); ++i)
    if (std::fabs(g[i]) > 0.0) {
      tk.push_back(th[i]);
      gk.push_back(g[i]);
    }
  const int n = static_cast<int>(tk.size());
  if (n == 0) return 0.0;
  if (n == 1) return std::fabs(gk[0]);

  // Variables x_i = f_i + 1 in [0,2]; maximize sum g_i x_i - sum g_i subject
  // to box rows and cyclic difference rows |x_{i+1} - x_i| <= gap_i.
  const int rows = n + 2 * n;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, n);
  Eigen::VectorXd b(rows);
  Eigen::VectorXd c(n);
  for (int i = 0; i < n; ++i) {
    A(i, i) = 1.0;
    b(i) = 2.0;
    c(i) = gk[i];
  }
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    const double gap = (i + 1 < n) ? tk[i + 1] - tk[i] : tk[0] + 2.0 * PI - tk[n - 1];
    A(n + 2 * i, j) = 1.0;
    A(n + 2 * i, i) = -1.0;
    b(n + 2 * i) = gap;
    A(n + 2 * i + 1, i) = 1.0;
    A(n + 2 * i + 1, j) = -1.0;
    b(n + 2 * i + 1) = gap;
  }
  SimplexResult res = simplex_maximize(A, b, c);
  if (!res.ok) throw IllConditioned("weak_distance: transport LP did not solve");
  double shift = 0.0;
  for (int i = 0; i < n; ++i) shift += gk[i];
  return std::max(0.0, res.value - shift);
}

}  // namespace capmink
