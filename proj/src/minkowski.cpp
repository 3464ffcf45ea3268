#include "capmink/minkowski.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <utility>

#include "capmink/capacitary.hpp"
#include "capmink/errors.hpp"
#include "capmink/potential.hpp"

namespace capmink {
namespace {

double l2(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dotv(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Homogeneity degree of the capacity under dilation of the supports:
// pcap(s h) = s^(2-p) pcap(h) for p < 2, and logcap is 1-homogeneous.
double hom_degree(double p) { return p < 2.0 ? 2.0 - p : 1.0; }

// Uniform draw in [lo, hi) from explicit bits, so results do not depend on
// the standard library's distribution implementation.
double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + u * (hi - lo);
}

// Translate the supports so the area centroid sits at the origin (the
// capacity is translation invariant; fixing the gauge removes the two flat
// directions from the descent geometry).  No-op when the body degenerates.
void recenter(const std::vector<double>& th, std::vector<double>& h) {
  try {
    const ConvexPolygon P = polygon_from_support(th, h);
    const Vec2 t = body_metrics(P).centroid;
    for (std::size_t j = 0; j < h.size(); ++j) h[j] -= dot(t, unit_vec(th[j]));
  } catch (const Error&) {
  }
}

// Pull every support whose facet was pruned back inside the hull of the
// others, so a short edge reappears and the gradient is two-sided again.
void reactivate(const std::vector<double>& th, std::vector<double>& h,
                const ConvexPolygon& P) {
  std::size_t k = 0;
  for (std::size_t j = 0; j < th.size(); ++j) {
    if (k < static_cast<std::size_t>(P.size()) &&
        std::abs(P.theta(static_cast<int>(k)) - th[j]) < 1e-9) {
      ++k;
      continue;
    }
    h[j] = support_function(P, th[j]) * (1.0 - 1e-3);
  }
}

struct DescentResult {
  std::vector<double> h;   // unit-capacity supports, atom order
  std::vector<double> mu;  // facet measures there
  double lambda = 0;
  double kkt = std::numeric_limits<double>::infinity();
  double objective = 0;
  int iterations = 0;
  bool converged = false;
};

// Phase 1: minimize sum c_j h_j over {capacity >= 1, h_j > 0} by projected
// descent.  Feasibility is restored exactly through the dilation
// homogeneity, so every iterate costs one potential solve.  The mesh
// topology is frozen (warm rebuilds) while the supports drift less than 5%,
// which makes the discrete gradient a smooth function of h — the KKT
// residual of the discrete problem can then be driven to tolerance instead
// of stalling at the mesh-rounding noise floor.
DescentResult run_descent(const std::vector<double>& th,
                          const std::vector<double>& c, std::vector<double> h,
                          double p, const MinkowskiConfig& cfg, Exec ex) {
  const std::size_t m = th.size();
  const double dhom = hom_degree(p);
  const double cnorm = l2(c);

  DescentResult best;
  PotentialSolution warm;
  bool have_warm = false;
  std::vector<double> h_ref;  // supports at the last fresh mesh build
  double step = cfg.step0;

  // Translation-gauge projector.  Translating the body leaves the capacity
  // invariant, so the exact gradient has zero moment against the normal
  // directions; in the discrete gradient those two moments are pure
  // truncation error (the fixed outer circle breaks the symmetry).  The
  // target weights satisfy the same moment identity exactly, so without the
  // projection the stationarity system c = lambda*g keeps an irreducible
  // error component no support vector can remove, and the residual floors
  // near the truncation error instead of the requested tolerance.
  std::vector<double> zc(m), zs(m);
  for (std::size_t j = 0; j < m; ++j) {
    zc[j] = std::cos(th[j]);
    zs[j] = std::sin(th[j]);
  }
  const double gcc = dotv(zc, zc), gcs = dotv(zc, zs), gss = dotv(zs, zs);
  const double gram_det = gcc * gss - gcs * gcs;
  auto project_gauge = [&](std::vector<double>& g) {
    if (gram_det <= 1e-12 * gcc * gss) return;  // degenerate normal set
    const double mx = dotv(g, zc), my = dotv(g, zs);
    const double ax = (gss * mx - gcs * my) / gram_det;
    const double ay = (gcc * my - gcs * mx) / gram_det;
    for (std::size_t j = 0; j < m; ++j) g[j] -= ax * zc[j] + ay * zs[j];
  };

  // Evaluate one support vector: solve, restore capacity = 1 exactly, and
  // return the rescaled state.  Throws on degenerate geometry.
  struct Point {
    std::vector<double> h, g, mu;
    double lambda = 0, kkt = 0;
  };
  auto evaluate = [&](std::vector<double> hv) {
    ConvexPolygon P = polygon_from_support(th, hv);
    int guard = 0;
    while (P.size() < static_cast<int>(m) && guard++ < 50) {
      reactivate(th, hv, P);
      have_warm = false;  // surgery invalidates the frozen topology
      P = polygon_from_support(th, hv);
    }
    if (P.size() < static_cast<int>(m))
      throw DegenerateIterate("facet could not be reactivated");

    if (have_warm) {
      double drift = 0, scale = 0;
      for (std::size_t j = 0; j < m; ++j) {
        drift = std::max(drift, std::abs(hv[j] - h_ref[j]));
        scale += std::abs(hv[j]) / static_cast<double>(m);
      }
      if (drift > 0.05 * scale) have_warm = false;
    }
    warm = solve_potential(P, p, cfg.solver, have_warm ? &warm : nullptr, ex);
    if (!have_warm) h_ref = hv;
    have_warm = true;

    const double cap = pcap(P, p, warm, ex);
    std::vector<double> g =
        hadamard_gradient(P, p, warm, ex, static_cast<int>(m));

    // Exact feasibility restoration: dilate to capacity 1.  The warm nodal
    // values are dilation invariant, so the warm start survives the rescale.
    const double s = std::pow(1.0 / cap, 1.0 / dhom);
    Point pt;
    pt.h = std::move(hv);
    for (double& v : pt.h) v *= s;
    // The dilation moves the gauge: keep the drift reference in step so the
    // 5% refresh test compares like with like.
    for (double& v : h_ref) v *= s;
    const double gscale = std::pow(s, dhom - 1.0);
    pt.g = std::move(g);
    pt.mu.resize(m);
    const double mu_of_g = (p < 2.0) ? 1.0 / (p - 1.0) : 2.0 * PI;
    for (std::size_t j = 0; j < m; ++j) {
      pt.g[j] *= gscale;
      pt.mu[j] = pt.g[j] * mu_of_g;
    }
    // The facet measures keep the raw values (they are what certificates
    // check); only the descent direction and the residual live in the gauge.
    project_gauge(pt.g);
    pt.lambda = dotv(c, pt.g) / dotv(pt.g, pt.g);
    double r2 = 0;
    for (std::size_t j = 0; j < m; ++j) {
      const double d = c[j] - pt.lambda * pt.g[j];
      r2 += d * d;
    }
    pt.kkt = std::sqrt(r2) / cnorm;
    return pt;
  };

  recenter(th, h);
  Point cur;
  try {
    cur = evaluate(std::move(h));
  } catch (const Error&) {
    return best;  // infinite kkt: caller treats as stalled
  }

  // One projected-gradient step with backtracking.  Returns false when every
  // retry failed.
  auto plain_step = [&]() {
    std::vector<double> d(m);
    for (std::size_t j = 0; j < m; ++j) d[j] = -(c[j] - cur.lambda * cur.g[j]);
    const double hnorm = l2(cur.h);
    const double dnorm = l2(d);
    if (dnorm == 0) return false;
    const double floor =
        cfg.support_floor * hnorm / std::sqrt(static_cast<double>(m));
    for (int attempt = 0; attempt < 4; ++attempt) {
      std::vector<double> trial = cur.h;
      const double alpha = step * hnorm / dnorm;
      for (std::size_t j = 0; j < m; ++j)
        trial[j] = std::max(trial[j] + alpha * d[j], floor);
      recenter(th, trial);
      try {
        Point next = evaluate(std::move(trial));
        if (next.kkt <= cur.kkt * (1.0 + 1e-3) || attempt == 3) {
          if (next.kkt < 0.7 * cur.kkt) step = std::min(step * 1.3, 1.0);
          cur = std::move(next);
          return true;
        }
        step *= 0.25;
      } catch (const Error&) {
        step *= 0.25;
        have_warm = false;
      }
    }
    return false;
  };

  // Newton endgame on the stationarity map R(h) = c - lambda(h) g(h), with
  // the Jacobian assembled column by column from forward differences of the
  // feasibility-restored evaluation (m warm solves on the frozen mesh).  The
  // map is rank-deficient by construction — dilations and translations are
  // projected out by the restoration — so the step solves the least-squares
  // system with a truncated SVD.  Plain descent stalls near the optimum at a
  // linear rate; this closes the last three orders of magnitude in a handful
  // of iterations.
  auto newton_step = [&]() {
    const double hnorm = l2(cur.h);
    const double delta = 1e-5 * hnorm;
    Eigen::MatrixXd J(m, m);
    Eigen::VectorXd res(m);
    for (std::size_t j = 0; j < m; ++j)
      res(static_cast<int>(j)) = c[j] - cur.lambda * cur.g[j];
    try {
      for (std::size_t j = 0; j < m; ++j) {
        std::vector<double> hp = cur.h;
        hp[j] += delta;
        recenter(th, hp);
        const Point probe = evaluate(std::move(hp));
        for (std::size_t i = 0; i < m; ++i)
          J(static_cast<int>(i), static_cast<int>(j)) =
              ((c[i] - probe.lambda * probe.g[i]) - res(static_cast<int>(i))) /
              delta;
      }
    } catch (const Error&) {
      have_warm = false;
      return false;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(
        J, Eigen::ComputeThinU | Eigen::ComputeThinV);
    // The orbit directions are null only to first order, so their finite-
    // difference singular values sit at O(delta), not at machine precision;
    // the genuine shape modes stay O(1).  Truncate relative to the leading
    // singular value with a margin wide enough to swallow the O(delta) tail,
    // or the solve inverts orbit noise and the step explodes.
    svd.setThreshold(1e-2);
    Eigen::VectorXd dh = svd.solve(-res);
    for (int damp = 0; damp < 4; ++damp) {
      std::vector<double> trial = cur.h;
      for (std::size_t j = 0; j < m; ++j) trial[j] += dh(static_cast<int>(j));
      recenter(th, trial);
      try {
        Point next = evaluate(std::move(trial));
        if (next.kkt < cur.kkt) {
          cur = std::move(next);
          return true;
        }
      } catch (const Error&) {
        have_warm = false;
      }
      dh *= 0.5;
    }
    return false;
  };

  int it = 0, it_mark = 0;
  double kkt_mark = std::numeric_limits<double>::infinity();
  while (true) {
    ++it;
    if (cur.kkt < best.kkt) {
      best.h = cur.h;
      best.mu = cur.mu;
      best.lambda = cur.lambda;
      best.kkt = cur.kkt;
      best.objective = dotv(c, cur.h);
    }
    if (cur.kkt < 0.99 * kkt_mark) {
      kkt_mark = cur.kkt;
      it_mark = it;
    }
    if (cur.kkt <= cfg.tol_kkt) {
      best.converged = true;
      break;
    }
    if (it >= cfg.max_iters) break;
    if (it - it_mark >= 30) break;  // stalled: no 1% gain in 30 iterations

    const bool endgame = cur.kkt < 1e-3 && m <= 128;
    if (endgame && newton_step()) continue;
    if (!plain_step()) break;  // stalled
  }
  best.iterations = it;
  return best;
}

std::string admissibility_message(const SurfaceMeasure& mu,
                                  const AdmissibilityReport& rep) {
  std::ostringstream os;
  if (rep.has_antipodal_pair) {
    os << "target measure has antipodal directions: atoms " << rep.antipodal_i
       << " and " << rep.antipodal_j << " (theta "
       << mu.atoms[rep.antipodal_i].theta << " and "
       << mu.atoms[rep.antipodal_j].theta << ")";
  } else {
    os << "target measure is unbalanced: |sum w_j zeta_j| = "
       << rep.centroid_residual << " exceeds 1e-10 * mass";
  }
  return os.str();
}

}  // namespace

ConvexPolygon classical_polygon(const SurfaceMeasure& mu) {
  const AdmissibilityReport rep = validate_measure(mu);
  if (!rep.admissible) throw Inadmissible(admissibility_message(mu, rep));

  // Chain the rotated edge vectors in angular order; admissibility closes
  // the chain exactly, and sorted normals make the chain convex.
  const int m = mu.size();
  std::vector<double> th(m), h(m);
  Vec2 w{0, 0};
  for (int j = 0; j < m; ++j) {
    const double t = mu.atoms[j].theta;
    th[j] = t;
    const Vec2 nu = unit_vec(t);
    w = w + mu.atoms[j].weight * Vec2{-nu.y, nu.x};
    h[j] = dot(w, nu);
  }
  recenter(th, h);
  return polygon_from_support(th, h);
}

MinkowskiSolution solve_discrete(const MinkowskiProblem& prob, Exec ex) {
  const AdmissibilityReport rep = validate_measure(prob.target);
  if (!rep.admissible)
    throw Inadmissible(admissibility_message(prob.target, rep));
  if (prob.target.size() < 3)
    throw Inadmissible("target needs at least three directions");
  if (!(prob.p >= P_MIN && prob.p <= P_MAX)) {
    std::ostringstream os;
    os << "exponent p = " << prob.p << " outside [" << P_MIN << ", " << P_MAX
       << "]";
    throw BadInput(os.str());
  }

  const int m = prob.target.size();
  std::vector<double> th(m), c(m);
  for (int j = 0; j < m; ++j) {
    th[j] = prob.target.atoms[j].theta;
    c[j] = prob.target.atoms[j].weight;
  }

  const ConvexPolygon P0 = classical_polygon(prob.target);
  std::vector<double> h0(m);
  for (int j = 0; j < m; ++j) h0[j] = support_function(P0, th[j]);

  std::mt19937_64 rng(prob.config.seed);
  DescentResult best;
  int total_iters = 0;
  const int tries = 1 + std::max(0, prob.config.stall_restarts);
  for (int t = 0; t < tries; ++t) {
    std::vector<double> h = h0;
    const double jit = (t == 0) ? prob.config.init_jitter : 0.4;
    if (jit > 0)
      for (double& v : h) v *= std::exp(uniform(rng, -jit, jit));
    DescentResult r = run_descent(th, c, std::move(h), prob.p, prob.config, ex);
    total_iters += r.iterations;
    if (r.kkt < best.kkt) best = std::move(r);
    if (best.converged) break;
  }
  if (!std::isfinite(best.kkt))
    throw DegenerateIterate(
        "every descent start collapsed before producing an iterate");

  // Phase 2: dilate so the measure hits the target scale.  Atoms scale as
  // r^(1-p) under dilation by r (r^-1 at p = 2), so matching the totals
  // pins r; at the optimum the per-atom ratios agree to the KKT residual.
  // The totals are taken from a certificate-grade solve of the optimum, not
  // from the coarser descent solves, so the final scale carries the best
  // available accuracy.
  SolverConfig cert = prob.config.solver;
  cert.elements = std::max(cert.elements, prob.config.certificate_elements);
  const ConvexPolygon Popt = polygon_from_support(th, best.h);
  const PotentialSolution sopt = solve_potential(Popt, prob.p, cert, nullptr, ex);
  const SurfaceMeasure mopt = curvature_measure(Popt, prob.p, sopt, ex);
  double mu_total = 0, c_total = 0;
  for (const Atom& a : mopt.atoms) mu_total += a.weight;
  for (int j = 0; j < m; ++j) c_total += c[j];
  const double r = std::pow(mu_total / c_total, 1.0 / (prob.p - 1.0));
  std::vector<double> hf = best.h;
  for (double& v : hf) v *= r;
  recenter(th, hf);
  ConvexPolygon Pf = polygon_from_support(th, hf);

  // Certificate: fresh solve of the delivered polygon, forward measure,
  // per-atom relative mismatch.
  const PotentialSolution sol = solve_potential(Pf, prob.p, cert, nullptr, ex);
  const SurfaceMeasure muf = curvature_measure(Pf, prob.p, sol, ex);

  MinkowskiSolution out(std::move(Pf));
  out.objective = best.objective;
  out.multiplier = best.lambda;
  out.kkt_residual = best.kkt;
  out.rescale_factor = r;
  out.optimum_measures = best.mu;
  out.measure_match.assign(m, std::numeric_limits<double>::infinity());
  if (muf.size() == m) {
    out.certificate_measures.resize(m);
    for (int j = 0; j < m; ++j) {
      out.certificate_measures[j] = muf.atoms[j].weight;
      out.measure_match[j] = std::abs(muf.atoms[j].weight - c[j]) / c[j];
    }
  }
  out.iterations = total_iters;
  out.converged = best.converged;
  return out;
}

DensityRun solve_density(const DensitySamples& psi, double p,
                         const std::vector<int>& schedule,
                         const MinkowskiConfig& cfg, Exec ex) {
  if (schedule.empty()) throw BadInput("refinement schedule is empty");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (schedule[i] < 3)
      throw BadInput("schedule entries must be at least 3 directions");
    if (i > 0 && schedule[i] <= schedule[i - 1])
      throw BadInput("schedule must be strictly increasing");
  }

  DensityRun run;
  for (int mres : schedule) {
    run.targets.push_back(discretize_density(psi, mres));
    MinkowskiProblem prob;
    prob.target = run.targets.back();
    prob.p = p;
    prob.config = cfg;
    run.solutions.push_back(solve_discrete(prob, ex));
  }
  for (std::size_t i = 1; i < run.targets.size(); ++i) {
    run.weak_distances.push_back(
        weak_distance(run.targets[i - 1], run.targets[i]));
    run.hausdorff_deltas.push_back(hausdorff_distance(
        run.solutions[i - 1].polygon, run.solutions[i].polygon));
  }
  return run;
}

double uniqueness_check(const MinkowskiProblem& prob, int n_restarts, Exec ex) {
  if (n_restarts < 1) throw BadInput("n_restarts must be positive");
  std::vector<ConvexPolygon> bodies;
  bodies.reserve(n_restarts);
  for (int i = 0; i < n_restarts; ++i) {
    MinkowskiProblem pi = prob;
    pi.config.seed = prob.config.seed + 7919u * static_cast<unsigned>(i);
    pi.config.init_jitter = (i == 0) ? prob.config.init_jitter : 0.3;
    bodies.push_back(solve_discrete(pi, ex).polygon);
  }
  double worst = 0;
  for (std::size_t i = 0; i < bodies.size(); ++i)
    for (std::size_t j = i + 1; j < bodies.size(); ++j)
      worst = std::max(worst, hausdorff_distance(bodies[i], bodies[j]));
  return worst;
}

}  // namespace capmink
