#ifndef CAPMINK_MINKOWSKI_HPP
#define CAPMINK_MINKOWSKI_HPP

#include <cstdint>
#include <vector>

#include "capmink/kernels.hpp"
#include "capmink/measure.hpp"
#include "capmink/mesh.hpp"
#include "capmink/polygon.hpp"

namespace capmink {

// Optimizer settings for the inverse solve.
struct MinkowskiConfig {
  SolverConfig solver;        // potential solves inside the descent
  int certificate_elements = 20000;  // element budget for the final certificate
  double tol_kkt = 1e-6;      // stop when ||c - lambda g|| / ||c|| falls below
  int max_iters = 300;        // outer descent iterations per start
  double step0 = 0.2;         // initial step, relative to the support scale
  double support_floor = 1e-3;  // facet floor, relative to the mean support
  int stall_restarts = 2;     // random reinitializations if the descent stalls
  double init_jitter = 0.0;   // relative log-jitter on the initial supports
  std::uint64_t seed = 12345;  // seeds the jitter draws

  MinkowskiConfig() { solver.elements = 8000; }
};

// The inverse problem: find the convex polygon whose capacitary curvature
// measure equals `target` (admissible: zero centroid, no antipodal pair).
struct MinkowskiProblem {
  SurfaceMeasure target;
  double p = 1.5;
  MinkowskiConfig config;
};

struct MinkowskiSolution {
  explicit MinkowskiSolution(ConvexPolygon poly) : polygon(std::move(poly)) {}

  ConvexPolygon polygon;      // solution body, area centroid at the origin
  double objective = 0;       // sum_j c_j h_j at the unit-capacity optimum
  double multiplier = 0;      // KKT multiplier lambda at that optimum
  double kkt_residual = 0;    // ||c - lambda g|| / ||c|| at the best iterate
  double rescale_factor = 0;  // dilation mapping the optimum to `polygon`
  std::vector<double> optimum_measures;  // per-facet measures of the
                                         // unit-capacity optimum, atom order
  std::vector<double> certificate_measures;  // per-facet measures of
                                             // `polygon` itself, atom order,
                                             // from the certificate solve
  std::vector<double> measure_match;  // per-atom |mu_j - c_j| / c_j of
                                      // `polygon`, from the certificate solve
  int iterations = 0;
  bool converged = false;  // kkt_residual <= config.tol_kkt
};

// Solve the discrete inverse problem in two phases.  Phase 1 minimizes
// sum_j c_j h_j over support vectors with capacity >= 1 by projected
// descent: each iterate solves the exterior potential, restores capacity = 1
// exactly through the dilation homogeneity of the capacity, and steps along
// the negative projected gradient until the KKT residual meets the
// tolerance.  Phase 2 dilates the optimum so the curvature measure matches
// the target scale (measure atoms scale as r^(1-p) under dilation by r) and
// certifies the result with a fresh higher-resolution solve.  A stalled
// descent is retried from jittered supports; the best iterate is returned
// with `converged` reporting whether the tolerance was met.
// Throws Inadmissible when the target fails validate_measure, BadInput for
// an exponent outside [1.05, 2].
MinkowskiSolution solve_discrete(const MinkowskiProblem& prob,
                                 Exec ex = Exec::parallel);

// The polygon with edge normal zeta_j and edge length c_j (the classical
// two-dimensional Minkowski construction): rotate each direction a quarter
// turn, scale by its weight, and chain the edge vectors in angular order.
// Exists exactly when the measure is admissible; the result is recentred at
// its area centroid.  Used as the descent initializer and as the p -> 1
// comparison baseline.
ConvexPolygon classical_polygon(const SurfaceMeasure& mu);

// One refinement sweep of the continuous-density pipeline: discretize the
// density at each resolution in `schedule`, solve each discrete problem, and
// record the weak (bounded-Lipschitz) distance between consecutive targets
// and the Hausdorff distance between consecutive centred solutions.
struct DensityRun {
  std::vector<SurfaceMeasure> targets;
  std::vector<MinkowskiSolution> solutions;
  std::vector<double> weak_distances;    // size schedule-1
  std::vector<double> hausdorff_deltas;  // size schedule-1
};

DensityRun solve_density(const DensitySamples& psi, double p,
                         const std::vector<int>& schedule,
                         const MinkowskiConfig& cfg = MinkowskiConfig(),
                         Exec ex = Exec::parallel);

// Uniqueness probe: solve the same problem from `n_restarts` jittered
// initializations and return the maximum pairwise Hausdorff distance between
// the centred solutions (the solution is unique up to translation, so this
// should be at solver-certificate scale).
double uniqueness_check(const MinkowskiProblem& prob, int n_restarts,
                        Exec ex = Exec::parallel);

}  // namespace capmink

#endif
