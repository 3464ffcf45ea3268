#ifndef CAPMINK_POTENTIAL_HPP
#define CAPMINK_POTENTIAL_HPP

#include <Eigen/Core>
#include <memory>
#include <vector>

#include "capmink/kernels.hpp"
#include "capmink/mesh.hpp"
#include "capmink/polygon.hpp"

namespace capmink {

// Supported exponent range.  Conditioning of the regularized operator
// degrades rapidly below ~1.05, so smaller p is rejected rather than we
// silently return garbage.
constexpr double P_MIN = 1.05;
constexpr double P_MAX = 2.0;

// One sampled stretch of a polygon edge: |grad u| extrapolated to the wall,
// constant on the arc-length interval [s0, s1) measured from the edge start.
struct TraceSample {
  double s0 = 0;
  double s1 = 0;
  double grad = 0;
};

// Sampled boundary gradient, organized per polygon edge.  Samples tile each
// edge exactly ([0, edge_length], contiguous, in order).
struct BoundaryTrace {
  std::vector<std::vector<TraceSample>> per_edge;
  std::vector<double> edge_len;
};

// Result of an exterior equilibrium-potential solve.
struct PotentialSolution {
  enum class Backend { fem, bem };

  double p = 2.0;
  SolverConfig cfg;
  Backend backend = Backend::fem;

  std::shared_ptr<const ExteriorMesh> mesh;  // fem backend only
  Eigen::VectorXd u;                         // nodal values (fem backend only)
  BoundaryTrace trace;                       // |grad u| on the polygon boundary

  double eps_reg = 0;       // final regularization level actually used
  int newton_iters = 0;     // Newton steps over all continuation stages
  double newton_residual = 0;
  double outer_mean_u = 0;  // mean of u over the outer circle (fem)
  double robin_gamma = 0;   // p = 2: constant with log-capacity = exp(gamma)
  double min_u = 0;
  double max_u = 0;
  int panels_used = 0;      // bem backend only
};

// Solve the exterior p-equilibrium problem (u = 0 on the polygon boundary;
// u -> 1 at infinity for p < 2, unit logarithmic growth for p = 2) on a
// truncated annular mesh with an asymptotics-matched flux condition on the
// outer circle.  `warm`, when given and built on the same mesh topology,
// seeds Newton and shortens the regularization continuation.
PotentialSolution solve_potential(const ConvexPolygon& P, double p, const SolverConfig& cfg,
                                  const PotentialSolution* warm = nullptr,
                                  Exec ex = Exec::parallel);

// Boundary-integral backend for p = 2: first-kind equation for the
// equilibrium density with collocation on corner-graded panels.  Returns the
// boundary gradient trace (|grad u| = 2 pi sigma) and the constant gamma with
// logarithmic capacity exp(gamma).
PotentialSolution solve_harmonic_bem(const ConvexPolygon& P, const SolverConfig& cfg,
                                     Exec ex = Exec::parallel);

// Closed-form exterior solution for the disk of radius R.
struct DiskPotential {
  double R = 1;
  double p = 2;
  double boundary_gradient = 0;  // |grad u| on the circle
  double pcap = 0;               // p-capacity (log-capacity for p = 2)
};
DiskPotential analytic_disk(double R, double p);

// Value of the disk equilibrium potential at radius r >= R.
double analytic_disk_u(double R, double p, double r);

}  // namespace capmink

#endif
