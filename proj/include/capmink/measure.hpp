#ifndef CAPMINK_MEASURE_HPP
#define CAPMINK_MEASURE_HPP

#include <vector>

#include "capmink/geom.hpp"

namespace capmink {

struct Atom {
  double theta = 0.0;   // direction on S^1, [0, 2*pi)
  double weight = 0.0;  // strictly positive
};

// Finite atomic measure on the circle; atoms sorted by angle, directions
// pairwise distinct (merged within TOL_ANGLE by the factory).
struct SurfaceMeasure {
  std::vector<Atom> atoms;

  int size() const { return static_cast<int>(atoms.size()); }
  double total_mass() const;
  Vec2 weighted_centroid() const;  // sum of w_j * (cos,sin)(theta_j)
};

// Sorts, wraps, merges near-duplicate directions (weights add) and drops
// non-positive weights.  Throws EmptyMeasure if nothing is left.
SurfaceMeasure make_measure(std::vector<Atom> atoms);

struct AdmissibilityReport {
  Vec2 centroid;                  // sum w_j zeta_j
  double centroid_residual = 0;   // |centroid|
  bool balanced = false;          // residual <= 1e-10 * mass
  bool has_antipodal_pair = false;
  int antipodal_i = -1, antipodal_j = -1;
  double equator_infimum = 0;     // min_theta integral |theta . xi| dmu(xi)
  bool admissible = false;        // balanced and no antipodal pair
};
AdmissibilityReport validate_measure(const SurfaceMeasure& mu);

// Nearest weight vector (least squares) with zero weighted centroid, keeping
// every weight above a small positive floor.  Directions are fixed.
SurfaceMeasure project_to_centroid_zero(const SurfaceMeasure& mu);

// Strictly positive density onS^1 given by uniform samples at 2*pi*i/n.
struct DensitySamples {
  std::vector<double> theta;
  std::vector<double> psi;
};

// Validates the grid, then integrates the (periodic cubic) interpolant of
// psi over m angular cells and balances the result.  Cell centers are
// half-cell offset for odd m; even m adds a golden-ratio jitter so that no
// two centers are antipodal.
SurfaceMeasure discretize_density(const DensitySamples& density, int m);

// Bounded-Lipschitz (Dudley) distance between atomic measures on the circle:
// sup integral f d(mu - nu) over |f| <= 1, Lip(f) <= 1 w.r.t. geodesic
// distance.  Exact: reduces to a linear program on the merged support.
double weak_distance(const SurfaceMeasure& mu, const SurfaceMeasure& nu);

}  // namespace capmink

#endif
