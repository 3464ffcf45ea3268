#ifndef CAPMINK_CAPACITARY_HPP
#define CAPMINK_CAPACITARY_HPP

#include <string>
#include <vector>

#include "capmink/kernels.hpp"
#include "capmink/measure.hpp"
#include "capmink/polygon.hpp"
#include "capmink/potential.hpp"

namespace capmink {

// Normalization constant pairing the boundary momentum integral with the
// capacity: (2-p)/(p-1) for p < 2, and 2*pi at the harmonic endpoint p = 2.
double tau_p(double p);

// Ordered comparison chain between the area radius sqrt(A/pi), the
// capacitary radius, and the diameter.  For p < 2 the chain is
//   sqrt(A/pi) <= (pcap / (2 pi ((p-1)/(2-p))^(1-p)))^(1/(2-p)) <= diam/2,
// and at p = 2 it is
//   sqrt(A/pi) <= diam/2 <= 2*logcap <= diam.
// The disk saturates the first bound; a segment saturates diam/2 = 2*logcap.
struct ChainReport {
  std::vector<std::string> labels;  // one short name per quantity
  std::vector<double> values;       // same length, expected ascending
  std::vector<bool> ok;             // one flag per adjacent pair
  double slack = 0.0;               // relative slack used for the flags
  bool passed = false;              // all pair flags hold
};

// Everything the capacity pipeline certifies about one solved polygon.
struct CapacityReport {
  double p = 2.0;
  double tau = 0.0;                // tau_p(p)
  double pcap = 0.0;               // p-capacity (logarithmic capacity at p = 2)
  SurfaceMeasure edge_measures;    // one atom per polygon normal, in fan order;
                                   // weight j = integral of |grad u|^p over edge j
  double boundary_energy = 0.0;    // integral of |grad u|^p over the whole
                                   // boundary, same quadrature as the atoms
  double pohozaev_residual = 0.0;  // relative defect of the momentum identity
  ChainReport radius_chain;
};

// p-capacity of P from a solved exterior potential.  For p < 2 on the volume
// backend this is the total wall flux of the discrete solution (the cell sum
// of |grad u|^(p-1), conserved by the Galerkin formulation); on the panel
// backend it is the corner-graded boundary quadrature.  At p = 2 it is
// exp(gamma) with gamma the Robin constant, recovered from a two-ring far
// field log fit (volume) or the panel charge balance.  The solution must
// have been produced on P at the same exponent.
double pcap(const ConvexPolygon& P, double p, const PotentialSolution& sol,
            Exec ex = Exec::parallel);

// Capacitary curvature measure: one atom per polygon normal, with weight the
// integral of |grad u|^p over the corresponding edge.  On the volume backend
// each weight is evaluated as the energy shape derivative against the
// facet's displacement field (a volume integral, immune to the corner trace
// halo and superconvergent in practice); on the panel backend the graded
// boundary quadrature with a two-level Richardson extrapolation in the
// corner cut radius is the sharp tool, since the panel density itself is
// the corner-graded unknown.
SurfaceMeasure curvature_measure(const ConvexPolygon& P, double p,
                                 const PotentialSolution& sol,
                                 Exec ex = Exec::parallel);

// Gradient of the capacity with respect to the support numbers:
//   d pcap / d h_j   = (p - 1) * mu_p(edge j)          for p < 2,
//   d logcap / d h_j = logcap * mu_2(edge j) / (2 pi)  at p = 2.
// When `expected_normals` is nonnegative it must equal the number of active
// edges of P; a mismatch means some prescribed normal lost its edge, where
// the gradient is only one-sided, and raises InactiveNormal instead of
// returning a fabricated value.
std::vector<double> hadamard_gradient(const ConvexPolygon& P, double p,
                                      const PotentialSolution& sol,
                                      Exec ex = Exec::parallel,
                                      int expected_normals = -1);

// Relative residual of the boundary momentum (Pohozaev) identity
//   integral |grad u|^p (x . nu) dH^1 = tau_p * pcap   (p < 2)
//                                     = 2 pi           (p = 2).
// The identity is translation invariant because the curvature measure has
// zero centroid; it is evaluated with supports taken from the centroid,
// where the cancellation is best conditioned.
double check_pohozaev(const ConvexPolygon& P, double p,
                      const PotentialSolution& sol, Exec ex = Exec::parallel);

// Evaluate the radius comparison chain (see ChainReport) with the given
// relative slack on each adjacent pair.
ChainReport check_radius_chain(const ConvexPolygon& P, double p,
                               const PotentialSolution& sol,
                               Exec ex = Exec::parallel, double slack = 0.01);

// Bundle capacity, curvature measure, identity residual and radius chain
// into one report.  No additional solves are performed.
CapacityReport capacity_report(const ConvexPolygon& P, double p,
                               const PotentialSolution& sol,
                               Exec ex = Exec::parallel);

// One row of the small-exponent trend table.
struct TrendRow {
  double p = 0.0;
  double capacity = 0.0;
  double perimeter_gap = 0.0;  // |capacity - perimeter| / perimeter
};

// pcap approaches the perimeter as p decreases toward 1.  The table records
// the capacity and its relative gap to the perimeter for a descending list
// of exponents in [P_MIN, 1.5]; `gap_decreasing` reports whether the gap
// shrinks monotonically down the list.
struct TrendTable {
  double perimeter = 0.0;
  std::vector<TrendRow> rows;
  bool gap_decreasing = false;
};

TrendTable p_to_one_trend(const ConvexPolygon& P,
                          const std::vector<double>& p_list,
                          const SolverConfig& cfg, Exec ex = Exec::parallel);

}  // namespace capmink

#endif
