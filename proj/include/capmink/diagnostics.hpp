#ifndef CAPMINK_DIAGNOSTICS_HPP
#define CAPMINK_DIAGNOSTICS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "capmink/capacitary.hpp"
#include "capmink/measure.hpp"
#include "capmink/minkowski.hpp"
#include "capmink/polygon.hpp"
#include "capmink/potential.hpp"

namespace capmink {

// One verification check: `value` is the measured residual or witness (its
// exact meaning is per check, documented in verification_check_names order),
// `passed` compares it against `tolerance` except for the positivity checks,
// which pass on value > 0.  `millis` is wall time and is the only
// nondeterministic field; serializers omit it in deterministic mode.
struct CheckResult {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  double millis = 0.0;
};

// Aggregate result of verify_all: provenance (fixture id, exponent, config
// hash), the capacity from the shared solve, and one CheckResult per suite
// entry in fixed order.  Two runs with identical inputs produce identical
// reports except for the timing fields.
struct VerificationReport {
  std::string fixture;
  double p = 2.0;
  std::uint64_t config_hash = 0;
  double capacity = 0.0;
  std::vector<CheckResult> checks;
  bool all_passed = false;
  double total_millis = 0.0;
};

// The documented check suite, in report order.  Snapshot-tested: a suite
// change must be deliberate.
//   capacity_positive        capacity value           (passes when > 0)
//   edge_measures_positive   min facet measure        (passes when > 0)
//   measure_centroid_balance |sum w_j zeta_j| / mass  vs 1e-3
//   momentum_identity        boundary momentum residual vs 1e-2
//   radius_chain             worst adjacent-pair violation vs 1e-2
//   translation_invariance   relative capacity change under a fixed shift
//   dilation_homogeneity     relative defect of the r = 2 scaling law
const std::vector<std::string>& verification_check_names();

// Solve the potential once on P, then run every check in the documented
// order.  A check that throws is recorded as failed with value NaN; the
// remaining checks still run.  The translation and dilation checks solve
// their own transformed copies (meshes differ, tolerances are numerical).
VerificationReport verify_all(const ConvexPolygon& P, double p,
                              const SolverConfig& cfg = {},
                              Exec ex = Exec::parallel,
                              const std::string& fixture_id = "");

// Stable 64-bit hash of the solver configuration (canonical field order),
// recorded in reports so that numbers are only ever compared like for like.
std::uint64_t config_hash(const SolverConfig& cfg);

// Discrete Monge-Ampere residual of a solved inverse problem against a
// sampled density: the measure of facet j must balance the density integral
// over the angular cell around its normal (cell boundaries at the half
// angles between consecutive normals),
//   residual_j = |mu_j - integral_{arc_j} psi| / integral_{arc_j} psi.
// The facet measures are the solution's own certificate values.
struct MongeAmpereResidual {
  std::vector<double> per_edge;
  double max = 0.0;
  double mean = 0.0;
};
MongeAmpereResidual monge_ampere_residual(const MinkowskiSolution& sol,
                                          const DensitySamples& psi);

// Same residual measured against an atomic target (the reference integral
// for facet j is the target weight at the matching direction): by
// definition this reproduces the solution's measure_match values.
MongeAmpereResidual monge_ampere_residual(const MinkowskiSolution& sol,
                                          const SurfaceMeasure& target);

}  // namespace capmink

#endif
