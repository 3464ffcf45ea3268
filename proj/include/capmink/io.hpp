#ifndef CAPMINK_IO_HPP
#define CAPMINK_IO_HPP

#include <optional>
#include <string>

#include "capmink/capacitary.hpp"
#include "capmink/diagnostics.hpp"
#include "capmink/measure.hpp"
#include "capmink/minkowski.hpp"
#include "capmink/polygon.hpp"
#include "capmink/potential.hpp"

namespace capmink {

// File formats, all JSON.  Angles are radians under "theta_rad"; degrees are
// accepted under an explicit "theta_deg" key, but one file never mixes the
// two.  Readers are strict: unknown or ill-typed fields raise BadInput with
// the offending field named.
//
//   polygon  {"normals_theta_rad": [...], "supports": [...],
//             "vertices": [[x, y], ...]}
//            vertices are re-derived on load and checked against the stored
//            ones to 1e-9 relative; a solution file (polygon + result
//            fields) is accepted wherever a polygon is.
//   measure  {"atoms": [{"theta_rad": t, "weight": w}, ...]}
//   density  {"theta_rad": [...], "psi": [...]}   (uniform samples)
//   problem  measure or density file + {"p": value}
//            + optional {"optimizer": {...}} overrides
//   solver   {"elements", "truncation_factor", "grading", "eps_final",
//             "corner_cut_rel", "panels", "newton_tol", "newton_max"}

ConvexPolygon read_polygon_file(const std::string& path);
SurfaceMeasure read_measure_file(const std::string& path);

// Either a discrete target or a sampled density, plus optional exponent and
// optimizer overrides carried in the same file.
struct ProblemSpec {
  std::optional<SurfaceMeasure> measure;
  std::optional<DensitySamples> density;
  std::optional<double> p;
  MinkowskiConfig config;  // defaults with any "optimizer" overrides applied
};
ProblemSpec read_problem_file(const std::string& path);

// Solver configuration file (--config): any subset of the solver keys;
// unspecified fields keep the values of `base`.
SolverConfig read_solver_config_file(const std::string& path,
                                     const SolverConfig& base);

// Writers.  `timestamp` adds a "generated_at" field (suppressed by the
// CLI's --deterministic flag, making outputs bit-identical across runs).
void write_polygon_file(const std::string& path, const ConvexPolygon& P,
                        bool timestamp);
void write_measure_file(const std::string& path, const SurfaceMeasure& mu,
                        bool timestamp);
void write_solution_file(const std::string& path, const MinkowskiSolution& s,
                         bool timestamp);
void write_capacity_report_file(const std::string& path,
                                const CapacityReport& rep, bool timestamp);
// Verification report: `timings` controls the per-check and total
// wall-time fields, which are the only nondeterministic values in a report.
void write_verification_report_file(const std::string& path,
                                    const VerificationReport& rep,
                                    bool timestamp, bool timings);

// Plain-text verification table (one row per check), for terminal output.
std::string format_verification_table(const VerificationReport& rep);

// Static SVG: polygon outline on a 1000x1000 viewport with a 5% margin;
// when a measure is given, each atom draws an outward tick at the boundary
// point attaining its direction, length proportional to the weight (a
// "measure rose").
void write_svg_file(const std::string& path, const ConvexPolygon& P,
                    const SurfaceMeasure* rose = nullptr);

}  // namespace capmink

#endif
