#include "capmink/cli.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "capmink/capacitary.hpp"
#include "capmink/diagnostics.hpp"
#include "capmink/errors.hpp"
#include "capmink/io.hpp"
#include "capmink/kernels.hpp"
#include "capmink/minkowski.hpp"
#include "capmink/potential.hpp"

namespace capmink {

namespace {

struct CliOpts {
  std::string input;
  std::string out;
  std::string svg;
  std::string report;
  std::string config;
  std::string schedule = "8,16,32";
  double p = 1.5;
  bool p_set = false;
  int restarts = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool deterministic = false;
};

double require_p(const CliOpts& o) {
  if (!o.p_set) throw BadInput("missing required flag --p");
  return o.p;
}

std::vector<int> parse_schedule(const std::string& s) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t comma = std::min(s.find(',', pos), s.size());
    const std::string tok = s.substr(pos, comma - pos);
    try {
      std::size_t used = 0;
      const int v = std::stoi(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      out.push_back(v);
    } catch (const std::exception&) {
      throw BadInput("--schedule: '" + tok + "' is not an integer");
    }
    pos = comma + 1;
  }
  return out;
}

SolverConfig solver_config(const CliOpts& o, const SolverConfig& base) {
  if (o.config.empty()) return base;
  return read_solver_config_file(o.config, base);
}

// Machine output goes to --out when given, otherwise to stdout; human
// summaries go to stderr in that case so the JSON stream stays clean.
const std::string& out_path(const CliOpts& o) {
  static const std::string kStdout = "/dev/stdout";
  return o.out.empty() ? kStdout : o.out;
}

std::FILE* summary_stream(const CliOpts& o) {
  return o.out.empty() ? stderr : stdout;
}

int finish_solve(const CliOpts& o, const MinkowskiSolution& sol,
                 const SurfaceMeasure& rose) {
  write_solution_file(out_path(o), sol, !o.deterministic);
  if (!o.svg.empty()) write_svg_file(o.svg, sol.polygon, &rose);
  std::FILE* f = summary_stream(o);
  std::fprintf(f,
               "solved: %d facets, kkt residual %.3e, worst measure match "
               "%.3e, %d iterations\n",
               sol.polygon.size(), sol.kkt_residual,
               sol.measure_match.empty()
                   ? 0.0
                   : *std::max_element(sol.measure_match.begin(),
                                       sol.measure_match.end()),
               sol.iterations);
  if (!sol.converged) {
    std::fprintf(stderr,
                 "warning: solver stalled at kkt residual %.3e; outputs were "
                 "still written\n",
                 sol.kkt_residual);
    return 3;
  }
  return 0;
}

int cmd_solve(const CliOpts& o) {
  ProblemSpec spec = read_problem_file(o.input);
  double p;
  if (o.p_set)
    p = o.p;
  else if (spec.p)
    p = *spec.p;
  else
    throw BadInput("p not given: pass --p or a 'p' field in the problem file");

  MinkowskiConfig cfg = spec.config;
  cfg.solver = solver_config(o, cfg.solver);
  if (o.seed_set) cfg.seed = o.seed;

  if (spec.density) {
    const std::vector<int> schedule = parse_schedule(o.schedule);
    const DensityRun run = solve_density(*spec.density, p, schedule, cfg);
    std::FILE* f = summary_stream(o);
    std::fprintf(f, "%-6s %-5s %-12s %-12s %-12s %s\n", "stage", "m", "kkt",
                 "weak-dist", "hausdorff", "ma-mean");
    for (std::size_t i = 0; i < run.solutions.size(); ++i) {
      const MongeAmpereResidual ma =
          monge_ampere_residual(run.solutions[i], *spec.density);
      char wd[16] = "-", hd[16] = "-";
      if (i > 0) {
        std::snprintf(wd, sizeof wd, "%.4e", run.weak_distances[i - 1]);
        std::snprintf(hd, sizeof hd, "%.4e", run.hausdorff_deltas[i - 1]);
      }
      std::fprintf(f, "%-6zu %-5d %-12.4e %-12s %-12s %.4e\n", i,
                   run.solutions[i].polygon.size(),
                   run.solutions[i].kkt_residual, wd, hd, ma.mean);
    }
    return finish_solve(o, run.solutions.back(), run.targets.back());
  }

  MinkowskiProblem prob;
  prob.target = *spec.measure;
  prob.p = p;
  prob.config = cfg;
  const MinkowskiSolution sol = solve_discrete(prob);
  if (o.restarts > 0) {
    const double spread = uniqueness_check(prob, o.restarts);
    const double diam = body_metrics(sol.polygon).diameter;
    std::fprintf(summary_stream(o),
                 "restart spread over %d restarts: Hausdorff %.3e (%.3e of "
                 "the diameter)\n",
                 o.restarts, spread, spread / diam);
  }
  return finish_solve(o, sol, prob.target);
}

int cmd_measure(const CliOpts& o) {
  const ConvexPolygon P = read_polygon_file(o.input);
  const double p = require_p(o);
  const SolverConfig cfg = solver_config(o, SolverConfig{});
  const PotentialSolution ps = solve_potential(P, p, cfg);
  const SurfaceMeasure mu = curvature_measure(P, p, ps);
  write_measure_file(out_path(o), mu, !o.deterministic);
  if (!o.svg.empty()) write_svg_file(o.svg, P, &mu);
  std::fprintf(summary_stream(o), "measure: %d atoms, total mass %.12g\n",
               mu.size(), mu.total_mass());
  return 0;
}

int cmd_capacity(const CliOpts& o) {
  const ConvexPolygon P = read_polygon_file(o.input);
  const double p = require_p(o);
  const SolverConfig cfg = solver_config(o, SolverConfig{});
  const PotentialSolution ps = solve_potential(P, p, cfg);
  const CapacityReport rep = capacity_report(P, p, ps);
  std::printf("pcap      = %.12g   (p = %g)\n", rep.pcap, rep.p);
  std::printf("tau       = %.12g\n", rep.tau);
  std::printf("momentum identity residual = %.3e\n", rep.pohozaev_residual);
  std::printf("radius comparison chain    = %s\n",
              rep.radius_chain.passed ? "pass" : "FAIL");
  if (!o.out.empty()) write_capacity_report_file(o.out, rep, !o.deterministic);
  return 0;
}

int cmd_verify(const CliOpts& o) {
  const ConvexPolygon P = read_polygon_file(o.input);
  const double p = require_p(o);
  const SolverConfig cfg = solver_config(o, SolverConfig{});
  const std::string fixture = std::filesystem::path(o.input).filename().string();
  const VerificationReport rep = verify_all(P, p, cfg, Exec::parallel, fixture);
  std::fputs(format_verification_table(rep).c_str(), stdout);
  const std::string& dest = !o.report.empty() ? o.report : o.out;
  if (!dest.empty())
    write_verification_report_file(dest, rep, !o.deterministic,
                                   !o.deterministic);
  return rep.all_passed ? 0 : 4;
}

}  // namespace

int run_cli(int argc, char** argv) {
  apply_thread_cap_env();

  CLI::App app{
      "planar p-capacitary Minkowski solver: prescribe an atomic measure on "
      "the circle of outward normals and recover the convex polygon whose "
      "capacitary curvature measure matches it"};
  app.require_subcommand(1);
  CliOpts o;

  auto add_common = [&](CLI::App* sub, bool p_required) {
    sub->add_option("input", o.input, "input JSON file")->required();
    CLI::Option* popt =
        sub->add_option("--p", o.p, "capacitary exponent, in [1.05, 2]")
            ->check(CLI::Range(1.05, 2.0));
    if (p_required) popt->required();
    sub->add_option("--config", o.config,
                    "solver configuration JSON overriding the defaults");
    sub->add_flag("--deterministic", o.deterministic,
                  "suppress timestamps and timing fields in outputs");
    return popt;
  };

  CLI::App* solve = app.add_subcommand(
      "solve", "solve the inverse problem for a measure or density file");
  add_common(solve, false);
  solve->add_option("--out", o.out, "solution JSON path (default: stdout)");
  solve->add_option("--svg", o.svg, "render the solution and measure rose");
  solve->add_option("--schedule", o.schedule,
                    "facet counts for density inputs, e.g. 8,16,32");
  solve->add_option("--restarts", o.restarts,
                    "re-solve from this many jittered starts and report the "
                    "spread")
      ->check(CLI::NonNegativeNumber);
  CLI::Option* seed_opt =
      solve->add_option("--seed", o.seed, "seed for the restart jitter");

  CLI::App* measure = app.add_subcommand(
      "measure", "capacitary curvature measure of a polygon (forward map)");
  add_common(measure, true);
  measure->add_option("--out", o.out, "measure JSON path (default: stdout)");
  measure->add_option("--svg", o.svg, "render the polygon and measure rose");

  CLI::App* capacity =
      app.add_subcommand("capacity", "p-capacity and certificate report");
  add_common(capacity, true);
  capacity->add_option("--out", o.out, "capacity report JSON path");

  CLI::App* verify =
      app.add_subcommand("verify", "run the verification suite on a polygon");
  add_common(verify, true);
  verify->add_option("--report", o.report, "verification report JSON path");
  verify->add_option("--out", o.out, "alias for --report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  CLI::App* active = solve->parsed()      ? solve
                     : measure->parsed()  ? measure
                     : capacity->parsed() ? capacity
                                          : verify;
  o.p_set = active->count("--p") > 0;
  o.seed_set = solve->parsed() && seed_opt->count() > 0;

  try {
    if (solve->parsed()) return cmd_solve(o);
    if (measure->parsed()) return cmd_measure(o);
    if (capacity->parsed()) return cmd_capacity(o);
    return cmd_verify(o);
  } catch (const Inadmissible& e) {
    std::cerr << "error: inadmissible measure: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace capmink
