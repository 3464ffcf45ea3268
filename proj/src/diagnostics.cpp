#include "capmink/diagnostics.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <sstream>

#include "capmink/errors.hpp"

namespace capmink {

namespace {

double now_ms() {
  using clk = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(clk::now().time_since_epoch())
      .count();
}

// Integral of the periodic piecewise-linear interpolant of uniform samples
// psi over the angle interval [a, b] (a <= b, length <= 2*pi).
double integrate_psi(const DensitySamples& d, double a, double b) {
  const int n = static_cast<int>(d.theta.size());
  const double step = 2.0 * PI / n;
  auto value = [&](double t) {
    const double u = wrap_angle(t) / step;
    const int i = static_cast<int>(u) % n;
    const double f = u - std::floor(u);
    return (1.0 - f) * d.psi[i] + f * d.psi[(i + 1) % n];
  };
  // Trapezoid on the sample grid restricted to [a,b], with partial cells at
  // both ends; exact for the piecewise-linear interpolant.
  double total = 0.0;
  double t = a;
  while (t < b - 1e-15) {
    const double cell_end = (std::floor(t / step) + 1.0) * step;
    const double t2 = std::min(b, cell_end);
    total += 0.5 * (value(t) + value(t2)) * (t2 - t);
    t = t2;
  }
  return total;
}

}  // namespace

const std::vector<std::string>& verification_check_names() {
  static const std::vector<std::string> names = {
      "capacity_positive",        "edge_measures_positive",
      "measure_centroid_balance", "momentum_identity",
      "radius_chain",             "translation_invariance",
      "dilation_homogeneity",
  };
  return names;
}

std::uint64_t config_hash(const SolverConfig& cfg) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d;%.17g;%.17g;%.17g;%.17g;%d;%.17g;%d",
                cfg.elements, cfg.truncation_factor, cfg.grading,
                cfg.eps_final, cfg.corner_cut_rel, cfg.panels, cfg.newton_tol,
                cfg.newton_max);
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a 64
  for (const char* c = buf; *c; ++c) {
    h ^= static_cast<unsigned char>(*c);
    h *= 1099511628211ull;
  }
  return h;
}

VerificationReport verify_all(const ConvexPolygon& P, double p,
                              const SolverConfig& cfg, Exec ex,
                              const std::string& fixture_id) {
  const double t_start = now_ms();
  VerificationReport rep;
  rep.p = p;
  rep.config_hash = config_hash(cfg);
  if (fixture_id.empty()) {
    const BodyMetrics met = body_metrics(P);
    char buf[64];
    std::snprintf(buf, sizeof buf, "polygon-m%d-diam%.6g", P.size(),
                  met.diameter);
    rep.fixture = buf;
  } else {
    rep.fixture = fixture_id;
  }

  // Shared solve; if it fails, every check depending on it fails in
  // isolation but the report is still assembled.
  std::optional<PotentialSolution> sol;
  try {
    sol = solve_potential(P, p, cfg, nullptr, ex);
  } catch (const Error&) {
  }

  std::optional<double> cap;
  auto run = [&](const char* name, double tol, bool positivity,
                 auto&& fn) {
    CheckResult r;
    r.name = name;
    r.tolerance = tol;
    const double t0 = now_ms();
    try {
      r.value = fn();
      r.passed = positivity ? (r.value > 0.0) : (r.value <= tol);
    } catch (const Error&) {
      r.value = std::numeric_limits<double>::quiet_NaN();
      r.passed = false;
    }
    r.millis = now_ms() - t0;
    rep.checks.push_back(std::move(r));
  };

  run("capacity_positive", 0.0, true, [&] {
    if (!sol) throw MeshFailure("shared solve failed");
    cap = pcap(P, p, *sol, ex);
    rep.capacity = *cap;
    return *cap;
  });

  run("edge_measures_positive", 0.0, true, [&] {
    if (!sol) throw MeshFailure("shared solve failed");
    const SurfaceMeasure mu = curvature_measure(P, p, *sol, ex);
    double lo = std::numeric_limits<double>::infinity();
    for (const Atom& a : mu.atoms) lo = std::min(lo, a.weight);
    return lo;
  });

  run("measure_centroid_balance", 1e-3, false, [&] {
    if (!sol) throw MeshFailure("shared solve failed");
    const SurfaceMeasure mu = curvature_measure(P, p, *sol, ex);
    return norm(mu.weighted_centroid()) / mu.total_mass();
  });

  run("momentum_identity", 1e-2, false, [&] {
    if (!sol) throw MeshFailure("shared solve failed");
    return check_pohozaev(P, p, *sol, ex);
  });

  run("radius_chain", 1e-2, false, [&] {
    if (!sol) throw MeshFailure("shared solve failed");
    const ChainReport chain = check_radius_chain(P, p, *sol, ex, 1e-2);
    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < chain.values.size(); ++i) {
      const double scale = std::max(std::abs(chain.values[i + 1]), 1e-300);
      worst = std::max(worst, (chain.values[i] - chain.values[i + 1]) / scale);
    }
    return worst;
  });

  run("translation_invariance", 5e-3, false, [&] {
    if (!cap) throw MeshFailure("capacity unavailable");
    const BodyMetrics met = body_metrics(P);
    const Vec2 shift{0.37 * met.diameter, -0.21 * met.diameter};
    const ConvexPolygon Pt = transform(P, 1.0, shift);
    const PotentialSolution st = solve_potential(Pt, p, cfg, nullptr, ex);
    return std::abs(pcap(Pt, p, st, ex) - *cap) / std::abs(*cap);
  });

  run("dilation_homogeneity", 5e-3, false, [&] {
    if (!cap) throw MeshFailure("capacity unavailable");
    const ConvexPolygon P2 = transform(P, 2.0, Vec2{0, 0});
    const PotentialSolution s2 = solve_potential(P2, p, cfg, nullptr, ex);
    const double expected =
        (p < 2.0) ? std::pow(2.0, 2.0 - p) * *cap : 2.0 * *cap;
    return std::abs(pcap(P2, p, s2, ex) / expected - 1.0);
  });

  rep.all_passed = true;
  for (const CheckResult& c : rep.checks) rep.all_passed &= c.passed;
  rep.total_millis = now_ms() - t_start;
  return rep;
}

MongeAmpereResidual monge_ampere_residual(const MinkowskiSolution& sol,
                                          const DensitySamples& psi) {
  const int n = static_cast<int>(psi.theta.size());
  if (n < 4 || psi.psi.size() != psi.theta.size())
    throw BadInput("density samples: need matching theta/psi with >= 4 points");
  const ConvexPolygon& P = sol.polygon;
  const int m = P.size();
  if (static_cast<int>(sol.certificate_measures.size()) != m)
    throw BadInput(
        "solution carries no certificate measures for its polygon");

  MongeAmpereResidual out;
  out.per_edge.resize(m);
  for (int j = 0; j < m; ++j) {
    // Angular cell around normal j: between the half angles toward the
    // neighbors (the fan is sorted, so consecutive gaps are positive).
    const double tj = P.theta(j);
    const double tp = P.theta((j + 1) % m);
    const double tm = P.theta((j + m - 1) % m);
    const double gap_next = wrap_angle(tp - tj);
    const double gap_prev = wrap_angle(tj - tm);
    const double a = tj - 0.5 * gap_prev;
    const double b = tj + 0.5 * gap_next;
    const double ref = integrate_psi(psi, a, b);
    out.per_edge[j] =
        std::abs(sol.certificate_measures[j] - ref) / std::max(ref, 1e-300);
  }
  double acc = 0;
  for (double v : out.per_edge) {
    out.max = std::max(out.max, v);
    acc += v;
  }
  out.mean = m > 0 ? acc / m : 0.0;
  return out;
}

MongeAmpereResidual monge_ampere_residual(const MinkowskiSolution& sol,
                                          const SurfaceMeasure& target) {
  const ConvexPolygon& P = sol.polygon;
  const int m = P.size();
  if (target.size() != m)
    throw BadInput("target atom count differs from the polygon's facet count");
  if (static_cast<int>(sol.certificate_measures.size()) != m)
    throw BadInput(
        "solution carries no certificate measures for its polygon");
  MongeAmpereResidual out;
  out.per_edge.resize(m);
  double acc = 0;
  for (int j = 0; j < m; ++j) {
    const double ref = target.atoms[j].weight;
    out.per_edge[j] =
        std::abs(sol.certificate_measures[j] - ref) / std::max(ref, 1e-300);
    out.max = std::max(out.max, out.per_edge[j]);
    acc += out.per_edge[j];
  }
  out.mean = m > 0 ? acc / m : 0.0;
  return out;
}

}  // namespace capmink
