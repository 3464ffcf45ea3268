#include "capmink/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "capmink/errors.hpp"

namespace capmink {

namespace {

using nlohmann::json;

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw BadInput(path + ": cannot open file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw BadInput(path + ": " + e.what());
  }
}

void check_keys(const json& o, std::initializer_list<const char*> allowed,
                const std::string& ctx) {
  for (auto it = o.begin(); it != o.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) ok |= (it.key() == k);
    if (!ok) throw BadInput(ctx + ": unknown field '" + it.key() + "'");
  }
}

double as_number(const json& v, const std::string& field) {
  if (!v.is_number()) throw BadInput(field + " must be a number");
  return v.get<double>();
}

std::vector<double> as_number_array(const json& v, const std::string& field) {
  if (!v.is_array()) throw BadInput(field + " must be an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number())
      throw BadInput(field + "[" + std::to_string(i) + "] must be a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

constexpr double DEG = PI / 180.0;

// Angle array under "<stem>_rad" or "<stem>_deg" (exactly one); returns
// radians and remembers which unit the file uses so mixing can be rejected.
std::vector<double> read_angles(const json& o, const std::string& stem,
                                const std::string& ctx, int* unit_seen) {
  const std::string krad = stem + "_rad", kdeg = stem + "_deg";
  const bool has_rad = o.contains(krad), has_deg = o.contains(kdeg);
  if (has_rad && has_deg)
    throw BadInput(ctx + ": fields '" + krad + "' and '" + kdeg +
                   "' must not be mixed in one file");
  if (!has_rad && !has_deg)
    throw BadInput(ctx + ": missing field '" + krad + "'");
  const int unit = has_rad ? 1 : 2;
  if (*unit_seen != 0 && *unit_seen != unit)
    throw BadInput(ctx + ": radian and degree angle fields mixed in one file");
  *unit_seen = unit;
  std::vector<double> th =
      as_number_array(o.at(has_rad ? krad : kdeg), ctx + ": " + (has_rad ? krad : kdeg));
  if (has_deg)
    for (double& t : th) t *= DEG;
  return th;
}

// The result fields a solution file adds on top of the polygon schema; a
// polygon reader must accept them so solve -> measure round-trips work on
// the solver's own output files.
constexpr std::initializer_list<const char*> kSolutionExtras = {
    "objective",        "kkt_residual",       "rescale_factor",
    "measure_match",    "optimum_measures",   "certificate_measures",
    "multiplier",       "iterations",         "converged",
    "generated_at"};

ConvexPolygon parse_polygon(const json& o, const std::string& ctx) {
  if (!o.is_object()) throw BadInput(ctx + ": expected a JSON object");
  std::vector<const char*> allowed = {"normals_theta_rad", "normals_theta_deg",
                                      "supports", "vertices"};
  allowed.insert(allowed.end(), kSolutionExtras.begin(), kSolutionExtras.end());
  for (auto it = o.begin(); it != o.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) ok |= (it.key() == k);
    if (!ok) throw BadInput(ctx + ": unknown field '" + it.key() + "'");
  }
  int unit = 0;
  const std::vector<double> th = read_angles(o, "normals_theta", ctx, &unit);
  if (!o.contains("supports")) throw BadInput(ctx + ": missing field 'supports'");
  const std::vector<double> h = as_number_array(o.at("supports"), ctx + ": supports");
  if (th.size() != h.size())
    throw BadInput(ctx + ": 'supports' length differs from the normal count");

  ConvexPolygon P = polygon_from_support(th, h);

  if (o.contains("vertices")) {
    const json& vv = o.at("vertices");
    if (!vv.is_array())
      throw BadInput(ctx + ": 'vertices' must be an array of [x, y] pairs");
    if (static_cast<int>(vv.size()) != P.size())
      throw BadInput(ctx +
                     ": stored vertex count disagrees with the support "
                     "representation (field 'vertices')");
    const BodyMetrics met = body_metrics(P);
    const double tol = 1e-9 * std::max(met.diameter, 1.0);
    for (int j = 0; j < P.size(); ++j) {
      const json& pt = vv[j];
      if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number() ||
          !pt[1].is_number())
        throw BadInput(ctx + ": vertices[" + std::to_string(j) +
                       "] must be an [x, y] number pair");
      const Vec2 stored{pt[0].get<double>(), pt[1].get<double>()};
      if (norm(stored - P.vertex(j)) > tol)
        throw BadInput(ctx + ": vertices[" + std::to_string(j) +
                       "] disagrees with the support representation");
    }
  }
  return P;
}

SurfaceMeasure parse_measure(const json& o, const std::string& ctx,
                             bool allow_extras) {
  if (!o.is_object()) throw BadInput(ctx + ": expected a JSON object");
  if (!allow_extras) check_keys(o, {"atoms", "generated_at"}, ctx);
  if (!o.contains("atoms")) throw BadInput(ctx + ": missing field 'atoms'");
  const json& arr = o.at("atoms");
  if (!arr.is_array() || arr.empty())
    throw BadInput(ctx + ": 'atoms' must be a nonempty array");
  std::vector<Atom> atoms;
  int unit = 0;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string actx = ctx + ": atoms[" + std::to_string(i) + "]";
    const json& a = arr[i];
    if (!a.is_object()) throw BadInput(actx + " must be an object");
    check_keys(a, {"theta_rad", "theta_deg", "weight"}, actx);
    const bool rad = a.contains("theta_rad"), deg = a.contains("theta_deg");
    if (rad && deg)
      throw BadInput(actx + ": fields 'theta_rad' and 'theta_deg' must not "
                            "be mixed in one file");
    if (!rad && !deg) throw BadInput(actx + ": missing field 'theta_rad'");
    const int u = rad ? 1 : 2;
    if (unit != 0 && unit != u)
      throw BadInput(ctx + ": radian and degree angle fields mixed in one file");
    unit = u;
    if (!a.contains("weight")) throw BadInput(actx + ": missing field 'weight'");
    const double w = as_number(a.at("weight"), actx + ": weight");
    double t = as_number(a.at(rad ? "theta_rad" : "theta_deg"),
                         actx + (rad ? ": theta_rad" : ": theta_deg"));
    if (deg) t *= DEG;
    atoms.push_back({t, w});
  }
  return make_measure(std::move(atoms));
}

DensitySamples parse_density(const json& o, const std::string& ctx) {
  check_keys(o, {"theta_rad", "theta_deg", "psi", "p", "optimizer",
                 "generated_at"},
             ctx);
  int unit = 0;
  DensitySamples d;
  d.theta = read_angles(o, "theta", ctx, &unit);
  if (!o.contains("psi")) throw BadInput(ctx + ": missing field 'psi'");
  d.psi = as_number_array(o.at("psi"), ctx + ": psi");
  if (d.theta.size() != d.psi.size())
    throw BadInput(ctx + ": 'psi' length differs from the angle count");
  return d;
}

void apply_solver_overrides(const json& o, SolverConfig& cfg,
                            const std::string& ctx) {
  check_keys(o,
             {"elements", "truncation_factor", "grading", "eps_final",
              "corner_cut_rel", "panels", "newton_tol", "newton_max"},
             ctx);
  if (o.contains("elements"))
    cfg.elements = static_cast<int>(as_number(o.at("elements"), ctx + ": elements"));
  if (o.contains("truncation_factor"))
    cfg.truncation_factor = as_number(o.at("truncation_factor"), ctx + ": truncation_factor");
  if (o.contains("grading")) cfg.grading = as_number(o.at("grading"), ctx + ": grading");
  if (o.contains("eps_final"))
    cfg.eps_final = as_number(o.at("eps_final"), ctx + ": eps_final");
  if (o.contains("corner_cut_rel"))
    cfg.corner_cut_rel = as_number(o.at("corner_cut_rel"), ctx + ": corner_cut_rel");
  if (o.contains("panels"))
    cfg.panels = static_cast<int>(as_number(o.at("panels"), ctx + ": panels"));
  if (o.contains("newton_tol"))
    cfg.newton_tol = as_number(o.at("newton_tol"), ctx + ": newton_tol");
  if (o.contains("newton_max"))
    cfg.newton_max = static_cast<int>(as_number(o.at("newton_max"), ctx + ": newton_max"));
  validate_config(cfg);
}

void apply_optimizer_overrides(const json& o, MinkowskiConfig& cfg,
                               const std::string& ctx) {
  if (!o.is_object()) throw BadInput(ctx + " must be an object");
  check_keys(o,
             {"tol_kkt", "max_iters", "step0", "support_floor",
              "stall_restarts", "init_jitter", "seed",
              "certificate_elements", "solver"},
             ctx);
  if (o.contains("tol_kkt")) cfg.tol_kkt = as_number(o.at("tol_kkt"), ctx + ": tol_kkt");
  if (o.contains("max_iters"))
    cfg.max_iters = static_cast<int>(as_number(o.at("max_iters"), ctx + ": max_iters"));
  if (o.contains("step0")) cfg.step0 = as_number(o.at("step0"), ctx + ": step0");
  if (o.contains("support_floor"))
    cfg.support_floor = as_number(o.at("support_floor"), ctx + ": support_floor");
  if (o.contains("stall_restarts"))
    cfg.stall_restarts =
        static_cast<int>(as_number(o.at("stall_restarts"), ctx + ": stall_restarts"));
  if (o.contains("init_jitter"))
    cfg.init_jitter = as_number(o.at("init_jitter"), ctx + ": init_jitter");
  if (o.contains("seed"))
    cfg.seed = static_cast<std::uint64_t>(as_number(o.at("seed"), ctx + ": seed"));
  if (o.contains("certificate_elements"))
    cfg.certificate_elements = static_cast<int>(
        as_number(o.at("certificate_elements"), ctx + ": certificate_elements"));
  if (o.contains("solver"))
    apply_solver_overrides(o.at("solver"), cfg.solver, ctx + ": solver");
}

std::string timestamp_utc() {
  char buf[32];
  const std::time_t t = std::time(nullptr);
  std::tm tm_utc;
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

void dump_to(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw BadInput(path + ": cannot open for writing");
  out << j.dump(2) << '\n';
  if (!out) throw BadInput(path + ": write failed");
}

json polygon_to_json(const ConvexPolygon& P) {
  json j;
  j["normals_theta_rad"] = P.thetas();
  j["supports"] = P.supports();
  json vv = json::array();
  for (const Vec2& v : P.vertices()) vv.push_back({v.x, v.y});
  j["vertices"] = std::move(vv);
  return j;
}

json measure_to_json(const SurfaceMeasure& mu) {
  json atoms = json::array();
  for (const Atom& a : mu.atoms)
    atoms.push_back({{"theta_rad", a.theta}, {"weight", a.weight}});
  return json{{"atoms", std::move(atoms)}};
}

}  // namespace

ConvexPolygon read_polygon_file(const std::string& path) {
  return parse_polygon(load_json(path), path);
}

SurfaceMeasure read_measure_file(const std::string& path) {
  return parse_measure(load_json(path), path, /*allow_extras=*/false);
}

ProblemSpec read_problem_file(const std::string& path) {
  const json o = load_json(path);
  if (!o.is_object()) throw BadInput(path + ": expected a JSON object");
  ProblemSpec spec;
  if (o.contains("psi")) {
    spec.density = parse_density(o, path);
  } else {
    check_keys(o, {"atoms", "p", "optimizer", "generated_at"}, path);
    spec.measure = parse_measure(o, path, /*allow_extras=*/true);
  }
  if (o.contains("p")) {
    const double p = as_number(o.at("p"), path + ": p");
    if (!(p >= P_MIN && p <= P_MAX))
      throw BadInput(path + ": field 'p' must lie in [1.05, 2]");
    spec.p = p;
  }
  if (o.contains("optimizer"))
    apply_optimizer_overrides(o.at("optimizer"), spec.config, path + ": optimizer");
  return spec;
}

SolverConfig read_solver_config_file(const std::string& path,
                                     const SolverConfig& base) {
  SolverConfig cfg = base;
  apply_solver_overrides(load_json(path), cfg, path);
  return cfg;
}

void write_polygon_file(const std::string& path, const ConvexPolygon& P,
                        bool timestamp) {
  json j = polygon_to_json(P);
  if (timestamp) j["generated_at"] = timestamp_utc();
  dump_to(path, j);
}

void write_measure_file(const std::string& path, const SurfaceMeasure& mu,
                        bool timestamp) {
  json j = measure_to_json(mu);
  if (timestamp) j["generated_at"] = timestamp_utc();
  dump_to(path, j);
}

void write_solution_file(const std::string& path, const MinkowskiSolution& s,
                         bool timestamp) {
  json j = polygon_to_json(s.polygon);
  j["objective"] = s.objective;
  j["kkt_residual"] = s.kkt_residual;
  j["rescale_factor"] = s.rescale_factor;
  j["measure_match"] = s.measure_match;
  j["optimum_measures"] = s.optimum_measures;
  j["certificate_measures"] = s.certificate_measures;
  j["multiplier"] = s.multiplier;
  j["iterations"] = s.iterations;
  j["converged"] = s.converged;
  if (timestamp) j["generated_at"] = timestamp_utc();
  dump_to(path, j);
}

void write_capacity_report_file(const std::string& path,
                                const CapacityReport& rep, bool timestamp) {
  json j;
  j["p"] = rep.p;
  j["tau"] = rep.tau;
  j["pcap"] = rep.pcap;
  j["boundary_energy"] = rep.boundary_energy;
  j["pohozaev_residual"] = rep.pohozaev_residual;
  j["edge_measures"] = measure_to_json(rep.edge_measures);
  json chain;
  chain["labels"] = rep.radius_chain.labels;
  chain["values"] = rep.radius_chain.values;
  json okv = json::array();
  for (bool b : rep.radius_chain.ok) okv.push_back(b);
  chain["ok"] = std::move(okv);
  chain["slack"] = rep.radius_chain.slack;
  chain["passed"] = rep.radius_chain.passed;
  j["radius_chain"] = std::move(chain);
  if (timestamp) j["generated_at"] = timestamp_utc();
  dump_to(path, j);
}

void write_verification_report_file(const std::string& path,
                                    const VerificationReport& rep,
                                    bool timestamp, bool timings) {
  json j;
  j["fixture"] = rep.fixture;
  j["p"] = rep.p;
  char hx[24];
  std::snprintf(hx, sizeof hx, "0x%016llx",
                static_cast<unsigned long long>(rep.config_hash));
  j["config_hash"] = hx;
  j["capacity"] = rep.capacity;
  j["all_passed"] = rep.all_passed;
  json checks = json::array();
  for (const CheckResult& c : rep.checks) {
    json e;
    e["name"] = c.name;
    if (std::isnan(c.value))
      e["value"] = nullptr;
    else
      e["value"] = c.value;
    e["tolerance"] = c.tolerance;
    e["passed"] = c.passed;
    if (timings) e["millis"] = c.millis;
    checks.push_back(std::move(e));
  }
  j["checks"] = std::move(checks);
  if (timings) j["total_millis"] = rep.total_millis;
  if (timestamp) j["generated_at"] = timestamp_utc();
  dump_to(path, j);
}

std::string format_verification_table(const VerificationReport& rep) {
  std::ostringstream os;
  os << "fixture: " << rep.fixture << "   p = " << rep.p << '\n';
  char line[160];
  std::snprintf(line, sizeof line, "%-26s %14s %12s  %s\n", "check", "value",
                "tolerance", "result");
  os << line;
  for (const CheckResult& c : rep.checks) {
    char value[32];
    if (std::isnan(c.value))
      std::snprintf(value, sizeof value, "%14s", "error");
    else
      std::snprintf(value, sizeof value, "%14.6g", c.value);
    std::snprintf(line, sizeof line, "%-26s %s %12.3g  %s\n", c.name.c_str(),
                  value, c.tolerance, c.passed ? "pass" : "FAIL");
    os << line;
  }
  os << (rep.all_passed ? "all checks passed" : "some checks FAILED") << '\n';
  return os.str();
}

void write_svg_file(const std::string& path, const ConvexPolygon& P,
                    const SurfaceMeasure* rose) {
  const int m = P.size();

  // Rose ticks in world coordinates first so the viewport fits everything.
  struct Tick {
    Vec2 base, tip;
  };
  std::vector<Tick> ticks;
  if (rose != nullptr && rose->size() > 0) {
    const BodyMetrics met = body_metrics(P);
    double wmax = 0;
    for (const Atom& a : rose->atoms) wmax = std::max(wmax, a.weight);
    for (const Atom& a : rose->atoms) {
      const GaussPreimage g = gauss_preimage(P, a.theta);
      const Vec2 base =
          g.is_edge ? 0.5 * (P.edge_begin(g.index) + P.edge_end(g.index))
                    : P.vertex(g.index);
      const double len = 0.30 * met.diameter * (a.weight / wmax);
      ticks.push_back({base, base + len * unit_vec(a.theta)});
    }
  }

  double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
  auto grow = [&](Vec2 v) {
    xlo = std::min(xlo, v.x);
    xhi = std::max(xhi, v.x);
    ylo = std::min(ylo, v.y);
    yhi = std::max(yhi, v.y);
  };
  for (const Vec2& v : P.vertices()) grow(v);
  for (const Tick& t : ticks) {
    grow(t.base);
    grow(t.tip);
  }

  const double span = std::max({xhi - xlo, yhi - ylo, 1e-12});
  const double view = 1000.0, margin = 0.05 * view;
  const double scale = (view - 2.0 * margin) / span;
  const double cx = 0.5 * (xlo + xhi), cy = 0.5 * (ylo + yhi);
  auto map = [&](Vec2 v) {
    return Vec2{view / 2 + scale * (v.x - cx), view / 2 - scale * (v.y - cy)};
  };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"1000\" "
        "height=\"1000\" viewBox=\"0 0 1000 1000\">\n";
  os << "  <rect width=\"1000\" height=\"1000\" fill=\"#ffffff\"/>\n";
  char buf[128];
  os << "  <polygon points=\"";
  for (int j = 0; j < m; ++j) {
    const Vec2 q = map(P.vertex(j));
    std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", j ? " " : "", q.x, q.y);
    os << buf;
  }
  os << "\" fill=\"#dce9f7\" stroke=\"#1f4e79\" stroke-width=\"2\"/>\n";
  for (const Tick& t : ticks) {
    const Vec2 a = map(t.base), b = map(t.tip);
    std::snprintf(buf, sizeof buf,
                  "  <line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
                  "stroke=\"#b3392e\" stroke-width=\"2\"/>\n",
                  a.x, a.y, b.x, b.y);
    os << buf;
    std::snprintf(buf, sizeof buf,
                  "  <circle cx=\"%.2f\" cy=\"%.2f\" r=\"4\" "
                  "fill=\"#b3392e\"/>\n",
                  b.x, b.y);
    os << buf;
  }
  os << "</svg>\n";

  std::ofstream out(path);
  if (!out) throw BadInput(path + ": cannot open for writing");
  out << os.str();
  if (!out) throw BadInput(path + ": write failed");
}

}  // namespace capmink
