#include "capmink/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "capmink/errors.hpp"

namespace capmink {

namespace {

// Two-sided power grading of [0,1]: clusters points toward both ends.
double grade01(double u, double q) {
  if (u <= 0.5) return 0.5 * std::pow(2.0 * u, q);
  return 1.0 - 0.5 * std::pow(2.0 * (1.0 - u), q);
}

// Solve h0*(g^n - 1)/(g - 1) = depth for the geometric growth factor g >= 1.
double solve_growth(double h0, int n, double depth) {
  if (h0 * n >= depth) return 1.0;  // uniform spacing already overshoots
  double lo = 1.0 + 1e-12, hi = 4.0;
  auto total = [&](double g) { return h0 * (std::pow(g, n) - 1.0) / (g - 1.0); };
  while (total(hi) < depth) hi *= 1.5;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (total(mid) < depth ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double tri_min_angle_deg(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double la = norm(c - b), lb = norm(a - c), lc = norm(b - a);
  auto ang = [](double opp, double s1, double s2) {
    double v = (s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2);
    v = std::max(-1.0, std::min(1.0, v));
    return std::acos(v);
  };
  const double m = std::min({ang(la, lb, lc), ang(lb, lc, la), ang(lc, la, lb)});
  return m * 180.0 / PI;
}

}  // namespace

void validate_config(const SolverConfig& cfg) {
  if (cfg.elements < 500 || cfg.elements > 2000000)
    throw BadInput("config field 'elements' must be in [500, 2000000]");
  if (!(cfg.truncation_factor >= 3.0 && cfg.truncation_factor <= 1000.0))
    throw BadInput("config field 'truncation_factor' must be in [3, 1000]");
  if (!(cfg.grading >= 0.0 && cfg.grading < 1.0))
    throw BadInput("config field 'grading' must be in [0, 1)");
  if (!(cfg.eps_final > 0.0 && cfg.eps_final <= 1e-2))
    throw BadInput("config field 'eps_final' must be in (0, 1e-2]");
  if (!(cfg.corner_cut_rel >= 0.0 && cfg.corner_cut_rel <= 0.1))
    throw BadInput("config field 'corner_cut_rel' must be in [0, 0.1]");
  if (cfg.panels < 4 || cfg.panels > 100000)
    throw BadInput("config field 'panels' must be in [4, 100000]");
  if (!(cfg.newton_tol > 0.0 && cfg.newton_tol <= 1e-2))
    throw BadInput("config field 'newton_tol' must be in (0, 1e-2]");
  if (cfg.newton_max < 1 || cfg.newton_max > 10000)
    throw BadInput("config field 'newton_max' must be in [1, 10000]");
}

ExteriorMesh build_mesh(const ConvexPolygon& P, const SolverConfig& cfg,
                        const ExteriorMesh* like) {
  validate_config(cfg);
  const int m = static_cast<int>(P.size());
  const BodyMetrics met = body_metrics(P);

  ExteriorMesh M;
  M.center = met.centroid;
  M.diam = met.diameter;
  M.r_out = cfg.truncation_factor * met.diameter;

  // --- boundary columns: distribute per edge by length, then grade ---
  // The boundary-heavy split favors wall resolution: the near-wall layer
  // thickness (tied to the column width below) sets the first-order bias of
  // the recovered boundary flux, while the radial direction tolerates
  // geometric coarsening because the far field is smooth.
  if (like != nullptr && static_cast<int>(like->per_edge_cols.size()) == m) {
    // Adopt the template's topology so node positions depend smoothly on the
    // supports; only the geometry is recomputed.
    M.per_edge_cols = like->per_edge_cols;
    M.nr = like->nr;
  } else {
    const double nb_target = std::max(3.0, std::sqrt(cfg.elements / 2.0 * 10.0));
    M.per_edge_cols.resize(m);
    for (int j = 0; j < m; ++j) {
      const double want = nb_target * P.edge_length(j) / met.perimeter;
      M.per_edge_cols[j] = std::max(1, static_cast<int>(std::llround(want)));
    }
  }
  M.nb = 0;
  for (int j = 0; j < m; ++j) M.nb += M.per_edge_cols[j];
  if (like == nullptr || static_cast<int>(like->per_edge_cols.size()) != m)
    M.nr = std::max(6, static_cast<int>(std::llround(cfg.elements / (2.0 * M.nb))));

  const double beta = std::min(cfg.grading, 0.95);
  const double q_req = std::min(1.0 / (1.0 - beta), 6.0);

  // First pass with the requested grading to size the first radial layer.
  double w_max = 0.0;
  for (int j = 0; j < m; ++j) {
    const int n = M.per_edge_cols[j];
    const double L = P.edge_length(j);
    double prev = 0.0;
    for (int i = 1; i <= n; ++i) {
      const double s = (i == n) ? L : grade01(double(i) / n, q_req) * L;
      w_max = std::max(w_max, s - prev);
      prev = s;
    }
  }
  // Tie the wall-layer thickness to the widest wall cell so the near-wall
  // aspect ratio stays bounded at every element budget (0.38 keeps the worst
  // wall-quad angle above 20 degrees).
  const double h0 = std::max(0.38 * w_max, 1e-4 * met.diameter);

  // Cap the grading per edge so no wall cell is much narrower than the first
  // radial layer; finer tangential cells cannot improve the wall resolution.
  const double w_floor = h0;
  std::vector<double> q_edge(m, q_req);
  for (int j = 0; j < m; ++j) {
    const int n = M.per_edge_cols[j];
    const double L = P.edge_length(j);
    if (n < 2) continue;
    // first-cell width = 0.5*(2/n)^q * L >= w_floor
    const double base = 2.0 / n;
    if (base >= 1.0) continue;
    const double q_cap = std::log(2.0 * std::min(w_floor, 0.45 * L) / L) / std::log(base);
    q_edge[j] = std::max(1.0, std::min(q_req, q_cap));
  }

  // Boundary nodes and wall cells, CCW.  The first column of edge j sits on
  // the vertex shared with edge j-1.
  std::vector<Vec2> bnode(M.nb);
  M.wall.clear();
  M.wall.reserve(M.nb);
  {
    int col = 0;
    for (int j = 0; j < m; ++j) {
      const int n = M.per_edge_cols[j];
      const double L = P.edge_length(j);
      const Vec2 a = P.edge_begin(j);
      const Vec2 t = tangent_of(P.theta(j));
      double s_prev = 0.0;
      for (int i = 0; i < n; ++i) {
        const double s = (i == 0) ? 0.0 : grade01(double(i) / n, q_edge[j]) * L;
        bnode[col] = a + s * t;
        if (i > 0) M.wall.push_back({j, s_prev, s, col - 1});
        s_prev = s;
        ++col;
      }
      M.wall.push_back({j, s_prev, L, col - 1});
    }
  }

  // --- radial layers ---
  // Rings 1..nr-1 advance outward from the previous ring along its own unit
  // bisector normals.  An outward bisector offset of a convex ring grows every
  // segment, keeps the ring convex, and cannot fold, for any step size; the
  // rings round off on their own, so no hand-tuned transition to a radial fan
  // is needed (a Cartesian blend toward centroid rays shears thin bodies until
  // the quads invert).  The last ring is the radial projection of ring nr-1
  // onto the truncation circle, which it cannot reach: the advance budget
  // stops at 85% of the outer radius.
  double r_mean = 0.0, r_max_b = 0.0;
  for (const Vec2& b : bnode) {
    const double r = norm(b - M.center);
    r_mean += r;
    r_max_b = std::max(r_max_b, r);
  }
  r_mean /= M.nb;
  if (M.r_out < 2.0 * r_max_b)
    throw MeshFailure("outer circle too close to the body; raise truncation_factor");
  const double advance = 0.85 * M.r_out - r_max_b;
  // Two uniform layers of thickness h0 next to the wall (the one-sided
  // gradient recovery reads them), then geometric growth outward.
  const int n_uni = std::min(2, M.nr - 4);
  const double adv_rest = std::max(advance - n_uni * h0, h0);
  const double growth = solve_growth(h0, M.nr - 1 - n_uni, adv_rest);
  M.layer_dist.assign(M.nr + 1, 0.0);
  {
    for (int k = 1; k <= n_uni; ++k) M.layer_dist[k] = k * h0;
    double step = h0;
    for (int k = n_uni + 1; k < M.nr; ++k) {
      M.layer_dist[k] = M.layer_dist[k - 1] + step;
      step *= growth;
    }
    // normalize the geometric block to land exactly at `advance`
    const double scale = (advance - n_uni * h0) / (M.layer_dist[M.nr - 1] - n_uni * h0);
    for (int k = n_uni + 1; k < M.nr; ++k)
      M.layer_dist[k] = n_uni * h0 + (M.layer_dist[k] - n_uni * h0) * scale;
    M.layer_dist[M.nr] = M.r_out - r_mean;  // nominal depth of the snap ring
  }

  const Vec2 zero{0, 0};
  M.node.assign(static_cast<std::size_t>(M.nr + 1) * M.nb, zero);
  for (int i = 0; i < M.nb; ++i) M.node[i] = bnode[i];
  std::vector<Vec2> dir(M.nb);
  for (int k = 1; k <= M.nr; ++k) {
    const int prev = k - 1;
    if (k < M.nr) {
      // unit bisector of the two adjacent outward segment normals of ring k-1
      for (int i = 0; i < M.nb; ++i) {
        const Vec2& xm = M.node[M.node_index(prev, i - 1)];
        const Vec2& x0 = M.node[M.node_index(prev, i)];
        const Vec2& xp = M.node[M.node_index(prev, i + 1)];
        const Vec2 ta = x0 - xm, tb = xp - x0;
        const Vec2 na{ta.y, -ta.x}, nb_{tb.y, -tb.x};
        Vec2 u = (1.0 / norm(na)) * na + (1.0 / norm(nb_)) * nb_;
        const double un = norm(u);
        if (un < 1e-12) u = nb_;  // straight-angle guard; cannot occur on convex rings
        dir[i] = (1.0 / norm(u)) * u;
      }
      const double step = M.layer_dist[k] - M.layer_dist[k - 1];
      for (int i = 0; i < M.nb; ++i)
        M.node[M.node_index(k, i)] = M.node[M.node_index(prev, i)] + step * dir[i];
    } else {
      for (int i = 0; i < M.nb; ++i) {
        const Vec2 rel = M.node[M.node_index(prev, i)] - M.center;
        M.node[M.node_index(k, i)] = M.center + (M.r_out / norm(rel)) * rel;
      }
    }
  }

  // --- triangles: two per quad ---
  // Mid-edge quad columns alternate diagonals in a checkerboard.  Quad
  // columns flanking a polygon corner instead fix the diagonal so the fan
  // around the corner is triangulated from the corner's own ring nodes,
  // which would otherwise produce slivers whenever the checkerboard landed
  // the other way.  When both columns of a quad touch corners (one-column
  // edges) the better diagonal is chosen by the resulting minimum angle.
  std::vector<char> is_corner(M.nb, 0);
  std::vector<int> local_col(M.nb, 0);  // column index within its own edge
  {
    int col = 0;
    for (int j = 0; j < m; ++j) {
      is_corner[col] = 1;
      for (int i = 0; i < M.per_edge_cols[j]; ++i) local_col[col + i] = i;
      col += M.per_edge_cols[j];
    }
  }
  M.tri.clear();
  M.tri_layer.clear();
  M.tri.reserve(static_cast<std::size_t>(2) * M.nb * M.nr);
  for (int k = 0; k < M.nr; ++k) {
    for (int i = 0; i < M.nb; ++i) {
      const int a = M.node_index(k, i);
      const int b = M.node_index(k, i + 1);
      const int c = M.node_index(k + 1, i + 1);
      const int d = M.node_index(k + 1, i);
      // Columns advance CCW around the body while layers grow outward, a
      // left-handed pairing; vertex order below restores CCW triangles.
      // Layer-0 triangles keep both wall nodes first and the top node last.
      const bool fwd = is_corner[i] != 0;
      const bool bwd = is_corner[(i + 1) % M.nb] != 0;
      bool even;
      if (fwd && bwd) {
        const double qa = std::min(tri_min_angle_deg(M.node[b], M.node[a], M.node[c]),
                                   tri_min_angle_deg(M.node[a], M.node[d], M.node[c]));
        const double qb = std::min(tri_min_angle_deg(M.node[b], M.node[a], M.node[d]),
                                   tri_min_angle_deg(M.node[b], M.node[d], M.node[c]));
        even = qa >= qb;
      } else if (fwd) {
        even = true;
      } else if (bwd) {
        even = false;
      } else {
        // Restart the checkerboard phase at each edge so congruent edges get
        // congruent triangulations; a global phase would otherwise break the
        // symmetry of regular bodies whenever an edge holds an odd number of
        // columns, and the recovered edge weights would inherit the bias.
        even = (local_col[i] + k) % 2 == 0;
      }
      if (even) {
        M.tri.push_back({b, a, c});
        M.tri.push_back({a, d, c});
      } else {
        M.tri.push_back({b, a, d});
        M.tri.push_back({b, d, c});
      }
      M.tri_layer.push_back(k);
      M.tri_layer.push_back(k);
    }
  }

  // --- quality audit ---
  double min_area = 1e300, min_ang_wall = 180.0, min_ang_glob = 180.0;
  std::size_t worst_t = 0;
  for (std::size_t t = 0; t < M.tri.size(); ++t) {
    const Vec2& a = M.node[M.tri[t][0]];
    const Vec2& b = M.node[M.tri[t][1]];
    const Vec2& c = M.node[M.tri[t][2]];
    const double area = 0.5 * cross(b - a, c - a);
    if (area < min_area) worst_t = t;
    min_area = std::min(min_area, area);
    const double ang = tri_min_angle_deg(a, b, c);
    min_ang_glob = std::min(min_ang_glob, ang);
    if (M.tri_layer[t] <= 1) min_ang_wall = std::min(min_ang_wall, ang);
  }
  M.min_tri_area = min_area;
  M.min_angle_wall_deg = min_ang_wall;
  M.min_angle_global_deg = min_ang_glob;
  if (!(min_area > 0.0)) {
    std::ostringstream os;
    os << "exterior mesh has inverted or degenerate triangles (polygon with " << m
       << " edges, " << cfg.elements << " element budget, min area " << min_area
       << ", layer " << M.tri_layer[worst_t] << ", column " << (worst_t / 2 % M.nb) << ")";
    throw MeshFailure(os.str());
  }
  return M;
}

}  // namespace capmink
