#include "capmink/polygon.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "capmink/errors.hpp"

namespace capmink {

namespace {

// Meet of the support lines x.n(a)=pa and x.n(b)=pb.
Vec2 line_meet(double ta, double pa, double tb, double pb) {
  const double c1 = std::cos(ta), s1 = std::sin(ta);
  const double c2 = std::cos(tb), s2 = std::sin(tb);
  const double det = c1 * s2 - s1 * c2;  // sin(tb-ta)
  return {(s2 * pa - s1 * pb) / det, (c1 * pb - c2 * pa) / det};
}

// One Sutherland-Hodgman pass: keep the part of `pts` with x.n <= h.
std::vector<Vec2> clip_halfplane(const std::vector<Vec2>& pts, Vec2 n, double h,
                                 double eps) {
  std::vector<Vec2> out;
  const int m = static_cast<int>(pts.size());
  out.reserve(pts.size() + 2);
  for (int i = 0; i < m; ++i) {
    const Vec2 cur = pts[i];
    const Vec2 nxt = pts[(i + 1) % m];
    const double dc = h - dot(cur, n);
    const double dn = h - dot(nxt, n);
    const bool in_c = dc >= -eps;
    const bool in_n = dn >= -eps;
    if (in_c) out.push_back(cur);
    if (in_c != in_n) {
      const double t = dc / (dc - dn);
      out.push_back(cur + t * (nxt - cur));
    }
  }
  return out;
}

}  // namespace

double ConvexPolygon::edge_length(int j) const {
  return norm(edge_end(j) - edge_begin(j));
}

ConvexPolygon polygon_from_support(const std::vector<double>& theta_rad,
                                   const std::vector<double>& supports) {
  if (theta_rad.size() != supports.size())
    throw LengthMismatch("polygon_from_support: " +
                         std::to_string(theta_rad.size()) + " normals vs " +
                         std::to_string(supports.size()) + " supports");
  if (theta_rad.size() < 3)
    throw DegenerateBody("polygon_from_support: need at least 3 half-planes");

  // Sort by wrapped angle; merge duplicates keeping the tighter support.
  const int n_in = static_cast<int>(theta_rad.size());
  std::vector<int> order(n_in);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> tw(n_in);
  for (int i = 0; i < n_in; ++i) tw[i] = wrap_angle(theta_rad[i]);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return tw[a] < tw[b]; });

  std::vector<double> th, hp;
  for (int k = 0; k < n_in; ++k) {
    const double t = tw[order[k]];
    const double h = supports[order[k]];
    if (!th.empty() && angle_dist(t, th.back()) <= TOL_ANGLE) {
      hp.back() = std::min(hp.back(), h);
    } else {
      th.push_back(t);
      hp.push_back(h);
    }
  }
  // Wrap-around duplicate (first vs last across 0).
  if (th.size() >= 2 && angle_dist(th.front(), th.back()) <= TOL_ANGLE) {
    hp.front() = std::min(hp.front(), hp.back());
    th.pop_back();
    hp.pop_back();
  }
  const int m = static_cast<int>(th.size());
  if (m < 3) throw DegenerateBody("polygon_from_support: fewer than 3 distinct normals");

  // Bounded iff the normals are not confined to a closed half-circle,
  // i.e. the largest angular gap stays below pi.
  double max_gap = 0.0;
  for (int j = 0; j < m; ++j) {
    const double nxt = (j + 1 < m) ? th[j + 1] : th[0] + 2.0 * PI;
    max_gap = std::max(max_gap, nxt - th[j]);
  }
  if (max_gap >= PI - TOL_ANGLE)
    throw UnboundedBody("polygon_from_support: normals lie in a closed half-circle (max gap " +
                        std::to_string(max_gap) + " rad)");

  // Intersect half-planes by clipping a box that is grown until it is
  // strictly larger than the body.
  double pmax = 1.0;
  for (double h : hp) pmax = std::max(pmax, std::fabs(h));
  double box = 8.0 * pmax;
  std::vector<Vec2> clip;
  for (int round = 0; round < 8; ++round) {
    clip = {{box, box}, {-box, box}, {-box, -box}, {box, -box}};
    const double eps = 1e-13 * (box + pmax);
    for (int j = 0; j < m && clip.size() >= 3; ++j)
      clip = clip_halfplane(clip, unit_vec(th[j]), hp[j], eps);
    if (clip.size() < 3) throw DegenerateBody("polygon_from_support: empty interior");
    double ext = 0.0;
    for (const Vec2& v : clip) ext = std::max({ext, std::fabs(v.x), std::fabs(v.y)});
    if (ext < box * (1.0 - 1e-6)) break;
    box *= 64.0;
    if (round == 7)
      throw UnboundedBody("polygon_from_support: body does not fit any bounding box");
  }

  double diam = 0.0;
  for (size_t a = 0; a < clip.size(); ++a)
    for (size_t b = a + 1; b < clip.size(); ++b)
      diam = std::max(diam, norm(clip[a] - clip[b]));
  if (diam <= 0.0) throw DegenerateBody("polygon_from_support: zero-diameter body");
  const double tol_len = TOL_LEN_REL * diam;

  // Active half-planes touch the clipped body.
  std::vector<int> act;
  const double act_tol = 1e-10 * (box + pmax);
  for (int j = 0; j < m; ++j) {
    double h = -1e300;
    for (const Vec2& v : clip) h = std::max(h, dot(v, unit_vec(th[j])));
    if (h >= hp[j] - act_tol) act.push_back(j);
  }

  // Rebuild vertices from consecutive active lines; drop the shortest edge
  // while any signed length is below tolerance.
  std::vector<Vec2> vert;
  while (true) {
    const int k = static_cast<int>(act.size());
    if (k < 3) throw DegenerateBody("polygon_from_support: fewer than 3 active facets");
    vert.assign(k, Vec2{});
    for (int j = 0; j < k; ++j) {
      const int a = act[j], b = act[(j + 1) % k];
      vert[j] = line_meet(th[a], hp[a], th[b], hp[b]);
    }
    int worst = -1;
    double worst_len = tol_len;
    for (int j = 0; j < k; ++j) {
      const Vec2 beg = vert[(j + k - 1) % k];
      const double slen = dot(vert[j] - beg, tangent_of(th[act[j]]));
      if (slen < worst_len) {
        worst_len = slen;
        worst = j;
      }
    }
    if (worst < 0) break;
    act.erase(act.begin() + worst);
  }

  ConvexPolygon P;
  P.theta_.reserve(act.size());
  P.support_.reserve(act.size());
  for (int j : act) {
    P.theta_.push_back(th[j]);
    P.support_.push_back(hp[j]);
  }
  P.vertex_ = std::move(vert);

  // Interior must be two-dimensional.
  double area2 = 0.0;
  const int k = P.size();
  for (int j = 0; j < k; ++j) area2 += cross(P.vertex_[j], P.vertex_[(j + 1) % k]);
  if (area2 <= 2.0 * tol_len * diam)
    throw DegenerateBody("polygon_from_support: empty interior (area " +
                         std::to_string(0.5 * area2) + ")");
  return P;
}

BodyMetrics body_metrics(const ConvexPolygon& P) {
  BodyMetrics bm;
  const int m = P.size();
  double a2 = 0.0;
  Vec2 cw{0.0, 0.0};
  for (int j = 0; j < m; ++j) {
    const Vec2 u = P.vertex(j);
    const Vec2 v = P.vertex((j + 1) % m);
    const double c = cross(u, v);
    a2 += c;
    cw = cw + c * (u + v);
    bm.perimeter += P.edge_length(j);
  }
  bm.area = 0.5 * a2;
  bm.centroid = (1.0 / (3.0 * a2)) * cw;
  for (int a = 0; a < m; ++a)
    for (int b = a + 1; b < m; ++b)
      bm.diameter = std::max(bm.diameter, norm(P.vertex(a) - P.vertex(b)));
  return bm;
}

double support_function(const ConvexPolygon& P, Vec2 dir) {
  double h = -1e300;
  for (const Vec2& v : P.vertices()) h = std::max(h, dot(v, dir));
  return h;
}

double support_function(const ConvexPolygon& P, double theta) {
  return support_function(P, unit_vec(theta));
}

GaussPreimage gauss_preimage(const ConvexPolygon& P, double theta) {
  const double t = wrap_angle(theta);
  const int m = P.size();
  // Find the first normal at or after t.
  const auto& th = P.thetas();
  int hi = static_cast<int>(std::lower_bound(th.begin(), th.end(), t) - th.begin());
  const int j_next = hi % m;
  const int j_prev = (hi + m - 1) % m;
  if (angle_dist(t, th[j_next]) <= TOL_ANGLE) return {true, j_next};
  if (angle_dist(t, th[j_prev]) <= TOL_ANGLE) return {true, j_prev};
  // Strictly between normals j_prev and j_next: the vertex shared by the
  // corresponding edges, which is vertex j_prev under our indexing.
  return {false, j_prev};
}

double hausdorff_distance(const ConvexPolygon& P, const ConvexPolygon& Q) {
  // Merged normal fan.
  std::vector<double> angles;
  angles.reserve(P.size() + Q.size() + 720);
  for (double t : P.thetas()) angles.push_back(t);
  for (double t : Q.thetas()) angles.push_back(t);
  std::sort(angles.begin(), angles.end());
  angles.erase(std::unique(angles.begin(), angles.end(),
                           [](double a, double b) { return angle_dist(a, b) <= TOL_ANGLE; }),
               angles.end());

  std::vector<double> cand = angles;
  for (int g = 0; g < 360; ++g) cand.push_back(2.0 * PI * g / 360.0);

  // Stationary angles per arc of the merged fan: where the support difference
  // (a single sinusoid there) peaks.
  const int na = static_cast<int>(angles.size());
  for (int j = 0; j < na; ++j) {
    const double a = angles[j];
    const double b = (j + 1 < na) ? angles[j + 1] : angles[0] + 2.0 * PI;
    if (b - a <= 2.0 * TOL_ANGLE) continue;
    const double mid = 0.5 * (a + b);
    const GaussPreimage gp = gauss_preimage(P, mid);
    const GaussPreimage gq = gauss_preimage(Q, mid);
    const Vec2 vp = gp.is_edge ? P.edge_end(gp.index) : P.vertex(gp.index);
    const Vec2 vq = gq.is_edge ? Q.edge_end(gq.index) : Q.vertex(gq.index);
    const Vec2 d = vp - vq;
    if (norm(d) == 0.0) continue;
    const double phi = std::atan2(d.y, d.x);
    for (double c : {phi, phi + PI}) {
      double w = c;
      while (w < a) w += 2.0 * PI;
      while (w > b) w -= 2.0 * PI;
      if (w >= a && w <= b) cand.push_back(w);
    }
  }

  double h = 0.0;
  for (double t : cand)
    h = std::max(h, std::fabs(support_function(P, t) - support_function(Q, t)));
  return h;
}

ConvexPolygon transform(const ConvexPolygon& P, double scale, Vec2 shift) {
  if (!(scale > 0.0)) throw BadInput("transform: scale must be positive");
  std::vector<double> h(P.size());
  for (int j = 0; j < P.size(); ++j)
    h[j] = scale * P.support(j) + dot(shift, P.normal(j));
  return polygon_from_support(P.thetas(), h);
}

}  // namespace capmink
