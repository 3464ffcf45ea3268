#ifndef CAPMINK_TESTS_COMMON_HPP
#define CAPMINK_TESTS_COMMON_HPP

#include <random>
#include <vector>

#include "capmink/geom.hpp"
#include "capmink/polygon.hpp"

namespace ct {

using namespace capmink;

// Regular m-gon with given inradius, facet normals starting at `rot`.
inline ConvexPolygon make_regular(int m, double inradius = 1.0, double rot = 0.0) {
  std::vector<double> th(m), h(m, inradius);
  for (int j = 0; j < m; ++j) th[j] = wrap_angle(rot + 2.0 * PI * j / m);
  return polygon_from_support(th, h);
}

// Axis-aligned square [0,a] x [0,a].
inline ConvexPolygon make_square(double a = 1.0) {
  return polygon_from_support({0.0, PI / 2, PI, 3 * PI / 2}, {a, a, 0.0, 0.0});
}

// Centered rectangle with half-width wx, half-height wy.
inline ConvexPolygon make_rect(double wx, double wy) {
  return polygon_from_support({0.0, PI / 2, PI, 3 * PI / 2}, {wx, wy, wx, wy});
}

// Random convex polygon: random normal fan (max gap < pi) and supports.
inline ConvexPolygon random_polygon(std::mt19937_64& rng, int m = 7) {
  std::uniform_real_distribution<double> ua(0.0, 2.0 * PI);
  std::uniform_real_distribution<double> uh(0.6, 1.8);
  for (;;) {
    std::vector<double> th(m);
    for (double& t : th) t = ua(rng);
    std::sort(th.begin(), th.end());
    double gap = th.front() + 2.0 * PI - th.back();
    bool tight = false;
    for (int j = 0; j + 1 < m; ++j) gap = std::max(gap, th[j + 1] - th[j]);
    for (int j = 0; j + 1 < m; ++j)
      if (th[j + 1] - th[j] < 1e-3) tight = true;
    if (gap >= PI - 0.05 || tight) continue;
    std::vector<double> h(m);
    for (double& v : h) v = uh(rng);
    try {
      return polygon_from_support(th, h);
    } catch (...) {
      continue;
    }
  }
}

}  // namespace ct

#endif
