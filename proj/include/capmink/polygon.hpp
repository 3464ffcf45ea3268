#ifndef CAPMINK_POLYGON_HPP
#define CAPMINK_POLYGON_HPP

#include <vector>

#include "capmink/geom.hpp"

namespace capmink {

// Bounded convex polygon stored in support form.  Normal angles are strictly
// increasing in [0, 2*pi), every normal carries an edge of positive length,
// and vertex j is the meet of the support lines of normals j and j+1 (mod m),
// so edge j runs CCW from vertex j-1 to vertex j.
class ConvexPolygon {
 public:
  int size() const { return static_cast<int>(theta_.size()); }
  double theta(int j) const { return theta_[j]; }
  double support(int j) const { return support_[j]; }
  Vec2 normal(int j) const { return unit_vec(theta_[j]); }
  Vec2 vertex(int j) const { return vertex_[j]; }
  Vec2 edge_begin(int j) const { return vertex_[(j + size() - 1) % size()]; }
  Vec2 edge_end(int j) const { return vertex_[j]; }
  double edge_length(int j) const;

  const std::vector<double>& thetas() const { return theta_; }
  const std::vector<double>& supports() const { return support_; }
  const std::vector<Vec2>& vertices() const { return vertex_; }

  friend ConvexPolygon polygon_from_support(const std::vector<double>&,
                                            const std::vector<double>&);

 private:
  ConvexPolygon() = default;
  std::vector<double> theta_;
  std::vector<double> support_;
  std::vector<Vec2> vertex_;
};

// Build the polygon {x : x.n_j <= h_j for all j}.  Sorts by angle, merges
// duplicate normals (keeping the tighter support), prunes redundant
// half-planes and edges shorter than 1e-12 * diameter.  Throws UnboundedBody
// if the normals fit in a closed half-circle and DegenerateBody if the
// interior is empty or fewer than three facets survive.
ConvexPolygon polygon_from_support(const std::vector<double>& theta_rad,
                                   const std::vector<double>& supports);

struct BodyMetrics {
  double area = 0.0;
  double perimeter = 0.0;
  double diameter = 0.0;
  Vec2 centroid;
};
BodyMetrics body_metrics(const ConvexPolygon& P);

double support_function(const ConvexPolygon& P, Vec2 dir);
double support_function(const ConvexPolygon& P, double theta);

// Where on the boundary the outward normal attains a given direction:
// an edge if theta matches a stored normal within TOL_ANGLE, otherwise the
// vertex whose normal cone contains theta.
struct GaussPreimage {
  bool is_edge = false;
  int index = 0;
};
GaussPreimage gauss_preimage(const ConvexPolygon& P, double theta);

// Exact sup-norm distance of support functions (classical Hausdorff distance
// for convex bodies).  Evaluated on both normal fans, a uniform angle grid
// and the per-arc stationary angles, which makes it exact for polygons.
double hausdorff_distance(const ConvexPolygon& P, const ConvexPolygon& Q);

// scale * P + shift, done on support numbers: h' = scale*h + shift.n.
ConvexPolygon transform(const ConvexPolygon& P, double scale, Vec2 shift);

}  // namespace capmink

#endif
