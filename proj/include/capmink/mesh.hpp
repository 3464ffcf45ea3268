#ifndef CAPMINK_MESH_HPP
#define CAPMINK_MESH_HPP

#include <array>
#include <cstddef>
#include <vector>

#include "capmink/geom.hpp"
#include "capmink/polygon.hpp"

namespace capmink {

// Numerical parameters shared by the potential solvers.
struct SolverConfig {
  int elements = 20000;           // target triangle count for the exterior mesh
  double truncation_factor = 10;  // outer circle radius, in units of the body diameter
  double grading = 0.5;           // boundary grading strength in [0,1): 0 = uniform
  double eps_final = 1e-8;        // final gradient-regularization level (relative)
  double corner_cut_rel = 1e-3;   // corner exclusion for boundary integrals, rel. diameter
  int panels = 64;                // boundary-element panels per polygon edge
  double newton_tol = 1e-10;      // Newton residual tolerance (relative to initial)
  int newton_max = 60;            // Newton iteration cap per continuation stage
};

// Throws BadInput with the offending field named if a value is out of range.
void validate_config(const SolverConfig& cfg);

// One wall cell of the mesh: the piece of polygon edge `edge` between arc
// lengths s0 and s1 (measured from the edge's start vertex), spanned at
// layer 0 by boundary columns col and col+1 (mod nb).
struct WallCell {
  int edge = 0;
  double s0 = 0;
  double s1 = 0;
  int col = 0;
};

// Structured triangulation of the region between a convex polygon and a
// surrounding circle.  Nodes form rings: node index = layer*nb + column,
// layer 0 on the polygon boundary, layer nr on the outer circle.
struct ExteriorMesh {
  int nb = 0;                       // columns per ring
  int nr = 0;                       // number of radial layers (nr+1 rings)
  std::vector<Vec2> node;           // (nr+1)*nb nodes
  std::vector<std::array<int, 3>> tri;  // CCW triangles
  std::vector<int> tri_layer;       // radial layer of each triangle
  std::vector<WallCell> wall;       // nb cells covering the polygon boundary
  std::vector<int> per_edge_cols;   // boundary columns per polygon edge
  std::vector<double> layer_dist;   // nominal offset distance of each ring (size nr+1)
  double r_out = 0;                 // outer circle radius
  Vec2 center{0, 0};                // outer circle center
  double diam = 0;                  // polygon diameter
  double min_angle_wall_deg = 0;    // worst triangle angle within the first two layers
  double min_angle_global_deg = 0;  // worst triangle angle overall
  double min_tri_area = 0;

  int node_index(int layer, int col) const { return layer * nb + (col % nb + nb) % nb; }
  bool same_topology(const ExteriorMesh& o) const {
    return nb == o.nb && nr == o.nr && per_edge_cols == o.per_edge_cols;
  }
};

// Build the structured exterior mesh.  Boundary columns are distributed per
// edge proportionally to edge length with symmetric power grading toward the
// corners; radial layers grow geometrically from a thin first layer and blend
// from polygon offsets into the outer circle.  Throws MeshFailure if the
// construction produces inverted or degenerate triangles.
// A compatible `like` mesh (same facet count) donates its column and ring
// counts, so the rebuilt mesh varies smoothly under small support changes
// instead of jumping at the column-rounding thresholds.
ExteriorMesh build_mesh(const ConvexPolygon& P, const SolverConfig& cfg,
                        const ExteriorMesh* like = nullptr);

}  // namespace capmink

#endif
