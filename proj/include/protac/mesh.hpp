#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "protac/error.hpp"
#include "protac/vec.hpp"

namespace protac {

/// Parameters of the cylindrical skin shell. Lengths in millimetres.
struct CylinderParams {
  double radius = 40.0;            // outer skin radius r_s
  double length = 300.0;           // axial extent, centred on z = 0
  double element_size = 10.0;      // target edge length of the discretization
  double fixed_ring_width = 15.0;  // clamped band at each end
  double thickness = 5.0;          // shell thickness (inner radius = radius - thickness)
};

enum class NodeKind : signed char {
  kOuterGrid = 0,   // on the outer surface, member of free_set or fixed_set
  kInnerGrid = 1,   // on the inner surface
  kQuadCenter = 2,  // centre of a radial quad face (interior)
  kPrismCentroid = 3
};

/// Tetrahedral shell mesh of the skin. The outer surface carries the free
/// node set used by the tactile chain; nodes within fixed_ring_width of
/// either end ring are clamped. Immutable after construction.
struct SkinMesh {
  std::vector<Vec3> nodes;  // rest positions
  std::vector<std::array<int, 4>> tets;
  std::vector<std::array<int, 3>> outer_tris;  // outward-oriented outer surface
  std::vector<int> free_set;                   // sorted outer node ids
  std::vector<int> fixed_set;                  // sorted outer node ids
  std::vector<NodeKind> node_kind;
  std::vector<int> free_lookup;  // node id -> index in free_set, or -1

  double skin_radius = 0.0;
  double inner_radius = 0.0;
  double length = 0.0;
  double element_size = 0.0;
  double fixed_ring_width = 0.0;
  int n_theta = 0;  // angular node count per ring
  int n_z = 0;      // axial band count (n_z + 1 rings)
  int outer_grid_count = 0;

  int node_count() const { return static_cast<int>(nodes.size()); }
  int free_count() const { return static_cast<int>(free_set.size()); }
  int inner_partner(int outer_node) const { return outer_node + outer_grid_count; }

  int outer_node_id(int ring, int column) const {
    return ring * n_theta + ((column % n_theta) + n_theta) % n_theta;
  }
  /// Angular offset (in steps) of a ring; even rings are staggered by half a
  /// step so the surface triangulates without diagonal choices.
  static double ring_offset(int ring) { return (ring % 2 == 0) ? 0.5 : 0.0; }

  double ring_z(int ring) const { return -0.5 * length + ring * (length / n_z); }
  double node_angle(int ring, int column) const {
    const double step = 2.0 * std::numbers::pi / n_theta;
    return (column + ring_offset(ring)) * step;
  }
};

inline double signed_tet_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return dot(b - a, cross(c - a, d - a)) / 6.0;
}

/// Builds the cylindrical shell mesh. Angular and axial counts derive from
/// element_size; the angular count is trimmed by two steps from the nominal
/// circumference/element ratio, calibrated so the default link
/// (r=40, L=300, h=10, ring=15) exposes exactly 621 free outer nodes.
inline SkinMesh build_cylinder_mesh(const CylinderParams& params) {
  const double r_out = params.radius;
  const double r_in = params.radius - params.thickness;
  if (!(params.radius > 0.0)) throw validation_error("mesh: radius must be positive");
  if (!(params.element_size > 0.0) || params.element_size >= params.radius)
    throw validation_error("mesh: element_size must lie in (0, radius)");
  if (!(params.length > 2.0 * params.fixed_ring_width))
    throw validation_error("mesh: length must exceed twice the fixed ring width");
  if (!(params.thickness > 0.0) || r_in <= 0.0)
    throw validation_error("mesh: thickness must lie in (0, radius)");

  const double two_pi = 2.0 * std::numbers::pi;
  const int n_theta = std::max<int>(6, static_cast<int>(std::lround(two_pi * r_out / params.element_size)) - 2);
  const int n_z = std::max<int>(2, static_cast<int>(std::lround(params.length / params.element_size)));

  SkinMesh mesh;
  mesh.skin_radius = r_out;
  mesh.inner_radius = r_in;
  mesh.length = params.length;
  mesh.element_size = params.element_size;
  mesh.fixed_ring_width = params.fixed_ring_width;
  mesh.n_theta = n_theta;
  mesh.n_z = n_z;
  mesh.outer_grid_count = (n_z + 1) * n_theta;

  // Grid nodes: outer surface first, then the matching inner surface.
  mesh.nodes.reserve(static_cast<size_t>(2 * mesh.outer_grid_count));
  for (int layer = 0; layer < 2; ++layer) {
    const double r = layer == 0 ? r_out : r_in;
    for (int j = 0; j <= n_z; ++j) {
      const double z = -0.5 * params.length + j * (params.length / n_z);
      for (int i = 0; i < n_theta; ++i) {
        const double phi = (i + SkinMesh::ring_offset(j)) * (two_pi / n_theta);
        mesh.nodes.push_back({r * std::cos(phi), r * std::sin(phi), z});
      }
    }
  }
  mesh.node_kind.assign(mesh.nodes.size(), NodeKind::kOuterGrid);
  for (int k = mesh.outer_grid_count; k < 2 * mesh.outer_grid_count; ++k)
    mesh.node_kind[size_t(k)] = NodeKind::kInnerGrid;

  // Staggered-ring surface triangulation: every band splits canonically into
  // up/down triangles, so the connectivity carries the mesh's rotation and
  // reflection symmetries.
  for (int j = 0; j < n_z; ++j) {
    const bool lower_aligned = SkinMesh::ring_offset(j) == 0.0;
    for (int i = 0; i < n_theta; ++i) {
      const int a_i = mesh.outer_node_id(j, i);
      const int a_i1 = mesh.outer_node_id(j, i + 1);
      const int b_i = mesh.outer_node_id(j + 1, i);
      const int b_i1 = mesh.outer_node_id(j + 1, i + 1);
      if (lower_aligned) {
        mesh.outer_tris.push_back({a_i, a_i1, b_i});
        mesh.outer_tris.push_back({b_i, a_i1, b_i1});
      } else {
        mesh.outer_tris.push_back({a_i, a_i1, b_i1});
        mesh.outer_tris.push_back({a_i, b_i1, b_i});
      }
    }
  }

  // Radial quad-face centres, keyed by the surface edge they span.
  std::map<std::pair<int, int>, int> quad_center;
  auto quad_center_id = [&](int p, int q) {
    const auto key = std::minmax(p, q);
    auto it = quad_center.find(key);
    if (it != quad_center.end()) return it->second;
    const Vec3 pos = (mesh.nodes[size_t(p)] + mesh.nodes[size_t(q)] +
                      mesh.nodes[size_t(mesh.inner_partner(p))] +
                      mesh.nodes[size_t(mesh.inner_partner(q))]) /
                     4.0;
    const int id = mesh.node_count();
    mesh.nodes.push_back(pos);
    mesh.node_kind.push_back(NodeKind::kQuadCenter);
    quad_center.emplace(key, id);
    return id;
  };

  auto push_tet = [&](int a, int b, int c, int d) {
    double vol = signed_tet_volume(mesh.nodes[size_t(a)], mesh.nodes[size_t(b)],
                                   mesh.nodes[size_t(c)], mesh.nodes[size_t(d)]);
    if (vol < 0.0) {
      std::swap(c, d);
      vol = -vol;
    }
    if (!(vol > 1e-9)) throw numerical_error("mesh: degenerate tetrahedron produced");
    mesh.tets.push_back({a, b, c, d});
  };

  // Each surface triangle extrudes to a prism, split symmetrically about its
  // centroid: one tet per cap plus four per radial quad.
  for (const auto& tri : mesh.outer_tris) {
    const int a = tri[0], b = tri[1], c = tri[2];
    const int ai = mesh.inner_partner(a), bi = mesh.inner_partner(b), ci = mesh.inner_partner(c);
    Vec3 centroid = (mesh.nodes[size_t(a)] + mesh.nodes[size_t(b)] + mesh.nodes[size_t(c)] +
                     mesh.nodes[size_t(ai)] + mesh.nodes[size_t(bi)] + mesh.nodes[size_t(ci)]) /
                    6.0;
    const int cid = mesh.node_count();
    mesh.nodes.push_back(centroid);
    mesh.node_kind.push_back(NodeKind::kPrismCentroid);

    push_tet(cid, a, b, c);
    push_tet(cid, ai, ci, bi);
    const std::array<std::pair<int, int>, 3> edges{{{a, b}, {b, c}, {c, a}}};
    for (const auto& [p, q] : edges) {
      const int f = quad_center_id(p, q);
      push_tet(cid, f, p, q);
      push_tet(cid, f, q, mesh.inner_partner(q));
      push_tet(cid, f, mesh.inner_partner(q), mesh.inner_partner(p));
      push_tet(cid, f, mesh.inner_partner(p), p);
    }
  }
  if (mesh.tets.empty()) throw numerical_error("mesh: parameters produced zero tetrahedra");

  // Outer nodes split into clamped end bands and the free set.
  const double z_lo = -0.5 * params.length + params.fixed_ring_width + 1e-9;
  const double z_hi = 0.5 * params.length - params.fixed_ring_width - 1e-9;
  for (int k = 0; k < mesh.outer_grid_count; ++k) {
    const double z = mesh.nodes[size_t(k)].z;
    if (z <= z_lo || z >= z_hi)
      mesh.fixed_set.push_back(k);
    else
      mesh.free_set.push_back(k);
  }
  mesh.free_lookup.assign(mesh.nodes.size(), -1);
  for (size_t idx = 0; idx < mesh.free_set.size(); ++idx)
    mesh.free_lookup[size_t(mesh.free_set[idx])] = static_cast<int>(idx);

  return mesh;
}

inline SkinMesh build_cylinder_mesh(double radius, double length, double element_size,
                                    double fixed_ring_width) {
  CylinderParams p;
  p.radius = radius;
  p.length = length;
  p.element_size = element_size;
  p.fixed_ring_width = fixed_ring_width;
  return build_cylinder_mesh(p);
}

// ---------------------------------------------------------------------------
// Reflective markers

/// One marker: rest position on the inner surface plus a barycentric
/// attachment to the outer-surface triangle covering the same (angle, z)
/// patch, through which it advects with the skin.
struct MarkerAnchor {
  Vec3 rest_position;
  int triangle = -1;                     // index into SkinMesh::outer_tris
  std::array<double, 3> weights{0, 0, 0};
};

struct MarkerSet {
  std::vector<MarkerAnchor> anchors;
  double diameter = 3.0;  // mm
  int rings = 0;
  int per_ring = 0;
};

namespace detail {

/// Barycentric coordinates of (angle, z) within a surface triangle unrolled
/// to the (theta, z) plane; angles unwrapped to the query's branch. Triangles
/// that are not angular neighbours of the query are rejected outright, since
/// unwrapping would tear them into slivers that falsely contain it.
inline bool unrolled_barycentric(const SkinMesh& mesh, const std::array<int, 3>& tri,
                                 double theta, double z, std::array<double, 3>& w) {
  const double two_pi = 2.0 * std::numbers::pi;
  const double reach = 1.5 * two_pi / mesh.n_theta;
  double tx[3], tz[3];
  for (int k = 0; k < 3; ++k) {
    const Vec3& p = mesh.nodes[size_t(tri[size_t(k)])];
    double a = std::atan2(p.y, p.x);
    while (a - theta > std::numbers::pi) a -= two_pi;
    while (a - theta < -std::numbers::pi) a += two_pi;
    if (std::abs(a - theta) > reach) return false;
    tx[k] = a;
    tz[k] = p.z;
  }
  const double d = (tx[1] - tx[0]) * (tz[2] - tz[0]) - (tx[2] - tx[0]) * (tz[1] - tz[0]);
  if (std::abs(d) < 1e-15) return false;
  const double l1 = ((theta - tx[0]) * (tz[2] - tz[0]) - (tx[2] - tx[0]) * (z - tz[0])) / d;
  const double l2 = ((tx[1] - tx[0]) * (z - tz[0]) - (theta - tx[0]) * (tz[1] - tz[0])) / d;
  const double l0 = 1.0 - l1 - l2;
  const double tol = -1e-9;
  if (l0 < tol || l1 < tol || l2 < tol) return false;
  w = {std::max(0.0, l0), std::max(0.0, l1), std::max(0.0, l2)};
  const double s = w[0] + w[1] + w[2];
  w = {w[0] / s, w[1] / s, w[2] / s};
  return true;
}

}  // namespace detail

/// Distributes rings x per_ring markers uniformly in (axial, angular)
/// coordinates on the inner surface. Alternate rings stagger by half the
/// angular pitch, so a radially displaced marker never heads straight toward
/// a neighbouring ring's rest position in the image. Rings stay clear of the
/// clamped ends by `margin` (default: fixed_ring_width + 3 element sizes).
inline MarkerSet place_markers(const SkinMesh& mesh, int rings, int per_ring,
                               double diameter = 3.0, double margin = -1.0) {
  if (rings < 1 || per_ring < 1) throw validation_error("markers: rings and per_ring must be >= 1");
  if (!(diameter > 0.0)) throw validation_error("markers: diameter must be positive");

  MarkerSet set;
  set.diameter = diameter;
  set.rings = rings;
  set.per_ring = per_ring;

  if (margin < 0.0) margin = mesh.fixed_ring_width + 3.0 * mesh.element_size;
  const double z_lo = -0.5 * mesh.length + margin;
  const double z_hi = 0.5 * mesh.length - margin;
  if (!(z_lo < z_hi) && rings > 1) throw validation_error("markers: margin leaves no axial span");
  const double two_pi = 2.0 * std::numbers::pi;
  const double dz_band = mesh.length / mesh.n_z;

  for (int r = 0; r < rings; ++r) {
    const double z = rings == 1 ? 0.5 * (z_lo + z_hi)
                                : z_lo + (z_hi - z_lo) * r / (rings - 1);
    const double stagger = (r % 2) * 0.5;
    for (int k = 0; k < per_ring; ++k) {
      const double theta = two_pi * (k + stagger) / per_ring;
      MarkerAnchor anchor;
      anchor.rest_position = {mesh.inner_radius * std::cos(theta),
                              mesh.inner_radius * std::sin(theta), z};
      int band = static_cast<int>(std::floor((z + 0.5 * mesh.length) / dz_band));
      band = std::clamp(band, 0, mesh.n_z - 1);
      bool found = false;
      for (int t = 2 * band * mesh.n_theta; t < 2 * (band + 1) * mesh.n_theta; ++t) {
        std::array<double, 3> w{};
        if (detail::unrolled_barycentric(mesh, mesh.outer_tris[size_t(t)], theta, z, w)) {
          anchor.triangle = t;
          anchor.weights = w;
          found = true;
          break;
        }
      }
      if (!found) throw numerical_error("markers: no containing surface triangle found");
      set.anchors.push_back(anchor);
    }
  }
  return set;
}

/// Rest anchor position advected by the barycentric interpolation of its
/// attachment triangle's nodal displacements.
inline Vec3 marker_world_position(const SkinMesh& mesh, const MarkerAnchor& anchor,
                                  std::span<const Vec3> displacement) {
  if (displacement.size() != mesh.nodes.size())
    throw validation_error("marker_world_position: displacement field size mismatch");
  if (anchor.triangle < 0 || anchor.triangle >= static_cast<int>(mesh.outer_tris.size()))
    throw validation_error("marker_world_position: anchor triangle out of range");
  const auto& tri = mesh.outer_tris[size_t(anchor.triangle)];
  Vec3 p = anchor.rest_position;
  for (int k = 0; k < 3; ++k) p += anchor.weights[size_t(k)] * displacement[size_t(tri[size_t(k)])];
  return p;
}

// ---------------------------------------------------------------------------
// Plain-text mesh exchange: `v x y z` and `t i j k l` lines, 0-based, mm.

inline std::string export_mesh_text(const SkinMesh& mesh) {
  std::string out;
  out.reserve(mesh.nodes.size() * 48 + mesh.tets.size() * 24);
  char line[128];
  for (const Vec3& p : mesh.nodes) {
    std::snprintf(line, sizeof line, "v %.17g %.17g %.17g\n", p.x, p.y, p.z);
    out += line;
  }
  for (const auto& t : mesh.tets) {
    std::snprintf(line, sizeof line, "t %d %d %d %d\n", t[0], t[1], t[2], t[3]);
    out += line;
  }
  return out;
}

struct MeshText {
  std::vector<Vec3> nodes;
  std::vector<std::array<int, 4>> tets;
};

inline MeshText parse_mesh_text(const std::string& text) {
  MeshText out;
  std::istringstream in(text);
  std::string kind;
  while (in >> kind) {
    if (kind == "v") {
      Vec3 p;
      if (!(in >> p.x >> p.y >> p.z)) throw validation_error("mesh text: malformed vertex line");
      out.nodes.push_back(p);
    } else if (kind == "t") {
      std::array<int, 4> t{};
      if (!(in >> t[0] >> t[1] >> t[2] >> t[3]))
        throw validation_error("mesh text: malformed tetrahedron line");
      out.tets.push_back(t);
    } else {
      throw validation_error("mesh text: unknown record '" + kind + "'");
    }
  }
  return out;
}

}  // namespace protac
