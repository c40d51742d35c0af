#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "protac/error.hpp"
#include "protac/mesh.hpp"
#include "protac/parallel.hpp"
#include "protac/sparse.hpp"
#include "protac/vec.hpp"

namespace protac {

/// Linear isotropic elastic material.
struct MaterialParams {
  double youngs_modulus = 0.22;  // N/mm^2
  double poisson_ratio = 0.49;

  void validate() const {
    if (!(youngs_modulus > 0.0)) throw validation_error("material: Young's modulus must be positive");
    if (!(poisson_ratio > 0.0) || !(poisson_ratio < 0.5))
      throw validation_error("material: Poisson ratio must lie in (0, 0.5)");
  }
};

/// Rigid spherical indentor pressed into the skin. `center` is the sphere
/// centre at full depth; `direction` the unit approach direction.
struct IndentorSpec {
  Vec3 center;
  double radius = 6.0;
  Vec3 direction{-1.0, 0.0, 0.0};
  double depth = 0.0;
  double max_depth = 5.0;

  void validate() const {
    if (!(radius > 0.0)) throw validation_error("indentor: radius must be positive");
    if (depth < 0.0 || depth > max_depth)
      throw validation_error("indentor: depth must lie in [0, max_depth]");
    if (std::abs(direction.norm() - 1.0) > 1e-9)
      throw validation_error("indentor: direction must be a unit vector");
  }
};

/// Radially approaching indentor whose contact target is the surface point at
/// (theta, z); at depth 0 the sphere just touches the skin.
inline IndentorSpec make_radial_indentor(const SkinMesh& mesh, double theta, double z,
                                         double depth, double radius = 6.0) {
  IndentorSpec spec;
  spec.radius = radius;
  spec.depth = depth;
  spec.direction = {-std::cos(theta), -std::sin(theta), 0.0};
  const double rc = mesh.skin_radius + radius - depth;
  spec.center = {rc * std::cos(theta), rc * std::sin(theta), z};
  return spec;
}

/// Same, centred on a mesh node (contacts happen at free-node positions).
inline IndentorSpec make_node_indentor(const SkinMesh& mesh, int node, double depth,
                                       double radius = 6.0) {
  const Vec3& p = mesh.nodes[size_t(node)];
  return make_radial_indentor(mesh, std::atan2(p.y, p.x), p.z, depth, radius);
}

/// Ground-truth displacement field from one indentation solve.
struct GroundTruthField {
  std::vector<Vec3> displacement;  // per mesh node, mm
  std::vector<int> contacted;      // nodes with prescribed contact displacement
  IndentorSpec indentor;

  std::span<const Vec3> span() const { return displacement; }
};

// ---------------------------------------------------------------------------
// Stiffness assembly: linear (constant-strain) P1 tetrahedra.

namespace detail {

/// 12x12 element stiffness K_e = V * B^T C B for one tetrahedron.
inline std::array<double, 144> element_stiffness(const Vec3& p0, const Vec3& p1, const Vec3& p2,
                                                 const Vec3& p3, double lambda, double mu) {
  const Vec3 e1 = p1 - p0, e2 = p2 - p0, e3 = p3 - p0;
  const double det = dot(e1, cross(e2, e3));
  if (!(det > 0.0)) throw numerical_error("fem: inverted or degenerate tetrahedron");
  const double volume = det / 6.0;

  // Gradients of the barycentric shape functions.
  const Vec3 g1 = cross(e2, e3) / det;
  const Vec3 g2 = cross(e3, e1) / det;
  const Vec3 g3 = cross(e1, e2) / det;
  const Vec3 g0 = -(g1 + g2 + g3);
  const Vec3 grad[4] = {g0, g1, g2, g3};

  // C in Voigt order (xx, yy, zz, xy, yz, zx).
  double c[6][6] = {};
  c[0][0] = c[1][1] = c[2][2] = lambda + 2.0 * mu;
  c[0][1] = c[0][2] = c[1][0] = c[1][2] = c[2][0] = c[2][1] = lambda;
  c[3][3] = c[4][4] = c[5][5] = mu;

  // B columns for node a, component k.
  auto b_col = [&](int a, int k, double out[6]) {
    const Vec3& g = grad[a];
    for (int r = 0; r < 6; ++r) out[r] = 0.0;
    if (k == 0) { out[0] = g.x; out[3] = g.y; out[5] = g.z; }
    if (k == 1) { out[1] = g.y; out[3] = g.x; out[4] = g.z; }
    if (k == 2) { out[2] = g.z; out[4] = g.y; out[5] = g.x; }
  };

  std::array<double, 144> ke{};
  double bi[6], bj[6], cb[6];
  for (int a = 0; a < 4; ++a)
    for (int k = 0; k < 3; ++k) {
      b_col(a, k, bi);
      for (int r = 0; r < 6; ++r) {
        double s = 0.0;
        for (int t = 0; t < 6; ++t) s += c[r][t] * bi[t];
        cb[r] = s;
      }
      for (int b = 0; b < 4; ++b)
        for (int l = 0; l < 3; ++l) {
          b_col(b, l, bj);
          double s = 0.0;
          for (int r = 0; r < 6; ++r) s += bj[r] * cb[r];
          ke[size_t((3 * a + k) * 12 + (3 * b + l))] = volume * s;
        }
    }
  return ke;
}

}  // namespace detail

inline void lame_parameters(const MaterialParams& mat, double& lambda, double& mu) {
  lambda = mat.youngs_modulus * mat.poisson_ratio /
           ((1.0 + mat.poisson_ratio) * (1.0 - 2.0 * mat.poisson_ratio));
  mu = mat.youngs_modulus / (2.0 * (1.0 + mat.poisson_ratio));
}

/// Assembles the global stiffness matrix (3 DOF per node). Symmetric positive
/// semi-definite; rigid-body motions span its kernel until constraints are
/// applied.
inline CsrMatrix assemble_stiffness(const SkinMesh& mesh, const MaterialParams& material) {
  material.validate();
  double lambda, mu;
  lame_parameters(material, lambda, mu);

  const int n_dof = 3 * mesh.node_count();
  TripletBuilder builder(n_dof);
  for (const auto& tet : mesh.tets) {
    const auto ke = detail::element_stiffness(mesh.nodes[size_t(tet[0])], mesh.nodes[size_t(tet[1])],
                                              mesh.nodes[size_t(tet[2])], mesh.nodes[size_t(tet[3])],
                                              lambda, mu);
    for (int a = 0; a < 4; ++a)
      for (int k = 0; k < 3; ++k)
        for (int b = 0; b < 4; ++b)
          for (int l = 0; l < 3; ++l)
            builder.add(3 * tet[size_t(a)] + k, 3 * tet[size_t(b)] + l,
                        ke[size_t((3 * a + k) * 12 + (3 * b + l))]);
  }
  return builder.build();
}

// ---------------------------------------------------------------------------
// Indentation solve

struct SolveOptions {
  double rel_tol = 1e-8;      // CG convergence, relative residual
  int max_iter_factor = 10;   // iteration cap = factor * unknown DOFs
};

namespace detail {

/// Displacement prescribed on a penetrating node: slide it along the approach
/// direction until it reaches the sphere surface ahead of the indentor.
inline Vec3 contact_displacement(const Vec3& node, const IndentorSpec& ind) {
  const Vec3 d = node - ind.center;
  const double a = dot(d, ind.direction);
  const double disc = a * a + ind.radius * ind.radius - d.norm2();
  const double s = -a + std::sqrt(disc);
  return s * ind.direction;
}

}  // namespace detail

/// Solves one indentation: penetrating non-fixed nodes receive prescribed
/// displacements projecting them onto the sphere, fixed nodes pin at zero, and
/// the remaining DOFs solve the reduced SPD system by Jacobi-preconditioned
/// conjugate gradients.
inline GroundTruthField solve_indentation(const SkinMesh& mesh, const CsrMatrix& stiffness,
                                          const IndentorSpec& indentor,
                                          const SolveOptions& options = {}) {
  indentor.validate();
  if (stiffness.n != 3 * mesh.node_count())
    throw validation_error("solve_indentation: stiffness size does not match mesh");

  // The indentor axis must intersect the skin cylinder.
  {
    const double ox = indentor.center.x, oy = indentor.center.y;
    const double dx = indentor.direction.x, dy = indentor.direction.y;
    const double a = dx * dx + dy * dy;
    const double b = ox * dx + oy * dy;
    const double c = ox * ox + oy * oy - mesh.skin_radius * mesh.skin_radius;
    if (a < 1e-15 || b * b - a * c < 0.0)
      throw validation_error("solve_indentation: indentor axis misses the skin surface");
  }

  GroundTruthField field;
  field.indentor = indentor;
  field.displacement.assign(mesh.nodes.size(), Vec3{});

  std::vector<signed char> prescribed(mesh.nodes.size(), 0);
  for (int id : mesh.fixed_set) prescribed[size_t(id)] = 1;

  const double reach2 = indentor.radius * indentor.radius;
  for (int i = 0; i < mesh.node_count(); ++i) {
    if (prescribed[size_t(i)]) continue;
    if ((mesh.nodes[size_t(i)] - indentor.center).norm2() < reach2 - 1e-12) {
      prescribed[size_t(i)] = 2;
      field.contacted.push_back(i);
      field.displacement[size_t(i)] = detail::contact_displacement(mesh.nodes[size_t(i)], indentor);
    }
  }
  if (indentor.depth > 0.0 && field.contacted.empty())
    throw numerical_error("solve_indentation: no node penetrates the indentor (depth " +
                          std::to_string(indentor.depth) + ")");
  if (field.contacted.empty()) return field;  // unloaded state

  // Unknown DOF numbering.
  std::vector<int> dof_index(static_cast<size_t>(stiffness.n), -1);
  std::vector<int> unknown;
  for (int node = 0; node < mesh.node_count(); ++node) {
    if (prescribed[size_t(node)]) continue;
    for (int k = 0; k < 3; ++k) {
      dof_index[size_t(3 * node + k)] = static_cast<int>(unknown.size());
      unknown.push_back(3 * node + k);
    }
  }

  // Reduced system A_uu x = -A_up u_p, extracted row-wise from the CSR matrix.
  const int n_unknown = static_cast<int>(unknown.size());
  CsrMatrix reduced;
  reduced.n = n_unknown;
  reduced.row_ptr.assign(static_cast<size_t>(n_unknown) + 1, 0);
  std::vector<double> rhs(static_cast<size_t>(n_unknown), 0.0);
  auto prescribed_value = [&](int dof) {
    const int node = dof / 3;
    const int comp = dof % 3;
    const Vec3& d = field.displacement[size_t(node)];
    return comp == 0 ? d.x : comp == 1 ? d.y : d.z;
  };
  for (int u = 0; u < n_unknown; ++u) {
    const int row = unknown[size_t(u)];
    for (int k = stiffness.row_ptr[size_t(row)]; k < stiffness.row_ptr[size_t(row) + 1]; ++k) {
      const int col = stiffness.col[size_t(k)];
      const int uc = dof_index[size_t(col)];
      if (uc >= 0) {
        reduced.col.push_back(uc);
        reduced.val.push_back(stiffness.val[size_t(k)]);
        reduced.row_ptr[size_t(u) + 1]++;
      } else {
        rhs[size_t(u)] -= stiffness.val[size_t(k)] * prescribed_value(col);
      }
    }
  }
  for (int u = 0; u < n_unknown; ++u) reduced.row_ptr[size_t(u) + 1] += reduced.row_ptr[size_t(u)];

  std::vector<double> x;
  const PcgResult res = pcg_solve(reduced, rhs, x, options.rel_tol,
                                  options.max_iter_factor * n_unknown);
  if (!res.converged)
    throw numerical_error("solve_indentation: CG did not converge (rel residual " +
                          std::to_string(res.rel_residual) + ")");

  for (int u = 0; u < n_unknown; ++u) {
    const int dof = unknown[size_t(u)];
    Vec3& d = field.displacement[size_t(dof / 3)];
    (dof % 3 == 0 ? d.x : dof % 3 == 1 ? d.y : d.z) = x[size_t(u)];
  }
  return field;
}

// ---------------------------------------------------------------------------
// Dataset generation

struct ContactGrid {
  std::vector<int> location_nodes;  // free node ids
  std::vector<double> depths;       // mm
};

struct DatasetRecord {
  GroundTruthField field;
  int location_index = 0;  // index into the grid's location list
  double depth = 0.0;
};

/// Picks `count` free nodes spread over rings adjacent to the default marker
/// rings and uniformly in angle. Deterministic for a fixed mesh.
inline std::vector<int> default_contact_nodes(const SkinMesh& mesh, int count) {
  const int side = std::max(1, static_cast<int>(std::lround(std::sqrt(double(count)))));
  std::vector<int> nodes;
  // Free axial rings, excluding one ring of margin next to the clamped bands.
  std::vector<int> free_rings;
  for (int j = 0; j <= mesh.n_z; ++j) {
    const double z = mesh.ring_z(j);
    const double lim = 0.5 * mesh.length - mesh.fixed_ring_width - 1.5 * mesh.element_size;
    if (std::abs(z) < lim) free_rings.push_back(j);
  }
  if (free_rings.empty()) throw validation_error("contact grid: no free rings available");
  for (int a = 0; a < side && static_cast<int>(nodes.size()) < count; ++a) {
    const int ring = free_rings[size_t((free_rings.size() - 1) * a / std::max(1, side - 1))];
    for (int b = 0; b < side && static_cast<int>(nodes.size()) < count; ++b) {
      const int column = static_cast<int>((static_cast<long>(b) * mesh.n_theta) / side);
      nodes.push_back(mesh.outer_node_id(ring, column));
    }
  }
  return nodes;
}

/// Solves the whole contact grid (location-major, then depth). Records are
/// independent, so they run in parallel; ordering stays deterministic.
inline std::vector<DatasetRecord> generate_dataset(const SkinMesh& mesh,
                                                   const MaterialParams& material,
                                                   const ContactGrid& grid,
                                                   const SolveOptions& options = {}) {
  if (grid.location_nodes.empty() || grid.depths.empty())
    throw validation_error("generate_dataset: empty contact grid");
  const CsrMatrix stiffness = assemble_stiffness(mesh, material);

  const int n_loc = static_cast<int>(grid.location_nodes.size());
  const int n_depth = static_cast<int>(grid.depths.size());
  std::vector<DatasetRecord> records(static_cast<size_t>(n_loc) * static_cast<size_t>(n_depth));
  parallel_for(n_loc * n_depth, [&](int idx) {
    const int loc = idx / n_depth;
    const int di = idx % n_depth;
    DatasetRecord& rec = records[size_t(idx)];
    rec.location_index = loc;
    rec.depth = grid.depths[size_t(di)];
    const IndentorSpec ind = make_node_indentor(mesh, grid.location_nodes[size_t(loc)], rec.depth);
    try {
      rec.field = solve_indentation(mesh, stiffness, ind, options);
    } catch (const error& e) {
      throw numerical_error("dataset record (location " + std::to_string(loc) + ", depth " +
                            std::to_string(rec.depth) + "): " + e.what());
    }
  });
  return records;
}

// ---------------------------------------------------------------------------
// Dataset serialization: one record per file, plus an ordered manifest.

inline std::string write_dataset_record(const DatasetRecord& rec) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "indentor %d %.17g\n", rec.location_index, rec.depth);
  out += line;
  for (size_t i = 0; i < rec.field.displacement.size(); ++i) {
    const Vec3& d = rec.field.displacement[i];
    std::snprintf(line, sizeof line, "d %zu %.17g %.17g %.17g\n", i, d.x, d.y, d.z);
    out += line;
  }
  return out;
}

inline DatasetRecord read_dataset_record(const std::string& text) {
  DatasetRecord rec;
  std::istringstream in(text);
  std::string tag;
  if (!(in >> tag) || tag != "indentor" || !(in >> rec.location_index >> rec.depth))
    throw validation_error("dataset record: malformed header");
  size_t index = 0;
  while (in >> tag) {
    if (tag != "d") throw validation_error("dataset record: unexpected line tag '" + tag + "'");
    size_t i;
    Vec3 d;
    if (!(in >> i >> d.x >> d.y >> d.z) || i != index)
      throw validation_error("dataset record: malformed displacement line");
    rec.field.displacement.push_back(d);
    ++index;
  }
  return rec;
}

}  // namespace protac
