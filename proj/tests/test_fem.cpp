#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "protac/dense.hpp"
#include "protac/fem.hpp"
#include "protac/rng.hpp"
#include "protac/tactile.hpp"

using namespace protac;

namespace {

// One regular tetrahedron as a minimal mesh-like fixture.
SkinMesh single_tet_mesh() {
  SkinMesh mesh;
  mesh.nodes = {{0, 0, 0}, {1, 0, 0}, {0.5, std::sqrt(3.0) / 2.0, 0},
                {0.5, std::sqrt(3.0) / 6.0, std::sqrt(2.0 / 3.0)}};
  mesh.tets = {{0, 1, 2, 3}};
  mesh.node_kind.assign(4, NodeKind::kOuterGrid);
  mesh.free_lookup.assign(4, -1);
  mesh.skin_radius = 1.0;
  return mesh;
}

const SkinMesh& default_mesh() {
  static const SkinMesh mesh = build_cylinder_mesh(40, 300, 10, 15);
  return mesh;
}

const CsrMatrix& default_stiffness() {
  static const CsrMatrix k = assemble_stiffness(default_mesh(), MaterialParams{});
  return k;
}

// Independent scalar-loop element assembly: K_e = V * B^T C B written out
// index by index, used as the oracle for the production assembly.
void oracle_element(const Vec3 p[4], double e_mod, double nu, double ke[12][12]) {
  const double lambda = e_mod * nu / ((1 + nu) * (1 - 2 * nu));
  const double mu = e_mod / (2 * (1 + nu));
  // Shape gradients via explicit 3x3 inverse.
  double m[3][3] = {{p[1].x - p[0].x, p[2].x - p[0].x, p[3].x - p[0].x},
                    {p[1].y - p[0].y, p[2].y - p[0].y, p[3].y - p[0].y},
                    {p[1].z - p[0].z, p[2].z - p[0].z, p[3].z - p[0].z}};
  const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                     m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                     m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  const double volume = det / 6.0;
  double inv[3][3];
  inv[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
  inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
  inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
  inv[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
  inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
  inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
  inv[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
  inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
  inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
  double grad[4][3];
  for (int a = 1; a <= 3; ++a)
    for (int c = 0; c < 3; ++c) grad[a][c] = inv[a - 1][c];
  for (int c = 0; c < 3; ++c) grad[0][c] = -(grad[1][c] + grad[2][c] + grad[3][c]);

  double cmat[6][6] = {};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) cmat[i][j] = lambda + (i == j ? 2 * mu : 0.0);
  cmat[3][3] = cmat[4][4] = cmat[5][5] = mu;

  auto b_entry = [&](int row, int node, int comp) -> double {
    // Voigt rows: xx, yy, zz, xy, yz, zx.
    const double gx = grad[node][0], gy = grad[node][1], gz = grad[node][2];
    switch (row) {
      case 0: return comp == 0 ? gx : 0.0;
      case 1: return comp == 1 ? gy : 0.0;
      case 2: return comp == 2 ? gz : 0.0;
      case 3: return comp == 0 ? gy : comp == 1 ? gx : 0.0;
      case 4: return comp == 1 ? gz : comp == 2 ? gy : 0.0;
      case 5: return comp == 0 ? gz : comp == 2 ? gx : 0.0;
    }
    return 0.0;
  };
  for (int a = 0; a < 4; ++a)
    for (int i = 0; i < 3; ++i)
      for (int b = 0; b < 4; ++b)
        for (int j = 0; j < 3; ++j) {
          double s = 0.0;
          for (int r = 0; r < 6; ++r)
            for (int t = 0; t < 6; ++t)
              s += b_entry(r, a, i) * cmat[r][t] * b_entry(t, b, j);
          ke[3 * a + i][3 * b + j] = volume * s;
        }
}

DenseMatrix to_dense(const CsrMatrix& a) {
  DenseMatrix d(a.n, a.n);
  for (int i = 0; i < a.n; ++i)
    for (int k = a.row_ptr[size_t(i)]; k < a.row_ptr[size_t(i) + 1]; ++k)
      d.at(i, a.col[size_t(k)]) += a.val[size_t(k)];
  return d;
}

double field_energy(const CsrMatrix& k, const std::vector<Vec3>& field) {
  std::vector<double> u(field.size() * 3);
  for (size_t i = 0; i < field.size(); ++i) {
    u[3 * i] = field[i].x;
    u[3 * i + 1] = field[i].y;
    u[3 * i + 2] = field[i].z;
  }
  std::vector<double> ku;
  k.apply(u, ku);
  return 0.5 * dot(u, ku);
}

int node_at(const SkinMesh& mesh, double x, double y, double z) {
  int best = -1;
  double bd = 1e300;
  for (int id : mesh.free_set) {
    const Vec3& p = mesh.nodes[size_t(id)];
    const double d = (p - Vec3{x, y, z}).norm();
    if (d < bd) {
      bd = d;
      best = id;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("stiffness of a single tetrahedron") {
  const SkinMesh mesh = single_tet_mesh();
  MaterialParams mat;
  const CsrMatrix k = assemble_stiffness(mesh, mat);
  REQUIRE(k.n == 12);
  const DenseMatrix d = to_dense(k);

  SECTION("symmetric to 1e-12 relative") {
    double scale = 0.0;
    for (double v : d.data) scale = std::max(scale, std::abs(v));
    for (int i = 0; i < 12; ++i)
      for (int j = 0; j < 12; ++j)
        CHECK(std::abs(d.at(i, j) - d.at(j, i)) <= 1e-12 * scale);
  }

  SECTION("rigid translations and rotations lie in the kernel") {
    std::vector<std::vector<double>> modes;
    for (int c = 0; c < 3; ++c) {
      std::vector<double> t(12, 0.0);
      for (int n = 0; n < 4; ++n) t[size_t(3 * n + c)] = 1.0;
      modes.push_back(t);
    }
    const Vec3 axes[3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    for (const Vec3& w : axes) {
      std::vector<double> r(12);
      for (int n = 0; n < 4; ++n) {
        const Vec3 v = cross(w, mesh.nodes[size_t(n)]);
        r[size_t(3 * n)] = v.x;
        r[size_t(3 * n + 1)] = v.y;
        r[size_t(3 * n + 2)] = v.z;
      }
      modes.push_back(r);
    }
    for (const auto& mode : modes) {
      std::vector<double> out;
      k.apply(mode, out);
      for (double v : out) CHECK(std::abs(v) < 1e-10);
    }
  }

  SECTION("doubling E doubles K exactly") {
    MaterialParams mat2;
    mat2.youngs_modulus = 2.0 * mat.youngs_modulus;
    const CsrMatrix k2 = assemble_stiffness(mesh, mat2);
    REQUIRE(k2.val.size() == k.val.size());
    for (size_t i = 0; i < k.val.size(); ++i)
      CHECK(k2.val[i] == Catch::Approx(2.0 * k.val[i]).epsilon(1e-15));
  }
}

TEST_CASE("assembly matches the element-by-element hand oracle") {
  // Two tets sharing a face.
  SkinMesh mesh;
  mesh.nodes = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 1}};
  mesh.tets = {{0, 1, 2, 3}, {1, 2, 3, 4}};
  // Fix orientations.
  for (auto& t : mesh.tets)
    if (signed_tet_volume(mesh.nodes[size_t(t[0])], mesh.nodes[size_t(t[1])],
                          mesh.nodes[size_t(t[2])], mesh.nodes[size_t(t[3])]) < 0)
      std::swap(t[2], t[3]);
  mesh.node_kind.assign(5, NodeKind::kOuterGrid);
  mesh.free_lookup.assign(5, -1);
  mesh.skin_radius = 1.0;

  MaterialParams mat;
  mat.youngs_modulus = 0.37;
  mat.poisson_ratio = 0.41;
  const DenseMatrix got = to_dense(assemble_stiffness(mesh, mat));

  DenseMatrix expect(15, 15);
  for (const auto& t : mesh.tets) {
    Vec3 p[4];
    for (int a = 0; a < 4; ++a) p[a] = mesh.nodes[size_t(t[size_t(a)])];
    double ke[12][12];
    oracle_element(p, mat.youngs_modulus, mat.poisson_ratio, ke);
    for (int a = 0; a < 4; ++a)
      for (int i = 0; i < 3; ++i)
        for (int b = 0; b < 4; ++b)
          for (int j = 0; j < 3; ++j)
            expect.at(3 * t[size_t(a)] + i, 3 * t[size_t(b)] + j) += ke[3 * a + i][3 * b + j];
  }
  double scale = 0.0;
  for (double v : expect.data) scale = std::max(scale, std::abs(v));
  for (size_t i = 0; i < expect.data.size(); ++i)
    CHECK(std::abs(got.data[i] - expect.data[i]) <= 1e-12 * scale);
}

TEST_CASE("inverted elements are rejected") {
  SkinMesh mesh = single_tet_mesh();
  std::swap(mesh.tets[0][2], mesh.tets[0][3]);  // flip orientation
  CHECK_THROWS_AS(assemble_stiffness(mesh, MaterialParams{}), numerical_error);
}

TEST_CASE("CG solution matches a dense direct solve on a small mesh") {
  const SkinMesh mesh = build_cylinder_mesh(15, 40, 12, 5);
  REQUIRE(3 * mesh.node_count() <= 450);
  const MaterialParams mat;
  const CsrMatrix k = assemble_stiffness(mesh, mat);
  const int node = node_at(mesh, mesh.skin_radius, 0, 0);
  const IndentorSpec ind = make_node_indentor(mesh, node, 2.0, 6.0);
  const GroundTruthField field = solve_indentation(mesh, k, ind);

  // Dense route: eliminate prescribed DOFs by hand.
  std::vector<signed char> prescribed(mesh.nodes.size(), 0);
  for (int id : mesh.fixed_set) prescribed[size_t(id)] = 1;
  for (int id : field.contacted) prescribed[size_t(id)] = 1;
  std::vector<int> unknown;
  for (int n = 0; n < mesh.node_count(); ++n)
    if (!prescribed[size_t(n)])
      for (int c = 0; c < 3; ++c) unknown.push_back(3 * n + c);
  const DenseMatrix kd = to_dense(k);
  DenseMatrix a(static_cast<int>(unknown.size()), static_cast<int>(unknown.size()));
  std::vector<double> rhs(unknown.size(), 0.0);
  auto value_of = [&](int dof) {
    const Vec3& d = field.displacement[size_t(dof / 3)];
    return dof % 3 == 0 ? d.x : dof % 3 == 1 ? d.y : d.z;
  };
  for (size_t r = 0; r < unknown.size(); ++r) {
    for (int cdof = 0; cdof < kd.cols; ++cdof) {
      const auto it = std::lower_bound(unknown.begin(), unknown.end(), cdof);
      if (it != unknown.end() && *it == cdof) {
        a.at(static_cast<int>(r), static_cast<int>(it - unknown.begin())) =
            kd.at(unknown[r], cdof);
      } else {
        rhs[r] -= kd.at(unknown[r], cdof) * value_of(cdof);
      }
    }
  }
  const auto direct = cholesky_solve(a, rhs);
  double num = 0.0, den = 0.0;
  for (size_t r = 0; r < unknown.size(); ++r) {
    const double cg = value_of(unknown[r]);
    num += (cg - direct[r]) * (cg - direct[r]);
    den += direct[r] * direct[r];
  }
  CHECK(std::sqrt(num / den) < 1e-6);
}

TEST_CASE("indentation solve on the default link") {
  const SkinMesh& mesh = default_mesh();
  const CsrMatrix& k = default_stiffness();
  const int mid = node_at(mesh, mesh.skin_radius, 0, 0);

  SECTION("zero depth gives an identically zero field") {
    const GroundTruthField f = solve_indentation(mesh, k, make_node_indentor(mesh, mid, 0.0));
    CHECK(f.contacted.empty());
    for (const Vec3& d : f.displacement) CHECK(d.norm2() == 0.0);
  }

  SECTION("max displacement equals the prescribed depth at a contacted node") {
    const GroundTruthField f = solve_indentation(mesh, k, make_node_indentor(mesh, mid, 5.0));
    const ContactDepth dc = contact_depth(mesh, f);
    CHECK(std::abs(dc.depth - 5.0) < 1e-6);
    CHECK(std::find(f.contacted.begin(), f.contacted.end(), dc.node) != f.contacted.end());
    for (int id : mesh.fixed_set) CHECK(f.displacement[size_t(id)].norm2() == 0.0);
  }

  SECTION("strain energy is positive under load") {
    const GroundTruthField f = solve_indentation(mesh, k, make_node_indentor(mesh, mid, 2.0));
    CHECK(field_energy(k, f.displacement) > 0.0);
    const GroundTruthField f0 = solve_indentation(mesh, k, make_node_indentor(mesh, mid, 0.0));
    CHECK(field_energy(k, f0.displacement) == 0.0);
  }

  SECTION("doubling E leaves the kinematically driven field unchanged") {
    MaterialParams stiffer;
    stiffer.youngs_modulus = 2.0 * MaterialParams{}.youngs_modulus;
    const CsrMatrix k2 = assemble_stiffness(mesh, stiffer);
    const IndentorSpec ind = make_node_indentor(mesh, mid, 3.0);
    const GroundTruthField a = solve_indentation(mesh, k, ind);
    const GroundTruthField b = solve_indentation(mesh, k2, ind);
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < a.displacement.size(); ++i) {
      num += (a.displacement[i] - b.displacement[i]).norm2();
      den += a.displacement[i].norm2();
    }
    CHECK(std::sqrt(num / den) < 1e-8);
  }

  SECTION("max displacement grows monotonically with depth") {
    double prev = -1.0;
    for (double depth : {1.0, 2.0, 3.0, 4.0, 5.0}) {
      const GroundTruthField f = solve_indentation(mesh, k, make_node_indentor(mesh, mid, depth));
      const double dc = contact_depth(mesh, f).depth;
      CHECK(dc >= prev);
      prev = dc;
    }
  }

  SECTION("mirror-opposed indentations produce mirror fields") {
    // Indentations at theta and theta + pi, related by the reflection y -> -y.
    const double theta = std::numbers::pi / 2.0;
    const GroundTruthField f1 =
        solve_indentation(mesh, k, make_radial_indentor(mesh, theta, 0.0, 5.0));
    const GroundTruthField f2 =
        solve_indentation(mesh, k, make_radial_indentor(mesh, theta + std::numbers::pi, 0.0, 5.0));
    REQUIRE_FALSE(f1.contacted.empty());

    // Node permutation map under the reflection, built geometrically.
    std::map<std::array<long long, 3>, int> index;
    auto key = [](const Vec3& p) {
      return std::array<long long, 3>{std::llround(p.x * 1e6), std::llround(p.y * 1e6),
                                      std::llround(p.z * 1e6)};
    };
    for (int i = 0; i < mesh.node_count(); ++i) index[key(mesh.nodes[size_t(i)])] = i;
    double num = 0.0, den = 0.0;
    for (int i = 0; i < mesh.node_count(); ++i) {
      const Vec3 reflected{mesh.nodes[size_t(i)].x, -mesh.nodes[size_t(i)].y,
                           mesh.nodes[size_t(i)].z};
      const auto it = index.find(key(reflected));
      REQUIRE(it != index.end());
      const Vec3& d1 = f1.displacement[size_t(i)];
      const Vec3& d2 = f2.displacement[size_t(it->second)];
      const Vec3 mirrored{d2.x, -d2.y, d2.z};
      num += (d1 - mirrored).norm2();
      den += d1.norm2();
    }
    CHECK(std::sqrt(num / den) < 1e-6);
  }

  SECTION("an indentor missing the surface is rejected") {
    IndentorSpec ind;
    ind.center = {mesh.skin_radius + 100.0, 0, 0};
    ind.direction = {0, 1, 0};  // tangential: never meets the cylinder
    ind.depth = 1.0;
    ind.radius = 6.0;
    CHECK_THROWS_AS(solve_indentation(mesh, k, ind), validation_error);
  }

  SECTION("depth without penetration raises the no-contact error") {
    IndentorSpec ind = make_node_indentor(mesh, mid, 1.0, 6.0);
    // Move the sphere outward so nothing penetrates while the axis still hits.
    ind.center = ind.center - ind.direction * 10.0;
    CHECK_THROWS_AS(solve_indentation(mesh, k, ind), numerical_error);
  }
}

TEST_CASE("dataset generation") {
  const SkinMesh mesh = build_cylinder_mesh(15, 60, 8, 6);
  const MaterialParams mat;

  SECTION("one location and depth yields one record") {
    const ContactGrid grid{{node_at(mesh, mesh.skin_radius, 0, 0)}, {1.5}};
    const auto records = generate_dataset(mesh, mat, grid);
    REQUIRE(records.size() == 1);
    CHECK(records[0].depth == 1.5);
    CHECK(records[0].location_index == 0);
  }

  SECTION("desk-scale grid shape: 49 locations x 5 depths = 245 records") {
    const ContactGrid grid{default_contact_nodes(mesh, 49), {1, 2, 3, 4, 5}};
    REQUIRE(grid.location_nodes.size() == 49);
    const auto records = generate_dataset(mesh, mat, grid);
    CHECK(records.size() == 245);
    // deterministic ordering: location-major, then depth
    CHECK(records[0].location_index == 0);
    CHECK(records[4].depth == 5.0);
    CHECK(records[5].location_index == 1);
  }

  SECTION("a zero-depth grid point yields an identically zero record") {
    const ContactGrid grid{{node_at(mesh, mesh.skin_radius, 0, 0)}, {0.0, 1.0}};
    const auto records = generate_dataset(mesh, mat, grid);
    REQUIRE(records.size() == 2);
    for (const Vec3& d : records[0].field.displacement) CHECK(d.norm2() == 0.0);
  }

  SECTION("solver failures carry the offending grid point") {
    // A clamped node: the indentor reaches nothing movable at shallow depth.
    const ContactGrid grid{{mesh.fixed_set[0]}, {0.2}};
    try {
      generate_dataset(mesh, mat, grid);
      FAIL("expected a numerical_error");
    } catch (const numerical_error& e) {
      CHECK(std::string(e.what()).find("location 0") != std::string::npos);
    }
  }
}

TEST_CASE("dataset record serialization round trip") {
  const SkinMesh mesh = build_cylinder_mesh(15, 60, 8, 6);
  const ContactGrid grid{{node_at(mesh, mesh.skin_radius, 0, 0)}, {2.0}};
  const auto records = generate_dataset(mesh, MaterialParams{}, grid);
  const std::string text = write_dataset_record(records[0]);
  const DatasetRecord parsed = read_dataset_record(text);
  CHECK(parsed.location_index == records[0].location_index);
  CHECK(parsed.depth == records[0].depth);
  REQUIRE(parsed.field.displacement.size() == records[0].field.displacement.size());
  for (size_t i = 0; i < parsed.field.displacement.size(); ++i)
    CHECK((parsed.field.displacement[i] - records[0].field.displacement[i]).norm() == 0.0);
}
