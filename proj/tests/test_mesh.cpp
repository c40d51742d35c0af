#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstring>
#include <map>
#include <numbers>
#include <set>

#include "protac/mesh.hpp"
#include "protac/rng.hpp"

using namespace protac;

namespace {

const SkinMesh& default_mesh() {
  static const SkinMesh mesh = build_cylinder_mesh(40, 300, 10, 15);
  return mesh;
}

double mesh_volume(const SkinMesh& mesh) {
  double v = 0.0;
  for (const auto& t : mesh.tets)
    v += signed_tet_volume(mesh.nodes[size_t(t[0])], mesh.nodes[size_t(t[1])],
                           mesh.nodes[size_t(t[2])], mesh.nodes[size_t(t[3])]);
  return v;
}

}  // namespace

TEST_CASE("default link exposes 621 free outer nodes") {
  const SkinMesh& mesh = default_mesh();
  CHECK(mesh.free_count() == 621);
  CHECK(static_cast<int>(mesh.free_set.size() + mesh.fixed_set.size()) == mesh.outer_grid_count);
  for (int id : mesh.free_set) CHECK(mesh.node_kind[size_t(id)] == NodeKind::kOuterGrid);
  for (int id : mesh.fixed_set) CHECK(mesh.node_kind[size_t(id)] == NodeKind::kOuterGrid);
  // free and fixed are disjoint
  std::set<int> free(mesh.free_set.begin(), mesh.free_set.end());
  for (int id : mesh.fixed_set) CHECK_FALSE(free.count(id));
}

TEST_CASE("outer nodes sit on the skin radius") {
  const SkinMesh& mesh = default_mesh();
  for (int k = 0; k < mesh.outer_grid_count; ++k)
    CHECK(std::abs(mesh.nodes[size_t(k)].radial() - mesh.skin_radius) <
          mesh.element_size / 10.0);
}

TEST_CASE("every tetrahedron has positive volume") {
  const SkinMesh& mesh = default_mesh();
  for (const auto& t : mesh.tets)
    CHECK(signed_tet_volume(mesh.nodes[size_t(t[0])], mesh.nodes[size_t(t[1])],
                            mesh.nodes[size_t(t[2])], mesh.nodes[size_t(t[3])]) > 0.0);
}

TEST_CASE("tet volume sums to the analytic shell volume within 5%") {
  const SkinMesh& mesh = default_mesh();
  const double analytic = std::numbers::pi *
                          (mesh.skin_radius * mesh.skin_radius -
                           mesh.inner_radius * mesh.inner_radius) *
                          mesh.length;
  CHECK(mesh_volume(mesh) == Catch::Approx(analytic).epsilon(0.05));

  const SkinMesh other = build_cylinder_mesh(60, 200, 12, 20);
  const double analytic2 = std::numbers::pi *
                           (other.skin_radius * other.skin_radius -
                            other.inner_radius * other.inner_radius) *
                           other.length;
  CHECK(mesh_volume(other) == Catch::Approx(analytic2).epsilon(0.05));
}

TEST_CASE("degenerate parameters are rejected") {
  CHECK_THROWS_AS(build_cylinder_mesh(40, 300, 40, 15), validation_error);
  CHECK_THROWS_AS(build_cylinder_mesh(40, 300, 45, 15), validation_error);
  CHECK_THROWS_AS(build_cylinder_mesh(40, 25, 10, 15), validation_error);
  CHECK_THROWS_AS(build_cylinder_mesh(-1, 300, 10, 15), validation_error);
}

TEST_CASE("mesh construction is deterministic") {
  const SkinMesh a = build_cylinder_mesh(40, 300, 10, 15);
  const SkinMesh b = build_cylinder_mesh(40, 300, 10, 15);
  REQUIRE(a.nodes.size() == b.nodes.size());
  CHECK(std::memcmp(a.nodes.data(), b.nodes.data(), a.nodes.size() * sizeof(Vec3)) == 0);
  CHECK(a.tets == b.tets);
  CHECK(a.free_set == b.free_set);
}

TEST_CASE("watertight shell: boundary faces close up") {
  const SkinMesh& mesh = default_mesh();
  std::map<std::array<int, 3>, int> face_count;
  for (const auto& t : mesh.tets) {
    const std::array<std::array<int, 3>, 4> faces{{{t[0], t[1], t[2]},
                                                   {t[0], t[1], t[3]},
                                                   {t[0], t[2], t[3]},
                                                   {t[1], t[2], t[3]}}};
    for (auto f : faces) {
      std::sort(f.begin(), f.end());
      face_count[f]++;
    }
  }
  std::map<std::array<int, 2>, int> boundary_edge_count;
  for (const auto& [face, count] : face_count) {
    REQUIRE(count <= 2);
    if (count == 1) {
      const std::array<std::array<int, 2>, 3> edges{{{face[0], face[1]},
                                                     {face[0], face[2]},
                                                     {face[1], face[2]}}};
      for (const auto& e : edges) boundary_edge_count[e]++;
    }
  }
  // A closed boundary surface has every boundary edge in exactly two faces.
  for (const auto& [edge, count] : boundary_edge_count) CHECK(count == 2);
}

TEST_CASE("rotation by the angular step permutes rest positions") {
  const SkinMesh& mesh = default_mesh();
  const double step = 2.0 * std::numbers::pi / mesh.n_theta;
  const Mat3 rot = Mat3::rot_z(step);

  auto key = [](const Vec3& p) {
    return std::array<long long, 3>{std::llround(p.x * 1e6), std::llround(p.y * 1e6),
                                    std::llround(p.z * 1e6)};
  };
  std::set<std::array<long long, 3>> original;
  for (const Vec3& p : mesh.nodes) original.insert(key(p));
  for (const Vec3& p : mesh.nodes) {
    const Vec3 q = rot * p;
    CHECK(original.count(key(q)));
  }
}

TEST_CASE("marker placement examples") {
  const SkinMesh& mesh = default_mesh();

  SECTION("single marker lands at mid-length") {
    const MarkerSet set = place_markers(mesh, 1, 1);
    REQUIRE(set.anchors.size() == 1);
    CHECK(set.anchors[0].rest_position.z == Catch::Approx(0.0).margin(1e-12));
    CHECK(set.anchors[0].rest_position.radial() ==
          Catch::Approx(mesh.inner_radius).margin(1e-9));
  }

  SECTION("4x8 grid has 45 degree spacing within each ring") {
    const MarkerSet set = place_markers(mesh, 4, 8);
    REQUIRE(set.anchors.size() == 32);
    for (int ring = 0; ring < 4; ++ring) {
      for (int k = 0; k < 8; ++k) {
        const Vec3& a = set.anchors[size_t(ring * 8 + k)].rest_position;
        const Vec3& b = set.anchors[size_t(ring * 8 + (k + 1) % 8)].rest_position;
        double diff = std::atan2(b.y, b.x) - std::atan2(a.y, a.x);
        while (diff < 0) diff += 2.0 * std::numbers::pi;
        CHECK(diff == Catch::Approx(std::numbers::pi / 4.0).margin(1e-9));
      }
    }
  }

  SECTION("all anchors sit exactly on the inner radius") {
    const MarkerSet set = place_markers(mesh, 8, 16);
    REQUIRE(set.anchors.size() == 128);
    for (const auto& a : set.anchors)
      CHECK(std::abs(a.rest_position.radial() - mesh.inner_radius) < 1e-9);
  }

  SECTION("bad parameters rejected") {
    CHECK_THROWS_AS(place_markers(mesh, 0, 8), validation_error);
    CHECK_THROWS_AS(place_markers(mesh, 2, 8, -1.0), validation_error);
  }
}

TEST_CASE("marker advection under displacement fields") {
  const SkinMesh& mesh = default_mesh();
  const MarkerSet set = place_markers(mesh, 3, 5);

  SECTION("zero field returns the rest position") {
    const std::vector<Vec3> zero(mesh.nodes.size());
    for (const auto& a : set.anchors) {
      const Vec3 p = marker_world_position(mesh, a, zero);
      CHECK(p.x == a.rest_position.x);
      CHECK(p.y == a.rest_position.y);
      CHECK(p.z == a.rest_position.z);
    }
  }

  SECTION("uniform translation carries every anchor") {
    const Vec3 t{1.5, -2.0, 0.75};
    const std::vector<Vec3> field(mesh.nodes.size(), t);
    for (const auto& a : set.anchors) {
      const Vec3 p = marker_world_position(mesh, a, field);
      CHECK(p.x == Catch::Approx(a.rest_position.x + t.x).margin(1e-12));
      CHECK(p.y == Catch::Approx(a.rest_position.y + t.y).margin(1e-12));
      CHECK(p.z == Catch::Approx(a.rest_position.z + t.z).margin(1e-12));
    }
  }

  SECTION("random field matches an independent barycentric interpolation") {
    Rng rng(99);
    std::vector<Vec3> field(mesh.nodes.size());
    for (Vec3& d : field) d = {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
    for (const auto& a : set.anchors) {
      // Re-derive the weights by hand: solve the 2x2 unrolled-plane system.
      const auto& tri = mesh.outer_tris[size_t(a.triangle)];
      const double theta = std::atan2(a.rest_position.y, a.rest_position.x);
      double tx[3], tz[3];
      for (int k = 0; k < 3; ++k) {
        const Vec3& p = mesh.nodes[size_t(tri[size_t(k)])];
        double ang = std::atan2(p.y, p.x);
        while (ang - theta > std::numbers::pi) ang -= 2 * std::numbers::pi;
        while (ang - theta < -std::numbers::pi) ang += 2 * std::numbers::pi;
        tx[k] = ang;
        tz[k] = p.z;
      }
      const double det = (tx[1] - tx[0]) * (tz[2] - tz[0]) - (tx[2] - tx[0]) * (tz[1] - tz[0]);
      const double w1 =
          ((theta - tx[0]) * (tz[2] - tz[0]) - (tx[2] - tx[0]) * (a.rest_position.z - tz[0])) / det;
      const double w2 =
          ((tx[1] - tx[0]) * (a.rest_position.z - tz[0]) - (theta - tx[0]) * (tz[1] - tz[0])) / det;
      const double w0 = 1.0 - w1 - w2;
      Vec3 expect = a.rest_position + w0 * field[size_t(tri[0])] + w1 * field[size_t(tri[1])] +
                    w2 * field[size_t(tri[2])];
      const Vec3 got = marker_world_position(mesh, a, field);
      CHECK(got.x == Catch::Approx(expect.x).margin(1e-9));
      CHECK(got.y == Catch::Approx(expect.y).margin(1e-9));
      CHECK(got.z == Catch::Approx(expect.z).margin(1e-9));
    }
  }

  SECTION("field size mismatch is rejected") {
    const std::vector<Vec3> bad(3);
    CHECK_THROWS_AS(marker_world_position(mesh, set.anchors[0], bad), validation_error);
  }
}

TEST_CASE("mesh text round trip") {
  const SkinMesh mesh = build_cylinder_mesh(30, 120, 12, 14);
  const std::string text = export_mesh_text(mesh);
  const MeshText parsed = parse_mesh_text(text);
  REQUIRE(parsed.nodes.size() == mesh.nodes.size());
  REQUIRE(parsed.tets.size() == mesh.tets.size());
  for (size_t i = 0; i < parsed.nodes.size(); ++i) {
    CHECK(parsed.nodes[i].x == mesh.nodes[i].x);
    CHECK(parsed.nodes[i].y == mesh.nodes[i].y);
    CHECK(parsed.nodes[i].z == mesh.nodes[i].z);
  }
  CHECK(parsed.tets == mesh.tets);
  CHECK_THROWS_AS(parse_mesh_text("q 1 2 3"), validation_error);
}
