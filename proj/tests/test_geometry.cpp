#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <set>

#include "test_util.hpp"
#include "viewplan/error.hpp"
#include "viewplan/geometry.hpp"
#include "viewplan/synth.hpp"

using namespace viewplan;
using testutil::TempDir;

namespace {

const char* kCubeObj =
    "# unit cube\n"
    "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\n"
    "v 0 0 1\nv 1 0 1\nv 1 1 1\nv 0 1 1\n"
    "f 1 3 2\nf 1 4 3\n"
    "f 5 6 7\nf 5 7 8\n"
    "f 1 2 6\nf 1 6 5\n"
    "f 2 3 7\nf 2 7 6\n"
    "f 3 4 8\nf 3 8 7\n"
    "f 4 1 5\nf 4 5 8\n";

}  // namespace

TEST_CASE("load_mesh reads a unit cube OBJ") {
  TempDir dir("vp-geom");
  testutil::write_file(dir.file("cube.obj"), kCubeObj);
  const Mesh mesh = load_mesh(dir.file("cube.obj"));
  CHECK(mesh.vertices.size() == 8);
  CHECK(mesh.triangles.size() == 12);
  CHECK(mesh.vertices[0] == Eigen::Vector3d(0, 0, 0));
  CHECK(mesh.vertices[6] == Eigen::Vector3d(1, 1, 1));
  CHECK(mesh.bbox.min() == Eigen::Vector3d(0, 0, 0));
  CHECK(mesh.bbox.max() == Eigen::Vector3d(1, 1, 1));
}

TEST_CASE("load_mesh reports the offending line for bad face indices") {
  TempDir dir("vp-geom");
  testutil::write_file(dir.file("bad.obj"),
                       "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n");
  try {
    load_mesh(dir.file("bad.obj"));
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find(":4") != std::string::npos);
  }
}

TEST_CASE("load_mesh accepts OBJ negative indices") {
  TempDir dir("vp-geom");
  testutil::write_file(dir.file("neg.obj"),
                       "v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n");
  const Mesh mesh = load_mesh(dir.file("neg.obj"));
  REQUIRE(mesh.triangles.size() == 1);
  CHECK(mesh.triangles[0][0] == 0);
  CHECK(mesh.triangles[0][2] == 2);
}

TEST_CASE("load_mesh rejects empty meshes and missing files") {
  TempDir dir("vp-geom");
  testutil::write_file(dir.file("empty.obj"), "v 0 0 0\nv 1 0 0\nv 0 1 0\n");
  CHECK_THROWS_AS(load_mesh(dir.file("empty.obj")), Error);
  CHECK_THROWS_AS(load_mesh(dir.file("nonexistent.obj")), Error);
}

TEST_CASE("load_mesh PLY bbox equals recomputed vertex bounds") {
  TempDir dir("vp-geom");
  testutil::write_file(dir.file("tetra.ply"),
                       "ply\n"
                       "format ascii 1.0\n"
                       "comment irregular tetrahedron\n"
                       "element vertex 4\n"
                       "property double x\n"
                       "property double y\n"
                       "property double z\n"
                       "element face 4\n"
                       "property list uchar int vertex_indices\n"
                       "end_header\n"
                       "0.25 -1.5 0\n"
                       "2 0.5 -0.125\n"
                       "-0.75 1 0.5\n"
                       "0.5 0 3\n"
                       "3 0 1 2\n"
                       "3 0 1 3\n"
                       "3 1 2 3\n"
                       "3 0 2 3\n");
  const Mesh mesh = load_mesh(dir.file("tetra.ply"));
  REQUIRE(mesh.vertices.size() == 4);
  REQUIRE(mesh.triangles.size() == 4);
  Eigen::AlignedBox3d expect;
  for (const auto& v : mesh.vertices) expect.extend(v);
  CHECK(mesh.bbox.min() == expect.min());
  CHECK(mesh.bbox.max() == expect.max());
}

TEST_CASE("mesh round-trips bit-exactly through binary PLY") {
  TempDir dir("vp-geom");
  Mesh mesh = make_ellipsoid(0.31, 0.17, 0.23, 2);
  save_mesh_ply(mesh, dir.file("e.ply"), true);
  const Mesh back = load_mesh(dir.file("e.ply"));
  REQUIRE(back.vertices.size() == mesh.vertices.size());
  REQUIRE(back.triangles.size() == mesh.triangles.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    CHECK(back.vertices[i] == mesh.vertices[i]);
  }
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    CHECK(back.triangles[i] == mesh.triangles[i]);
  }
}

TEST_CASE("mesh validation rejects bad index and empty triangle list") {
  Mesh mesh;
  mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  CHECK_THROWS_AS(mesh.validate(), Error);
  mesh.triangles = {{0, 1, 5}};
  mesh.recompute_bbox();
  CHECK_THROWS_AS(mesh.validate(), Error);
  mesh.triangles = {{0, 1, 2}};
  CHECK_NOTHROW(mesh.validate());
}

TEST_CASE("normalize_mesh scales the cube to the target diagonal") {
  TempDir dir("vp-geom");
  testutil::write_file(dir.file("cube.obj"), kCubeObj);
  const Mesh cube = load_mesh(dir.file("cube.obj"));
  const Mesh out = normalize_mesh(cube, 0.1);
  CHECK(out.bbox.diagonal().norm() == doctest::Approx(0.1).epsilon(1e-9));
  CHECK(out.bbox.min().z() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(out.bbox.center().x() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(out.bbox.center().y() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(out.triangles.size() == cube.triangles.size());
}

TEST_CASE("normalize_mesh is idempotent and scales diagonals linearly") {
  const Mesh mesh = make_cone(0.4, 1.2, 16);
  const double input_diag = mesh.bbox.diagonal().norm();
  const Mesh once = normalize_mesh(mesh, 0.15);
  const Mesh twice = normalize_mesh(once, 0.15);
  for (std::size_t i = 0; i < once.vertices.size(); ++i) {
    CHECK((twice.vertices[i] - once.vertices[i]).norm() < 1e-9);
  }
  const double ratio = once.bbox.diagonal().norm() / input_diag;
  CHECK(ratio == doctest::Approx(0.15 / input_diag).epsilon(1e-9));
}

TEST_CASE("normalize_mesh rejects zero-extent meshes") {
  Mesh flat;
  flat.vertices = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
  flat.triangles = {{0, 1, 2}};
  flat.recompute_bbox();
  CHECK_THROWS_AS(normalize_mesh(flat, 0.1), Error);
}

TEST_CASE("sample_surface stays on a unit square") {
  Mesh square;
  square.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
  square.triangles = {{0, 1, 2}, {0, 2, 3}};
  square.recompute_bbox();
  const PointCloud cloud = sample_surface(square, 0.5, 11);
  CHECK(cloud.size() > 0);
  for (const auto& p : cloud.points) {
    CHECK(p.x() >= 0.0);
    CHECK(p.x() <= 1.0);
    CHECK(p.y() >= 0.0);
    CHECK(p.y() <= 1.0);
    CHECK(p.z() == 0.0);
  }
}

TEST_CASE("sample_surface is deterministic per seed") {
  const Mesh mesh = make_icosphere(2, 0.05);
  const PointCloud a = sample_surface(mesh, 0.004, 42);
  const PointCloud b = sample_surface(mesh, 0.004, 42);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.points[i] == b.points[i]);
  const PointCloud c = sample_surface(mesh, 0.004, 43);
  bool differs = c.size() != a.size();
  for (std::size_t i = 0; !differs && i < a.size(); ++i) {
    differs = a.points[i] != c.points[i];
  }
  CHECK(differs);
}

TEST_CASE("sample_surface density matches the analytic area estimate") {
  const Mesh cube = normalize_mesh(make_box(1, 1, 1), std::sqrt(3.0) * 0.1);
  // 0.1 m cube: area 0.06 m^2, spacing 2 mm -> about 15000 cells
  const PointCloud cloud = sample_surface(cube, 0.002, 3);
  CHECK(cloud.size() > 12000);
  CHECK(cloud.size() < 18000);
}

TEST_CASE("sample_surface points lie on the mesh within 1e-9") {
  const Mesh mesh = make_capsule(0.03, 0.05, 8);
  const PointCloud cloud = sample_surface(mesh, 0.01, 5);
  REQUIRE(cloud.size() > 20);
  for (const auto& p : cloud.points) {
    CHECK(testutil::distance_to_mesh(p, mesh) < 1e-9);
  }
}

TEST_CASE("point cloud round-trips bit-exactly with source views") {
  TempDir dir("vp-geom");
  PointCloud cloud;
  cloud.points = {{0.1, -0.2, 0.3}, {1e-12, 2e9, -0.5}, {0, 0, 0}};
  cloud.source_view = {7, 0, 65535};
  save_cloud_ply(cloud, dir.file("c.ply"));
  const PointCloud back = load_cloud_ply(dir.file("c.ply"));
  REQUIRE(back.size() == cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    CHECK(back.points[i] == cloud.points[i]);
    CHECK(back.source_view[i] == cloud.source_view[i]);
  }

  PointCloud untagged;
  untagged.points = {{1, 2, 3}, {4, 5, 6}};
  save_cloud_ply(untagged, dir.file("u.ply"));
  const PointCloud back2 = load_cloud_ply(dir.file("u.ply"));
  REQUIRE(back2.size() == 2);
  CHECK(back2.source_view.empty());
  CHECK(back2.points[1] == Eigen::Vector3d(4, 5, 6));
}

TEST_CASE("point cloud validation requires matching tag length") {
  PointCloud cloud;
  cloud.points = {{0, 0, 0}, {1, 1, 1}};
  CHECK_NOTHROW(cloud.validate());
  cloud.source_view = {1};
  CHECK_THROWS_AS(cloud.validate(), Error);
  cloud.source_view = {1, 2};
  CHECK_NOTHROW(cloud.validate());
  cloud.points.push_back(Eigen::Vector3d(
      std::numeric_limits<double>::quiet_NaN(), 0, 0));
  cloud.source_view.push_back(3);
  CHECK_THROWS_AS(cloud.validate(), Error);
}

TEST_CASE("look_at produces proper rotations aimed at the target") {
  const Eigen::Vector3d target(0.01, -0.02, 0.05);
  const std::vector<Eigen::Vector3d> positions = {
      {0.4, 0, 0.1}, {-0.2, 0.3, 0.2}, {0.01, -0.02, 0.6},  // straight up
      {0.01, -0.02, -0.5},                                  // straight down
      {0.3, 0.3, 0.001}};
  for (const auto& pos : positions) {
    const Pose pose = look_at(pos, target);
    CHECK(pose.is_rotation(1e-9));
    const Eigen::Matrix3d R = pose.orientation;
    CHECK(std::abs(R.determinant() - 1.0) < 1e-9);
    CHECK((R.transpose() * R - Eigen::Matrix3d::Identity()).norm() < 1e-9);
    const Eigen::Vector3d expect = (target - pos).normalized();
    CHECK((pose.forward() - expect).norm() < 1e-9);
  }
}

TEST_CASE("surface_area and bbox helpers agree with closed forms") {
  const Mesh box = make_box(0.2, 0.3, 0.4);
  const double expect = 2 * (0.2 * 0.3 + 0.3 * 0.4 + 0.2 * 0.4);
  CHECK(box.surface_area() == doctest::Approx(expect).epsilon(1e-12));
  CHECK(box.bbox.diagonal().norm() ==
        doctest::Approx(std::sqrt(0.04 + 0.09 + 0.16)).epsilon(1e-12));
}
