#include "viewplan/synth.hpp"

#include <array>
#include <cmath>
#include <map>

#include "viewplan/error.hpp"

namespace viewplan {

namespace {

void finish(Mesh& mesh) {
  mesh.recompute_bbox();
  mesh.validate();
}

}  // namespace

Mesh make_box(double sx, double sy, double sz) {
  Mesh mesh;
  const double x = sx / 2.0, y = sy / 2.0, z = sz / 2.0;
  for (int c = 0; c < 8; ++c) {
    mesh.vertices.emplace_back(c & 1 ? x : -x, c & 2 ? y : -y, c & 4 ? z : -z);
  }
  const int faces[12][3] = {{0, 2, 3}, {0, 3, 1}, {4, 5, 7}, {4, 7, 6},
                            {0, 1, 5}, {0, 5, 4}, {2, 6, 7}, {2, 7, 3},
                            {0, 4, 6}, {0, 6, 2}, {1, 3, 7}, {1, 7, 5}};
  for (const auto& f : faces) mesh.triangles.emplace_back(f[0], f[1], f[2]);
  finish(mesh);
  return mesh;
}

Mesh make_icosphere(int subdivisions, double radius) {
  if (subdivisions < 0 || subdivisions > 7) {
    throw ArgumentError("icosphere subdivisions must lie in [0, 7]");
  }
  if (radius <= 0.0) throw ArgumentError("radius must be positive");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  Mesh mesh;
  const double raw[12][3] = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0},
                             {0, -1, t}, {0, 1, t},  {0, -1, -t}, {0, 1, -t},
                             {t, 0, -1}, {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  for (const auto& v : raw) {
    mesh.vertices.push_back(Eigen::Vector3d(v[0], v[1], v[2]).normalized());
  }
  const int faces[20][3] = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10},
                            {0, 10, 11}, {1, 5, 9}, {5, 11, 4},  {11, 10, 2},
                            {10, 7, 6},  {7, 1, 8}, {3, 9, 4},   {3, 4, 2},
                            {3, 2, 6},   {3, 6, 8}, {3, 8, 9},   {4, 9, 5},
                            {2, 4, 11},  {6, 2, 10}, {8, 6, 7},  {9, 8, 1}};
  for (const auto& f : faces) mesh.triangles.emplace_back(f[0], f[1], f[2]);

  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      const auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      const int idx = static_cast<int>(mesh.vertices.size());
      mesh.vertices.push_back(
          ((mesh.vertices[a] + mesh.vertices[b]) / 2.0).normalized());
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<Eigen::Vector3i> next;
    next.reserve(mesh.triangles.size() * 4);
    for (const auto& tri : mesh.triangles) {
      const int ab = mid(tri[0], tri[1]);
      const int bc = mid(tri[1], tri[2]);
      const int ca = mid(tri[2], tri[0]);
      next.emplace_back(tri[0], ab, ca);
      next.emplace_back(tri[1], bc, ab);
      next.emplace_back(tri[2], ca, bc);
      next.emplace_back(ab, bc, ca);
    }
    mesh.triangles = std::move(next);
  }
  for (auto& v : mesh.vertices) v *= radius;
  finish(mesh);
  return mesh;
}

Mesh make_ellipsoid(double rx, double ry, double rz, int subdivisions) {
  if (rx <= 0.0 || ry <= 0.0 || rz <= 0.0) {
    throw ArgumentError("ellipsoid radii must be positive");
  }
  Mesh mesh = make_icosphere(subdivisions, 1.0);
  for (auto& v : mesh.vertices) {
    v.x() *= rx;
    v.y() *= ry;
    v.z() *= rz;
  }
  finish(mesh);
  return mesh;
}

Mesh make_cylinder(double radius, double height, int segments) {
  if (segments < 3) throw ArgumentError("cylinder needs at least 3 segments");
  if (radius <= 0.0 || height <= 0.0) {
    throw ArgumentError("cylinder dimensions must be positive");
  }
  Mesh mesh;
  const double h = height / 2.0;
  for (int ring = 0; ring < 2; ++ring) {
    const double z = ring == 0 ? -h : h;
    for (int s = 0; s < segments; ++s) {
      const double a = 2.0 * M_PI * s / segments;
      mesh.vertices.emplace_back(radius * std::cos(a), radius * std::sin(a), z);
    }
  }
  const int bottom_center = static_cast<int>(mesh.vertices.size());
  mesh.vertices.emplace_back(0.0, 0.0, -h);
  const int top_center = bottom_center + 1;
  mesh.vertices.emplace_back(0.0, 0.0, h);
  for (int s = 0; s < segments; ++s) {
    const int s1 = (s + 1) % segments;
    mesh.triangles.emplace_back(s, s1, segments + s);
    mesh.triangles.emplace_back(s1, segments + s1, segments + s);
    mesh.triangles.emplace_back(bottom_center, s1, s);
    mesh.triangles.emplace_back(top_center, segments + s, segments + s1);
  }
  finish(mesh);
  return mesh;
}

Mesh make_cone(double radius, double height, int segments) {
  if (segments < 3) throw ArgumentError("cone needs at least 3 segments");
  if (radius <= 0.0 || height <= 0.0) {
    throw ArgumentError("cone dimensions must be positive");
  }
  Mesh mesh;
  for (int s = 0; s < segments; ++s) {
    const double a = 2.0 * M_PI * s / segments;
    mesh.vertices.emplace_back(radius * std::cos(a), radius * std::sin(a), 0.0);
  }
  const int apex = segments;
  mesh.vertices.emplace_back(0.0, 0.0, height);
  const int base_center = segments + 1;
  mesh.vertices.emplace_back(0.0, 0.0, 0.0);
  for (int s = 0; s < segments; ++s) {
    const int s1 = (s + 1) % segments;
    mesh.triangles.emplace_back(s, s1, apex);
    mesh.triangles.emplace_back(base_center, s1, s);
  }
  finish(mesh);
  return mesh;
}

Mesh make_capsule(double radius, double height, int segments) {
  if (segments < 4 || segments % 2 != 0) {
    throw ArgumentError("capsule needs an even segment count of at least 4");
  }
  if (radius <= 0.0 || height < 0.0) {
    throw ArgumentError("capsule dimensions must be positive");
  }
  // UV sphere split at the equator, cylinder of `height` in between
  Mesh mesh;
  const int rings = segments / 2;  // per hemisphere
  const double h = height / 2.0;
  std::vector<int> prev_ring;
  auto add_ring = [&](double z, double r) {
    std::vector<int> ring;
    for (int s = 0; s < segments; ++s) {
      const double a = 2.0 * M_PI * s / segments;
      ring.push_back(static_cast<int>(mesh.vertices.size()));
      mesh.vertices.emplace_back(r * std::cos(a), r * std::sin(a), z);
    }
    return ring;
  };
  auto stitch = [&](const std::vector<int>& lo, const std::vector<int>& hi) {
    for (int s = 0; s < segments; ++s) {
      const int s1 = (s + 1) % segments;
      mesh.triangles.emplace_back(lo[s], lo[s1], hi[s]);
      mesh.triangles.emplace_back(lo[s1], hi[s1], hi[s]);
    }
  };
  const int south = static_cast<int>(mesh.vertices.size());
  mesh.vertices.emplace_back(0.0, 0.0, -h - radius);
  for (int r = 1; r <= rings; ++r) {
    const double phi = M_PI / 2.0 * r / rings;  // from pole toward equator
    const auto ring =
        add_ring(-h - radius * std::cos(phi), radius * std::sin(phi));
    if (r == 1) {
      for (int s = 0; s < segments; ++s) {
        mesh.triangles.emplace_back(south, ring[(s + 1) % segments], ring[s]);
      }
    } else {
      stitch(prev_ring, ring);
    }
    prev_ring = ring;
  }
  for (int r = rings; r >= 1; --r) {
    const double phi = M_PI / 2.0 * r / rings;
    const auto ring = add_ring(h + radius * std::cos(phi), radius * std::sin(phi));
    stitch(prev_ring, ring);
    prev_ring = ring;
  }
  const int north = static_cast<int>(mesh.vertices.size());
  mesh.vertices.emplace_back(0.0, 0.0, h + radius);
  for (int s = 0; s < segments; ++s) {
    mesh.triangles.emplace_back(prev_ring[s], prev_ring[(s + 1) % segments], north);
  }
  finish(mesh);
  return mesh;
}

Mesh make_shape(const std::string& name) {
  if (name == "box") return make_box(1.0, 0.8, 0.6);
  if (name == "icosphere") return make_icosphere(3);
  if (name == "ellipsoid") return make_ellipsoid(1.0, 0.7, 0.5, 3);
  if (name == "cylinder") return make_cylinder(0.4, 1.0, 32);
  if (name == "cone") return make_cone(0.5, 1.0, 32);
  if (name == "capsule") return make_capsule(0.35, 0.8, 24);
  throw ArgumentError("unknown shape '" + name + "'");
}

std::vector<std::string> shape_names() {
  return {"box", "icosphere", "ellipsoid", "cylinder", "cone", "capsule"};
}

}  // namespace viewplan
