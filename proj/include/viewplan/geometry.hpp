#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cstdint>
#include <string>
#include <vector>

namespace viewplan {

// Triangle surface mesh. Vertex order is preserved from the source file;
// bbox is always the tight bound of `vertices`.
struct Mesh {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<Eigen::Vector3i> triangles;
  Eigen::AlignedBox3d bbox;

  void recompute_bbox();
  // Throws FormatError on an out-of-range triangle index, Error on an
  // empty triangle list or non-finite vertex.
  void validate() const;

  double bbox_diagonal() const { return bbox.diagonal().norm(); }
  double surface_area() const;
  Eigen::Vector3d triangle_point(int tri, double b0, double b1) const;
};

// Point set in meters. `source_view` is either empty or one entry per point
// (the view that produced the point).
struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  std::vector<std::uint16_t> source_view;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_tags() const { return !source_view.empty(); }
  void validate() const;
  Eigen::AlignedBox3d bounds() const;
};

// Rigid camera pose. The camera looks along the +Z column of `orientation`.
struct Pose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Matrix3d orientation = Eigen::Matrix3d::Identity();

  Eigen::Vector3d forward() const { return orientation.col(2); }
  bool is_rotation(double tol = 1e-9) const;
};

// Deterministic look-at: forward = normalized(target - position), up chosen
// from world +Z (falls back to +X when the view is straight up/down).
Pose look_at(const Eigen::Vector3d& position, const Eigen::Vector3d& target);

// OBJ or PLY (ascii / binary little-endian). Throws FormatError with the
// offending line for parse failures, Error for empty meshes.
Mesh load_mesh(const std::string& path);
void save_mesh_ply(const Mesh& mesh, const std::string& path,
                   bool binary = true);

// Uniform scale + translation: bbox diagonal becomes target_diameter, bbox
// center moves over table_origin (x,y) with min-z on the table plane.
Mesh normalize_mesh(const Mesh& mesh, double target_diameter,
                    const Eigen::Vector3d& table_origin =
                        Eigen::Vector3d::Zero());

// Area-weighted random surface sampling deduplicated on a `spacing` grid.
// Every output point lies exactly on a triangle; deterministic per seed.
PointCloud sample_surface(const Mesh& mesh, double spacing,
                          std::uint64_t seed);

// Binary little-endian PLY, double x/y/z plus an optional uint16
// source_view property. Round-trips bit-exactly.
void save_cloud_ply(const PointCloud& cloud, const std::string& path);
PointCloud load_cloud_ply(const std::string& path);

}  // namespace viewplan
