#pragma once

#include <Eigen/Dense>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "viewplan/geometry.hpp"

namespace viewplan {

struct VoxelKey {
  int i = 0;
  int j = 0;
  int k = 0;
  auto operator<=>(const VoxelKey&) const = default;
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const {
    std::uint64_t h = 1469598103934665603ull;
    for (int v : {k.i, k.j, k.k}) {
      h ^= static_cast<std::uint32_t>(v);
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

// Dense axis-aligned voxel grid. Cell (i,j,k) spans
// origin + [i,i+1) x [j,j+1) x [k,k+1) times resolution.
class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  OccupancyGrid(const Eigen::Vector3d& origin, double resolution,
                const Eigen::Vector3i& dims);

  const Eigen::Vector3d& origin() const { return origin_; }
  double resolution() const { return resolution_; }
  const Eigen::Vector3i& dims() const { return dims_; }
  std::size_t cell_count() const { return cells_.size(); }
  std::size_t occupied_count() const;

  bool contains(const VoxelKey& key) const {
    return key.i >= 0 && key.i < dims_.x() && key.j >= 0 && key.j < dims_.y() &&
           key.k >= 0 && key.k < dims_.z();
  }
  bool occupied(const VoxelKey& key) const {
    return contains(key) && cells_[index(key)] != 0;
  }
  void set(const VoxelKey& key, bool value = true);

  // Key of the cell containing p, or nullopt outside the grid volume.
  std::optional<VoxelKey> quantize(const Eigen::Vector3d& p) const;
  Eigen::Vector3d cell_center(const VoxelKey& key) const;

 private:
  std::size_t index(const VoxelKey& key) const {
    return (static_cast<std::size_t>(key.k) * dims_.y() + key.j) * dims_.x() +
           key.i;
  }
  Eigen::Vector3d origin_;
  double resolution_ = 0.0;
  Eigen::Vector3i dims_ = Eigen::Vector3i::Zero();
  std::vector<std::uint8_t> cells_;
};

// Grid holding every point of `cloud`, padded on all sides. Padding should
// be a multiple of resolution so cell boundaries stay aligned.
OccupancyGrid build_grid(const PointCloud& cloud, double resolution,
                         double padding);

struct RayHit {
  VoxelKey key;
  double t = 0.0;  // entry parameter along from->to, in [0, 1]
};

// First occupied voxel strictly before the voxel containing `to`, walking
// the segment from->to. Ties at cell boundaries advance x, then y, then z.
std::optional<VoxelKey> cast_ray(const OccupancyGrid& grid,
                                 const Eigen::Vector3d& from,
                                 const Eigen::Vector3d& to);
std::optional<RayHit> cast_ray_hit(const OccupancyGrid& grid,
                                   const Eigen::Vector3d& from,
                                   const Eigen::Vector3d& to);

// One flag per cloud point: true when the segment sensor->point reaches the
// point's own voxel without being blocked earlier. A hit within two cells of
// the target voxel counts as surface clutter rather than a blocker, so rays
// that clip the quantised shell around a point still see it; anything deeper
// occludes.
std::vector<char> visible_points(const OccupancyGrid& grid,
                                 const PointCloud& cloud,
                                 const Eigen::Vector3d& sensor);

}  // namespace viewplan
