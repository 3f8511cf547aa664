#include "viewplan/occupancy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "viewplan/error.hpp"

namespace viewplan {

OccupancyGrid::OccupancyGrid(const Eigen::Vector3d& origin, double resolution,
                             const Eigen::Vector3i& dims)
    : origin_(origin), resolution_(resolution), dims_(dims) {
  if (resolution <= 0.0) throw ArgumentError("grid resolution must be positive");
  if ((dims.array() <= 0).any()) throw ArgumentError("grid dims must be positive");
  const std::size_t total = static_cast<std::size_t>(dims.x()) * dims.y() * dims.z();
  if (total > (std::size_t{1} << 31)) {
    throw SizeError("grid of " + std::to_string(total) + " cells is too large");
  }
  cells_.assign(total, 0);
}

std::size_t OccupancyGrid::occupied_count() const {
  std::size_t n = 0;
  for (std::uint8_t c : cells_) n += c != 0;
  return n;
}

void OccupancyGrid::set(const VoxelKey& key, bool value) {
  if (!contains(key)) throw ArgumentError("voxel key outside grid");
  cells_[index(key)] = value ? 1 : 0;
}

std::optional<VoxelKey> OccupancyGrid::quantize(const Eigen::Vector3d& p) const {
  const Eigen::Vector3d rel = (p - origin_) / resolution_;
  VoxelKey key{static_cast<int>(std::floor(rel.x())),
               static_cast<int>(std::floor(rel.y())),
               static_cast<int>(std::floor(rel.z()))};
  // points sitting exactly on the far face belong to the last cell
  if (key.i == dims_.x() && rel.x() - key.i == 0.0) --key.i;
  if (key.j == dims_.y() && rel.y() - key.j == 0.0) --key.j;
  if (key.k == dims_.z() && rel.z() - key.k == 0.0) --key.k;
  if (!contains(key)) return std::nullopt;
  return key;
}

Eigen::Vector3d OccupancyGrid::cell_center(const VoxelKey& key) const {
  return origin_ + resolution_ * Eigen::Vector3d(key.i + 0.5, key.j + 0.5, key.k + 0.5);
}

OccupancyGrid build_grid(const PointCloud& cloud, double resolution,
                         double padding) {
  if (cloud.empty()) throw ArgumentError("cannot build a grid from an empty cloud");
  if (padding < 0.0) throw ArgumentError("grid padding must be non-negative");
  const Eigen::AlignedBox3d box = cloud.bounds();
  const Eigen::Vector3d origin = box.min() - Eigen::Vector3d::Constant(padding);
  const Eigen::Vector3d extent =
      box.diagonal() + Eigen::Vector3d::Constant(2.0 * padding);
  Eigen::Vector3i dims;
  for (int a = 0; a < 3; ++a) {
    dims[a] = std::max(1, static_cast<int>(std::ceil(extent[a] / resolution)));
  }
  OccupancyGrid grid(origin, resolution, dims);
  for (const auto& p : cloud.points) {
    const auto key = grid.quantize(p);
    if (!key) throw InternalError("cloud point fell outside its own grid");
    grid.set(*key);
  }
  return grid;
}

namespace {

// Clip segment from->to (parameterized on t in [0,1]) to the grid box.
// Returns false when the segment misses the box entirely.
bool clip_to_box(const Eigen::Vector3d& from, const Eigen::Vector3d& dir,
                 const Eigen::Vector3d& lo, const Eigen::Vector3d& hi,
                 double& t0, double& t1) {
  t0 = 0.0;
  t1 = 1.0;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(dir[a]) < 1e-300) {
      if (from[a] < lo[a] || from[a] > hi[a]) return false;
      continue;
    }
    double ta = (lo[a] - from[a]) / dir[a];
    double tb = (hi[a] - from[a]) / dir[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

}  // namespace

std::optional<RayHit> cast_ray_hit(const OccupancyGrid& grid,
                                   const Eigen::Vector3d& from,
                                   const Eigen::Vector3d& to) {
  const double res = grid.resolution();
  const Eigen::Vector3d dir = to - from;
  const auto target = grid.quantize(to);

  const Eigen::Vector3d lo = grid.origin();
  const Eigen::Vector3d hi =
      grid.origin() + res * grid.dims().cast<double>();
  double t0, t1;
  if (!clip_to_box(from, dir, lo, hi, t0, t1)) return std::nullopt;

  // nudge inside so the start voxel is unambiguous
  const double eps = 1e-12;
  double t = t0 + eps * (t1 - t0 > eps ? 1.0 : 0.0);
  Eigen::Vector3d p = from + t * dir;
  Eigen::Vector3d rel = (p - lo) / res;
  VoxelKey key{
      std::clamp(static_cast<int>(std::floor(rel.x())), 0, grid.dims().x() - 1),
      std::clamp(static_cast<int>(std::floor(rel.y())), 0, grid.dims().y() - 1),
      std::clamp(static_cast<int>(std::floor(rel.z())), 0, grid.dims().z() - 1)};

  int step[3];
  double t_max[3], t_delta[3];
  const int* kptr[3] = {&key.i, &key.j, &key.k};
  for (int a = 0; a < 3; ++a) {
    if (dir[a] > 0.0) {
      step[a] = 1;
      const double bound = lo[a] + (*kptr[a] + 1) * res;
      t_max[a] = (bound - from[a]) / dir[a];
      t_delta[a] = res / dir[a];
    } else if (dir[a] < 0.0) {
      step[a] = -1;
      const double bound = lo[a] + (*kptr[a]) * res;
      t_max[a] = (bound - from[a]) / dir[a];
      t_delta[a] = -res / dir[a];
    } else {
      step[a] = 0;
      t_max[a] = std::numeric_limits<double>::infinity();
      t_delta[a] = std::numeric_limits<double>::infinity();
    }
  }

  double t_enter = t;
  for (;;) {
    if (target && key == *target) return std::nullopt;
    if (grid.occupied(key)) return RayHit{key, std::max(0.0, t_enter)};
    int axis;
    if (t_max[0] <= t_max[1] && t_max[0] <= t_max[2]) axis = 0;
    else if (t_max[1] <= t_max[2]) axis = 1;
    else axis = 2;
    if (t_max[axis] > 1.0) return std::nullopt;
    t_enter = t_max[axis];
    t_max[axis] += t_delta[axis];
    int* comp = axis == 0 ? &key.i : axis == 1 ? &key.j : &key.k;
    *comp += step[axis];
    if (!grid.contains(key)) return std::nullopt;
  }
}

std::optional<VoxelKey> cast_ray(const OccupancyGrid& grid,
                                 const Eigen::Vector3d& from,
                                 const Eigen::Vector3d& to) {
  const auto hit = cast_ray_hit(grid, from, to);
  if (!hit) return std::nullopt;
  return hit->key;
}

std::vector<char> visible_points(const OccupancyGrid& grid,
                                 const PointCloud& cloud,
                                 const Eigen::Vector3d& sensor) {
  std::vector<char> flags(cloud.size(), 0);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Eigen::Vector3d& p = cloud.points[i];
    const auto own = grid.quantize(p);
    const auto hit = cast_ray_hit(grid, sensor, p);
    if (!hit) {
      flags[i] = 1;
      continue;
    }
    if (own && std::abs(hit->key.i - own->i) <= 2 &&
        std::abs(hit->key.j - own->j) <= 2 && std::abs(hit->key.k - own->k) <= 2) {
      flags[i] = 1;
    }
  }
  return flags;
}

}  // namespace viewplan
