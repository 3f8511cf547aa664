#include "viewplan/sensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "viewplan/error.hpp"

namespace viewplan {

PointCloud capture(const OccupancyGrid& grid, const PointCloud& surface,
                   const View& view, const SensorConfig& config) {
  if (view.id < 0 || view.id > 0xFFFF) {
    throw ArgumentError("view id " + std::to_string(view.id) +
                        " does not fit a capture tag");
  }
  const auto flags = visible_points(grid, surface, view.pose.position);
  const double max_r2 =
      config.max_range > 0.0 ? config.max_range * config.max_range
                             : std::numeric_limits<double>::infinity();
  PointCloud out;
  for (std::size_t i = 0; i < surface.size(); ++i) {
    if (!flags[i]) continue;
    if ((surface.points[i] - view.pose.position).squaredNorm() > max_r2) continue;
    out.points.push_back(surface.points[i]);
    out.source_view.push_back(static_cast<std::uint16_t>(view.id));
  }
  return out;
}

PointCloud accumulate(const std::vector<PointCloud>& captures,
                      double resolution) {
  if (resolution <= 0.0) {
    throw ArgumentError("accumulate resolution must be positive");
  }
  struct Cell {
    Eigen::Vector3d rep;
    std::uint16_t tag;
  };
  auto lex_less = [](const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
    if (a.x() != b.x()) return a.x() < b.x();
    if (a.y() != b.y()) return a.y() < b.y();
    return a.z() < b.z();
  };
  std::map<VoxelKey, Cell> cells;
  for (const auto& cap : captures) {
    cap.validate();
    for (std::size_t i = 0; i < cap.size(); ++i) {
      const Eigen::Vector3d& p = cap.points[i];
      const VoxelKey key{static_cast<int>(std::floor(p.x() / resolution)),
                         static_cast<int>(std::floor(p.y() / resolution)),
                         static_cast<int>(std::floor(p.z() / resolution))};
      const std::uint16_t tag = cap.has_tags() ? cap.source_view[i] : 0;
      // first tag to land in a voxel sticks; the representative point stays
      // order-insensitive
      auto [it, inserted] = cells.try_emplace(key, Cell{p, tag});
      if (!inserted && lex_less(p, it->second.rep)) it->second.rep = p;
    }
  }
  PointCloud out;
  out.points.reserve(cells.size());
  out.source_view.reserve(cells.size());
  for (const auto& [key, cell] : cells) {
    out.points.push_back(cell.rep);
    out.source_view.push_back(cell.tag);
  }
  return out;
}

}  // namespace viewplan
