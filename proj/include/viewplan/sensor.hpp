#pragma once

#include <cstdint>
#include <vector>

#include "viewplan/geometry.hpp"
#include "viewplan/occupancy.hpp"
#include "viewplan/viewspace.hpp"

namespace viewplan {

struct SensorConfig {
  double point_spacing = 0.002;
  double max_range = 0.0;  // <= 0 means unlimited
};

// Simulated depth capture: the subset of `surface` visible from the view,
// range-filtered, every point tagged with the view id.
PointCloud capture(const OccupancyGrid& grid, const PointCloud& surface,
                   const View& view, const SensorConfig& config = {});

// Merge captures into one deduplicated cloud on a world-anchored grid of
// the given resolution. One representative point per voxel (the
// lexicographically smallest, so the point set does not depend on capture
// order), tagged with the earliest tag to land in the voxel. Output is
// sorted by voxel key.
PointCloud accumulate(const std::vector<PointCloud>& captures,
                      double resolution);

}  // namespace viewplan
