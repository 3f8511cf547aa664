#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "viewplan/geometry.hpp"

namespace viewplan {

struct CoverageStats {
  long covered_cells = 0;
  long total_cells = 0;
  double fraction = 0.0;
};

// Fraction of ground-truth surface cells that hold at least one observed
// point. When `coverable` is given (one flag per ground-truth point), cells
// without any coverable point leave the denominator.
CoverageStats surface_coverage(const PointCloud& observed,
                               const PointCloud& ground_truth, double grid_res,
                               const std::vector<char>* coverable = nullptr);

// Deterministic subsample without replacement; returns the whole cloud when
// it has at most `count` points.
PointCloud subsample(const PointCloud& cloud, std::size_t count,
                     std::uint64_t seed);

// Symmetric nearest-neighbour distance in millimeters:
//   0.5 * (mean_a min_b |a-b| + mean_b min_a |a-b|) * 1000
double chamfer_mm(const PointCloud& a, const PointCloud& b,
                  std::size_t sample_n = 10240, std::uint64_t seed = 0);

// Exact assignment cost in millimeters between equal-size subsamples, via
// the Hungarian algorithm: mean matched distance.
double emd_mm(const PointCloud& a, const PointCloud& b,
              std::size_t sample_n = 512, std::uint64_t seed = 0);

// Density-aware symmetric score in [0, 1], zero for identical clouds:
//   0.5 * mean_x (1 - exp(-temperature * |x - nn(x)|^2) / count(nn(x)))
// summed over both directions, where count(nn(x)) is how many query points
// share that nearest neighbour.
double dcd(const PointCloud& a, const PointCloud& b,
           double temperature = 1000.0, std::size_t sample_n = 10240,
           std::uint64_t seed = 0);

}  // namespace viewplan
