#pragma once

#include <cstdint>
#include <string>

#include "viewplan/geometry.hpp"

namespace viewplan {

// Stand-in for a learned completion stage: expands a partial observation
// toward the full surface, never inventing points off it.
struct Refiner {
  enum class Kind { identity, oracle_dilation };

  Kind kind = Kind::identity;
  double dilation_radius = 0.01;
  int noise_regions = 0;
  double noise_region_radius = 0.02;
  std::uint64_t noise_seed = 0;
};

Refiner::Kind refiner_kind_from_string(const std::string& name);
std::string to_string(Refiner::Kind kind);

// identity: the observation unchanged. oracle_dilation: every ground-truth
// point within dilation_radius of an observed point, optionally plus a few
// seeded spurious patches of ground truth. Output points always come from
// `ground_truth` or `observed`; observed points are always kept.
PointCloud refine(const Refiner& refiner, const PointCloud& observed,
                  const PointCloud& ground_truth);

}  // namespace viewplan
