#include "viewplan/refinement.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "viewplan/error.hpp"
#include "viewplan/rng.hpp"

namespace viewplan {

Refiner::Kind refiner_kind_from_string(const std::string& name) {
  if (name == "identity") return Refiner::Kind::identity;
  if (name == "oracle_dilation") return Refiner::Kind::oracle_dilation;
  throw ArgumentError("unknown refiner '" + name + "'");
}

std::string to_string(Refiner::Kind kind) {
  return kind == Refiner::Kind::identity ? "identity" : "oracle_dilation";
}

namespace {

using Cell = std::array<std::int64_t, 3>;

struct CellHash {
  std::size_t operator()(const Cell& c) const {
    std::uint64_t h = 1469598103934665603ull;
    for (std::int64_t v : c) {
      h ^= static_cast<std::uint64_t>(v);
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

Cell cell_of(const Eigen::Vector3d& p, double r) {
  return {static_cast<std::int64_t>(std::floor(p.x() / r)),
          static_cast<std::int64_t>(std::floor(p.y() / r)),
          static_cast<std::int64_t>(std::floor(p.z() / r))};
}

// Flags every ground-truth point within `radius` of some seed point, using a
// hash grid at cell size `radius` so only 27 neighbour cells are scanned.
void mark_within(const std::vector<Eigen::Vector3d>& gt,
                 const std::vector<Eigen::Vector3d>& seeds, double radius,
                 std::vector<char>& flags) {
  std::unordered_map<Cell, std::vector<int>, CellHash> buckets;
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    buckets[cell_of(seeds[s], radius)].push_back(static_cast<int>(s));
  }
  const double r2 = radius * radius;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (flags[i]) continue;
    const Cell c = cell_of(gt[i], radius);
    bool hit = false;
    for (std::int64_t di = -1; di <= 1 && !hit; ++di) {
      for (std::int64_t dj = -1; dj <= 1 && !hit; ++dj) {
        for (std::int64_t dk = -1; dk <= 1 && !hit; ++dk) {
          const auto it = buckets.find({c[0] + di, c[1] + dj, c[2] + dk});
          if (it == buckets.end()) continue;
          for (int s : it->second) {
            if ((gt[i] - seeds[s]).squaredNorm() <= r2) {
              hit = true;
              break;
            }
          }
        }
      }
    }
    if (hit) flags[i] = 1;
  }
}

}  // namespace

PointCloud refine(const Refiner& refiner, const PointCloud& observed,
                  const PointCloud& ground_truth) {
  if (refiner.kind == Refiner::Kind::identity) return observed;
  if (refiner.dilation_radius < 0.0) {
    throw ArgumentError("dilation radius must not be negative");
  }
  if (ground_truth.size() == 0) {
    throw ArgumentError("oracle refinement needs ground-truth points");
  }

  std::vector<char> keep(ground_truth.size(), 0);
  if (refiner.dilation_radius > 0.0) {
    mark_within(ground_truth.points, observed.points, refiner.dilation_radius,
                keep);
  }

  if (refiner.noise_regions > 0) {
    // spurious completion patches: seeded picks among not-yet-kept points
    std::vector<int> pool;
    for (std::size_t i = 0; i < ground_truth.size(); ++i) {
      if (!keep[i]) pool.push_back(static_cast<int>(i));
    }
    Rng rng(derive_seed(refiner.noise_seed, "refine_noise", observed.size()));
    std::vector<Eigen::Vector3d> centers;
    for (int r = 0; r < refiner.noise_regions && !pool.empty(); ++r) {
      const std::size_t pick = rng.uniform_index(pool.size());
      keep[pool[pick]] = 1;
      centers.push_back(ground_truth.points[pool[pick]]);
      pool.erase(pool.begin() + static_cast<long>(pick));
    }
    if (!centers.empty() && refiner.noise_region_radius > 0.0) {
      mark_within(ground_truth.points, centers, refiner.noise_region_radius,
                  keep);
    }
  }

  PointCloud out;
  std::unordered_set<Cell, CellHash> emitted;
  const double quantum = 1e-12;
  for (std::size_t i = 0; i < ground_truth.size(); ++i) {
    if (!keep[i]) continue;
    out.points.push_back(ground_truth.points[i]);
    emitted.insert(cell_of(ground_truth.points[i], quantum));
  }
  // observed points are kept even if they are not ground-truth points
  for (const auto& p : observed.points) {
    if (emitted.insert(cell_of(p, quantum)).second) out.points.push_back(p);
  }
  return out;
}

}  // namespace viewplan
