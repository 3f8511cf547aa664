#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "viewplan/geometry.hpp"
#include "viewplan/occupancy.hpp"

namespace viewplan {

// Fixed-size bitmask over view ids.
struct ViewMask {
  int n = 0;
  std::vector<std::uint8_t> bits;

  ViewMask() = default;
  explicit ViewMask(int n_views) : n(n_views), bits(n_views, 0) {}

  bool get(int id) const { return bits[id] != 0; }
  void set(int id, bool value = true) { bits[id] = value ? 1 : 0; }
  int count() const;
  std::vector<int> ids() const;
  bool operator==(const ViewMask&) const = default;

  std::string to_string() const;  // e.g. "01001100..."
  static ViewMask from_string(const std::string& s);
  static ViewMask from_ids(int n_views, const std::vector<int>& ids);
};

// Covering instance: which quantized surface cells each view can supply,
// and the cell universe that a selection must cover.
struct CoverInstance {
  int n = 0;
  int alpha = 1;
  double grid_res = 0.0;
  Eigen::Vector3d grid_origin = Eigen::Vector3d::Zero();
  std::vector<VoxelKey> universe;              // sorted, unique
  std::vector<std::vector<VoxelKey>> subsets;  // per view, sorted, unique
};

// Cells seen by at least `alpha` of the per-view clouds, intersected with
// ground truth. Each per-view cloud is first clipped to the ground-truth
// cells, then multiplicity is counted per cell across views.
CoverInstance build_instance(const std::vector<PointCloud>& per_view,
                             const PointCloud& ground_truth, double grid_res,
                             int alpha);

struct SolveResult {
  ViewMask chosen;
  bool feasible = true;
  bool optimal = true;
  // universe cells no subset supplies (nonempty implies infeasible)
  std::vector<VoxelKey> uncoverable;
};

// Minimum-cardinality selection of views whose subsets cover the universe.
// Views flagged in `used` cannot be selected; their coverage is already
// granted. Ties between optimal selections resolve to the
// lexicographically smallest id set. Exact branch and bound; when a
// positive time limit runs out, returns the greedy solution with
// optimal=false. Instances beyond `max_views` throw SizeError.
SolveResult solve_exact(const CoverInstance& inst, const ViewMask& used,
                        double time_limit_s = 0.0, int max_views = 63);
SolveResult solve_exact(const CoverInstance& inst);

// Greedy max-new-coverage baseline, ties to the lowest id.
SolveResult solve_greedy(const CoverInstance& inst, const ViewMask& used);

void save_instance(const CoverInstance& inst, const std::string& path);
CoverInstance load_instance(const std::string& path);

}  // namespace viewplan
