#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "viewplan/covering.hpp"
#include "viewplan/geometry.hpp"
#include "viewplan/metrics.hpp"
#include "viewplan/occupancy.hpp"
#include "viewplan/predictor.hpp"
#include "viewplan/refinement.hpp"
#include "viewplan/sensor.hpp"
#include "viewplan/viewspace.hpp"

namespace viewplan {

// One config drives every stage; all randomness splits off `seed`.
struct PipelineConfig {
  int n_views = 32;
  double radius = 0.4;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  int viewspace_iterations = 2000;

  double grid_res = 0.005;
  double sensor_spacing = 0.002;
  double sensor_max_range = 1.0;

  int alpha = 10;
  double lambda = 1.25;
  int feature_dim = 32;

  double object_min_size = 0.05;
  double object_max_size = 0.15;

  Refiner refiner;

  int samples_per_object = 360;
  int tail_max = 0;  // 0 means n_views / 2

  int hidden = 64;
  int epochs = 30;
  double learning_rate = 0.05;
  int batch_size = 32;
  double val_fraction = 0.2;

  std::size_t chamfer_samples = 10240;
  std::size_t emd_samples = 512;
  double dcd_temperature = 1000.0;

  std::vector<double> budgets;  // empty means 0.1 m steps up to 3.0 m

  std::uint64_t seed = 0;
  int jobs = 1;

  int tail_cap() const { return tail_max > 0 ? tail_max : n_views / 2; }
  std::vector<double> budget_list() const;
  void validate() const;
};

std::string config_to_json(const PipelineConfig& cfg);
// Unknown keys are rejected; missing keys keep their defaults.
PipelineConfig config_from_json(const std::string& text);
PipelineConfig load_config(const std::string& path);

// Everything derived once per object: normalized mesh, ground-truth surface,
// per-view captures and refinements, the covering instance, and the cell
// bookkeeping used for coverage accounting.
struct ObjectContext {
  std::string name;
  int object_id = 0;
  double size = 0.0;
  Mesh mesh;
  PointCloud surface;
  OccupancyGrid grid;
  std::vector<PointCloud> captures;  // raw, tagged per view
  std::vector<PointCloud> refined;   // refiner applied per view
  std::vector<char> coverable;       // per surface point: seen by any view
  std::vector<VoxelKey> coverable_cells;            // coverage denominator
  std::vector<std::vector<VoxelKey>> capture_cells; // per view, sorted
  CoverInstance instance;

  // dedup resolution for merging captures: fine enough to only fuse
  // duplicate observations of the same surface sample
  double merge_res = 0.0;
};

ObjectContext prepare_object(const Mesh& raw_mesh, const std::string& name,
                             int object_id, double size,
                             const ViewSpace& space,
                             const PipelineConfig& cfg);

// Deterministic per-object size draw within the configured range.
double draw_object_size(const PipelineConfig& cfg, int object_id);

struct DatasetGenStats {
  long samples = 0;
  long skipped_infeasible = 0;
};

// Long-tailed view-subset sampling (P(k) proportional to 1/k) with exact
// minimum covers of the remaining surface as labels. A tail cap of 1
// enumerates every single-view input exactly once instead of sampling.
Dataset generate_dataset(const std::vector<ObjectContext>& objects,
                         const ViewSpace& space, const PipelineConfig& cfg,
                         DatasetGenStats* stats = nullptr);

// Dataset directory: manifest.json plus one binary record file per object.
void save_dataset_dir(const Dataset& dataset, const PipelineConfig& cfg,
                      const std::vector<std::string>& object_names,
                      const DatasetGenStats& stats, const std::string& dir);
Dataset load_dataset_dir(const std::string& dir);

enum class Planner { scop_oracle, predictor, nbv };
Planner planner_from_string(const std::string& name);
std::string to_string(Planner planner);

struct StepRecord {
  int view = 0;
  double leg_cost = 0.0;
  double cum_cost = 0.0;
  double coverage = 0.0;
  // optional distance metrics of the accumulated observation
  bool has_metrics = false;
  double cd_mm = 0.0;
  double emd_mm = 0.0;
  double dcd_value = 0.0;
};

struct RunRecord {
  std::string object;
  std::string method;
  int init_view = 0;
  std::vector<int> views;  // visit order, init first
  std::vector<StepRecord> steps;
  int required_views = 0;
  double tour_cost = 0.0;
  double final_coverage = 0.0;
  double final_cd_mm = 0.0;
  double final_emd_mm = 0.0;
  double final_dcd = 0.0;
  std::size_t observed_points = 0;
  std::vector<std::string> flags;
};

std::string record_to_json_line(const RunRecord& record);

// Capture the initial view, plan the remaining view set (exact cover oracle
// or the trained predictor), tour it, and accumulate captures along the way.
RunRecord run_oneshot(const ObjectContext& ctx, const ViewSpace& space,
                      Planner planner, const Model* model, int init_view,
                      const PipelineConfig& cfg, bool step_metrics = false);

// Greedy oracle baseline: each step visits the view adding the most
// uncovered surface cells (ties to the lowest id), for `steps` steps or
// until `target_coverage` is reached when it is positive.
RunRecord run_nbv_baseline(const ObjectContext& ctx, const ViewSpace& space,
                           int init_view, int steps,
                           const PipelineConfig& cfg,
                           double target_coverage = -1.0,
                           bool step_metrics = false);

struct SweepRow {
  std::string object;
  std::string method;
  double budget = 0.0;
  int views_used = 0;
  double cost_used = 0.0;
  double coverage = 0.0;
  // copied from the last step within budget when it carries metrics
  bool has_metrics = false;
  double cd_mm = 0.0;
  double emd_mm = 0.0;
  double dcd_value = 0.0;
};

// Truncate a finished run at each budget: the record prefix whose
// cumulative cost stays within budget.
std::vector<SweepRow> sweep_budgets(const RunRecord& record,
                                    const std::vector<double>& budgets);

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for fewer than 2
};
MeanStd mean_std(const std::vector<double>& values);

// Run fn(i) for i in [0, count) over `jobs` threads. Exceptions propagate;
// work items must not depend on execution order.
void parallel_for(std::size_t count, int jobs,
                  const std::function<void(std::size_t)>& fn);

}  // namespace viewplan
