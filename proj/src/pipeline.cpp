#include "viewplan/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "viewplan/error.hpp"
#include "viewplan/pathing.hpp"
#include "viewplan/rng.hpp"

namespace viewplan {

std::vector<double> PipelineConfig::budget_list() const {
  if (!budgets.empty()) return budgets;
  std::vector<double> out;
  for (int i = 0; i <= 30; ++i) out.push_back(0.1 * i);
  return out;
}

void PipelineConfig::validate() const {
  if (n_views < 2) throw ArgumentError("n_views must be at least 2");
  if (radius <= 0.0) throw ArgumentError("radius must be positive");
  if (viewspace_iterations < 0) throw ArgumentError("viewspace_iterations must be non-negative");
  if (grid_res <= 0.0) throw ArgumentError("grid_res must be positive");
  if (sensor_spacing <= 0.0) throw ArgumentError("sensor_spacing must be positive");
  if (sensor_max_range <= radius) {
    throw ArgumentError("sensor_max_range must exceed the view radius");
  }
  if (alpha < 1) throw ArgumentError("alpha must be at least 1");
  if (feature_dim < 1) throw ArgumentError("feature_dim must be positive");
  if (object_min_size <= 0.0 || object_max_size < object_min_size) {
    throw ArgumentError("object size range is invalid");
  }
  if (samples_per_object < 1) throw ArgumentError("samples_per_object must be positive");
  if (tail_max < 0 || tail_cap() < 1 || tail_cap() > n_views) {
    throw ArgumentError("tail_max must lie in [1, n_views]");
  }
  if (hidden < 1) throw ArgumentError("hidden width must be positive");
  if (epochs < 1) throw ArgumentError("epochs must be positive");
  if (learning_rate <= 0.0) throw ArgumentError("learning_rate must be positive");
  if (batch_size < 1) throw ArgumentError("batch_size must be positive");
  if (val_fraction < 0.0 || val_fraction >= 1.0) {
    throw ArgumentError("val_fraction must lie in [0, 1)");
  }
  if (chamfer_samples < 1 || emd_samples < 1) {
    throw ArgumentError("metric sample counts must be positive");
  }
  if (dcd_temperature <= 0.0) throw ArgumentError("dcd_temperature must be positive");
  if (!std::is_sorted(budgets.begin(), budgets.end())) {
    throw ArgumentError("budgets must be sorted ascending");
  }
  if (jobs < 1) throw ArgumentError("jobs must be at least 1");
  if (refiner.kind == Refiner::Kind::oracle_dilation && refiner.dilation_radius < 0.0) {
    throw ArgumentError("dilation_radius must not be negative");
  }
}

std::string config_to_json(const PipelineConfig& cfg) {
  nlohmann::json j;
  j["n_views"] = cfg.n_views;
  j["radius"] = cfg.radius;
  j["center"] = {cfg.center.x(), cfg.center.y(), cfg.center.z()};
  j["viewspace_iterations"] = cfg.viewspace_iterations;
  j["grid_res"] = cfg.grid_res;
  j["sensor_spacing"] = cfg.sensor_spacing;
  j["sensor_max_range"] = cfg.sensor_max_range;
  j["alpha"] = cfg.alpha;
  j["lambda"] = cfg.lambda;
  j["feature_dim"] = cfg.feature_dim;
  j["object_min_size"] = cfg.object_min_size;
  j["object_max_size"] = cfg.object_max_size;
  j["refiner"] = {{"kind", to_string(cfg.refiner.kind)},
                  {"dilation_radius", cfg.refiner.dilation_radius},
                  {"noise_regions", cfg.refiner.noise_regions},
                  {"noise_region_radius", cfg.refiner.noise_region_radius},
                  {"noise_seed", cfg.refiner.noise_seed}};
  j["samples_per_object"] = cfg.samples_per_object;
  j["tail_max"] = cfg.tail_max;
  j["hidden"] = cfg.hidden;
  j["epochs"] = cfg.epochs;
  j["learning_rate"] = cfg.learning_rate;
  j["batch_size"] = cfg.batch_size;
  j["val_fraction"] = cfg.val_fraction;
  j["chamfer_samples"] = cfg.chamfer_samples;
  j["emd_samples"] = cfg.emd_samples;
  j["dcd_temperature"] = cfg.dcd_temperature;
  j["budgets"] = cfg.budgets;
  j["seed"] = cfg.seed;
  j["jobs"] = cfg.jobs;
  return j.dump(2) + "\n";
}

PipelineConfig config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("config JSON: ") + e.what());
  }
  PipelineConfig cfg;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "n_views") cfg.n_views = value.get<int>();
      else if (key == "radius") cfg.radius = value.get<double>();
      else if (key == "center") {
        cfg.center = Eigen::Vector3d(value.at(0), value.at(1), value.at(2));
      } else if (key == "viewspace_iterations") cfg.viewspace_iterations = value.get<int>();
      else if (key == "grid_res") cfg.grid_res = value.get<double>();
      else if (key == "sensor_spacing") cfg.sensor_spacing = value.get<double>();
      else if (key == "sensor_max_range") cfg.sensor_max_range = value.get<double>();
      else if (key == "alpha") cfg.alpha = value.get<int>();
      else if (key == "lambda") cfg.lambda = value.get<double>();
      else if (key == "feature_dim") cfg.feature_dim = value.get<int>();
      else if (key == "object_min_size") cfg.object_min_size = value.get<double>();
      else if (key == "object_max_size") cfg.object_max_size = value.get<double>();
      else if (key == "refiner") {
        for (const auto& [rkey, rvalue] : value.items()) {
          if (rkey == "kind") {
            cfg.refiner.kind = refiner_kind_from_string(rvalue.get<std::string>());
          } else if (rkey == "dilation_radius") {
            cfg.refiner.dilation_radius = rvalue.get<double>();
          } else if (rkey == "noise_regions") {
            cfg.refiner.noise_regions = rvalue.get<int>();
          } else if (rkey == "noise_region_radius") {
            cfg.refiner.noise_region_radius = rvalue.get<double>();
          } else if (rkey == "noise_seed") {
            cfg.refiner.noise_seed = rvalue.get<std::uint64_t>();
          } else {
            throw FormatError("config JSON: unknown refiner key '" + rkey + "'");
          }
        }
      } else if (key == "samples_per_object") cfg.samples_per_object = value.get<int>();
      else if (key == "tail_max") cfg.tail_max = value.get<int>();
      else if (key == "hidden") cfg.hidden = value.get<int>();
      else if (key == "epochs") cfg.epochs = value.get<int>();
      else if (key == "learning_rate") cfg.learning_rate = value.get<double>();
      else if (key == "batch_size") cfg.batch_size = value.get<int>();
      else if (key == "val_fraction") cfg.val_fraction = value.get<double>();
      else if (key == "chamfer_samples") cfg.chamfer_samples = value.get<std::size_t>();
      else if (key == "emd_samples") cfg.emd_samples = value.get<std::size_t>();
      else if (key == "dcd_temperature") cfg.dcd_temperature = value.get<double>();
      else if (key == "budgets") cfg.budgets = value.get<std::vector<double>>();
      else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else if (key == "jobs") cfg.jobs = value.get<int>();
      else throw FormatError("config JSON: unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("config JSON: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return config_from_json(text);
}

double draw_object_size(const PipelineConfig& cfg, int object_id) {
  Rng rng(derive_seed(cfg.seed, "object_size",
                      static_cast<std::uint64_t>(object_id)));
  return rng.uniform(cfg.object_min_size, cfg.object_max_size);
}

namespace {

VoxelKey world_cell(const Eigen::Vector3d& p, double res) {
  return VoxelKey{static_cast<int>(std::floor(p.x() / res)),
                  static_cast<int>(std::floor(p.y() / res)),
                  static_cast<int>(std::floor(p.z() / res))};
}

std::vector<VoxelKey> cloud_cells(const PointCloud& cloud, double res) {
  std::vector<VoxelKey> keys;
  keys.reserve(cloud.size());
  for (const auto& p : cloud.points) keys.push_back(world_cell(p, res));
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  return keys;
}

}  // namespace

ObjectContext prepare_object(const Mesh& raw_mesh, const std::string& name,
                             int object_id, double size,
                             const ViewSpace& space,
                             const PipelineConfig& cfg) {
  if (space.size() != cfg.n_views) {
    throw ArgumentError("view space size does not match the config");
  }
  ObjectContext ctx;
  ctx.name = name;
  ctx.object_id = object_id;
  ctx.size = size;
  ctx.mesh = normalize_mesh(raw_mesh, size, cfg.center);
  ctx.surface = sample_surface(
      ctx.mesh, cfg.sensor_spacing,
      derive_seed(cfg.seed, "surface", static_cast<std::uint64_t>(object_id)));
  ctx.grid = build_grid(ctx.surface, cfg.grid_res, cfg.grid_res);
  ctx.merge_res = cfg.sensor_spacing * 0.25;

  const double max_r2 = cfg.sensor_max_range * cfg.sensor_max_range;
  ctx.coverable.assign(ctx.surface.size(), 0);
  ctx.captures.resize(space.size());
  ctx.refined.resize(space.size());
  ctx.capture_cells.resize(space.size());
  for (int v = 0; v < space.size(); ++v) {
    const auto& pose = space.views[v].pose;
    const auto flags = visible_points(ctx.grid, ctx.surface, pose.position);
    PointCloud cap;
    for (std::size_t i = 0; i < ctx.surface.size(); ++i) {
      if (!flags[i]) continue;
      ctx.coverable[i] = 1;
      if ((ctx.surface.points[i] - pose.position).squaredNorm() > max_r2) continue;
      cap.points.push_back(ctx.surface.points[i]);
      cap.source_view.push_back(static_cast<std::uint16_t>(v));
    }
    ctx.captures[v] = std::move(cap);
    ctx.refined[v] = refine(cfg.refiner, ctx.captures[v], ctx.surface);
    ctx.capture_cells[v] = cloud_cells(ctx.captures[v], cfg.grid_res);
  }

  std::set<VoxelKey> denom;
  for (std::size_t i = 0; i < ctx.surface.size(); ++i) {
    if (ctx.coverable[i]) denom.insert(world_cell(ctx.surface.points[i], cfg.grid_res));
  }
  ctx.coverable_cells.assign(denom.begin(), denom.end());

  ctx.instance = build_instance(ctx.refined, ctx.surface, cfg.grid_res, cfg.alpha);
  return ctx;
}

namespace {

// subset size k in [1, kmax] with P(k) proportional to 1/k
int draw_tail_size(Rng& rng, int kmax) {
  double total = 0.0;
  for (int k = 1; k <= kmax; ++k) total += 1.0 / k;
  double u = rng.uniform() * total;
  for (int k = 1; k <= kmax; ++k) {
    u -= 1.0 / k;
    if (u < 0.0) return k;
  }
  return kmax;
}

ViewMask draw_subset(Rng& rng, int n, int k) {
  std::vector<int> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  rng.shuffle(ids);
  ids.resize(static_cast<std::size_t>(k));
  return ViewMask::from_ids(n, ids);
}

PointCloud gather_observed(const ObjectContext& ctx, const ViewMask& views) {
  std::vector<PointCloud> parts;
  for (int v : views.ids()) parts.push_back(ctx.captures[v]);
  return accumulate(parts, ctx.merge_res);
}

}  // namespace

Dataset generate_dataset(const std::vector<ObjectContext>& objects,
                         const ViewSpace& space, const PipelineConfig& cfg,
                         DatasetGenStats* stats) {
  if (objects.empty()) throw ArgumentError("dataset generation needs objects");
  const int n = cfg.n_views;
  const int kmax = cfg.tail_cap();
  const Eigen::AlignedBox3d volume = default_feature_volume();

  std::vector<std::vector<Sample>> per_object(objects.size());
  std::vector<long> skipped(objects.size(), 0);
  parallel_for(objects.size(), cfg.jobs, [&](std::size_t oi) {
    const ObjectContext& ctx = objects[oi];
    if (ctx.instance.n != n) {
      throw ArgumentError("object context does not match the config");
    }
    std::vector<ViewMask> inputs;
    if (kmax == 1) {
      for (int v = 0; v < n; ++v) inputs.push_back(ViewMask::from_ids(n, {v}));
    } else {
      for (int s = 0; s < cfg.samples_per_object; ++s) {
        Rng rng(derive_seed(cfg.seed, "dataset_sample",
                            (static_cast<std::uint64_t>(ctx.object_id) << 32) |
                                static_cast<std::uint64_t>(s)));
        inputs.push_back(draw_subset(rng, n, draw_tail_size(rng, kmax)));
      }
    }
    for (const auto& state : inputs) {
      const SolveResult label = solve_exact(ctx.instance, state);
      if (!label.feasible) {
        ++skipped[oi];
        continue;
      }
      const PointCloud observed = gather_observed(ctx, state);
      const PointCloud refined_obs = refine(cfg.refiner, observed, ctx.surface);
      Sample sample;
      sample.features = featurize(refined_obs, state, cfg.feature_dim, volume);
      sample.label = label.chosen;
      sample.object_id = ctx.object_id;
      per_object[oi].push_back(std::move(sample));
    }
  });

  Dataset ds;
  ds.n = n;
  ds.D = cfg.feature_dim;
  DatasetGenStats local;
  for (std::size_t oi = 0; oi < objects.size(); ++oi) {
    local.skipped_infeasible += skipped[oi];
    for (auto& s : per_object[oi]) ds.samples.push_back(std::move(s));
  }
  local.samples = static_cast<long>(ds.samples.size());
  if (stats) *stats = local;
  return ds;
}

void save_dataset_dir(const Dataset& dataset, const PipelineConfig& cfg,
                      const std::vector<std::string>& object_names,
                      const DatasetGenStats& stats, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  std::map<int, long> counts;
  for (const auto& s : dataset.samples) ++counts[s.object_id];

  nlohmann::json manifest;
  manifest["n"] = dataset.n;
  manifest["feature_dim"] = dataset.D;
  manifest["sample_count"] = dataset.samples.size();
  manifest["skipped_infeasible"] = stats.skipped_infeasible;
  manifest["config"] = nlohmann::json::parse(config_to_json(cfg));
  nlohmann::json objects = nlohmann::json::array();
  std::vector<int> object_ids;
  for (const auto& [id, count] : counts) {
    nlohmann::json o;
    o["id"] = id;
    o["samples"] = count;
    o["file"] = "samples_" + std::to_string(id) + ".bin";
    if (id >= 0 && static_cast<std::size_t>(id) < object_names.size()) {
      o["name"] = object_names[static_cast<std::size_t>(id)];
    }
    objects.push_back(o);
    object_ids.push_back(id);
  }
  manifest["objects"] = objects;
  {
    std::ofstream out(fs::path(dir) / "manifest.json", std::ios::binary);
    if (!out) throw Error("cannot write dataset manifest in '" + dir + "'");
    out << manifest.dump(2) << "\n";
  }
  for (int id : object_ids) {
    Dataset slice;
    slice.n = dataset.n;
    slice.D = dataset.D;
    for (const auto& s : dataset.samples) {
      if (s.object_id == id) slice.samples.push_back(s);
    }
    save_dataset(slice,
                 (fs::path(dir) / ("samples_" + std::to_string(id) + ".bin")).string());
  }
}

Dataset load_dataset_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path manifest_path = fs::path(dir) / "manifest.json";
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw Error("cannot open '" + manifest_path.string() + "'");
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }
  Dataset ds;
  try {
    ds.n = manifest.at("n").get<int>();
    ds.D = manifest.at("feature_dim").get<int>();
    for (const auto& o : manifest.at("objects")) {
      const Dataset slice =
          load_dataset((fs::path(dir) / o.at("file").get<std::string>()).string());
      if (slice.n != ds.n || slice.D != ds.D) {
        throw FormatError(manifest_path.string() +
                          ": object file dimensions disagree with manifest");
      }
      for (const auto& s : slice.samples) ds.samples.push_back(s);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }
  return ds;
}

Planner planner_from_string(const std::string& name) {
  if (name == "scop") return Planner::scop_oracle;
  if (name == "predictor") return Planner::predictor;
  if (name == "nbv") return Planner::nbv;
  throw ArgumentError("unknown planner '" + name + "' (scop|predictor|nbv)");
}

std::string to_string(Planner planner) {
  switch (planner) {
    case Planner::scop_oracle: return "scop";
    case Planner::predictor: return "predictor";
    case Planner::nbv: return "nbv";
  }
  throw InternalError("unhandled planner");
}

namespace {

struct CoverageTracker {
  const ObjectContext* ctx;
  std::set<VoxelKey> covered;

  explicit CoverageTracker(const ObjectContext& c) : ctx(&c) {}

  void add_view(int v) {
    covered.insert(ctx->capture_cells[v].begin(), ctx->capture_cells[v].end());
  }
  int gain_of(int v) const {
    int g = 0;
    for (const auto& key : ctx->capture_cells[v]) g += covered.count(key) == 0;
    return g;
  }
  double coverage() const {
    if (ctx->coverable_cells.empty()) return 0.0;
    return static_cast<double>(covered.size()) /
           static_cast<double>(ctx->coverable_cells.size());
  }
};

void fill_step_metrics(StepRecord& step, const ObjectContext& ctx,
                       const PointCloud& observed, const PipelineConfig& cfg) {
  step.has_metrics = true;
  step.cd_mm = chamfer_mm(observed, ctx.surface, cfg.chamfer_samples, cfg.seed);
  step.emd_mm = emd_mm(observed, ctx.surface, cfg.emd_samples, cfg.seed);
  step.dcd_value = dcd(observed, ctx.surface, cfg.dcd_temperature,
                       cfg.chamfer_samples, cfg.seed);
}

void finalize_record(RunRecord& rec, const ObjectContext& ctx,
                     const PipelineConfig& cfg, bool step_metrics) {
  CoverageTracker tracker(ctx);
  std::vector<PointCloud> parts;
  for (int v : rec.views) {
    StepRecord step;
    step.view = v;
    tracker.add_view(v);
    parts.push_back(ctx.captures[v]);
    step.coverage = tracker.coverage();
    rec.steps.push_back(step);
    if (step_metrics) {
      fill_step_metrics(rec.steps.back(), ctx, accumulate(parts, ctx.merge_res), cfg);
    }
  }
  const PointCloud observed = accumulate(parts, ctx.merge_res);
  rec.observed_points = observed.size();
  rec.final_coverage = rec.steps.empty() ? 0.0 : rec.steps.back().coverage;
  rec.final_cd_mm = chamfer_mm(observed, ctx.surface, cfg.chamfer_samples, cfg.seed);
  rec.final_emd_mm = emd_mm(observed, ctx.surface, cfg.emd_samples, cfg.seed);
  rec.final_dcd = dcd(observed, ctx.surface, cfg.dcd_temperature,
                      cfg.chamfer_samples, cfg.seed);
  rec.required_views = static_cast<int>(rec.views.size());
}

}  // namespace

RunRecord run_oneshot(const ObjectContext& ctx, const ViewSpace& space,
                      Planner planner, const Model* model, int init_view,
                      const PipelineConfig& cfg, bool step_metrics) {
  if (init_view < 0 || init_view >= space.size()) {
    throw ArgumentError("init view outside the view space");
  }
  if (planner == Planner::nbv) {
    return run_nbv_baseline(ctx, space, init_view, space.size() - 1, cfg, -1.0,
                            step_metrics);
  }

  RunRecord rec;
  rec.object = ctx.name;
  rec.method = to_string(planner);
  rec.init_view = init_view;

  ViewMask used(space.size());
  used.set(init_view);

  ViewMask chosen(space.size());
  if (planner == Planner::scop_oracle) {
    const SolveResult solved = solve_exact(ctx.instance, used);
    if (!solved.feasible) {
      rec.flags.push_back("infeasible residual");
    }
    chosen = solved.chosen;
  } else {
    if (!model) throw ArgumentError("predictor planner needs a model");
    const PointCloud observed = gather_observed(ctx, used);
    const PointCloud refined_obs = refine(cfg.refiner, observed, ctx.surface);
    const FeatureTensor features =
        featurize(refined_obs, used, cfg.feature_dim, default_feature_volume());
    chosen = predict(*model, features);
    chosen.set(init_view, false);  // never revisit the starting view
  }

  if (chosen.count() == 0) rec.flags.push_back("no-op plan");

  Tour tour;
  try {
    tour = plan_tour(space, chosen, init_view);
  } catch (const SizeError&) {
    rec.flags.push_back("greedy tour fallback");
    tour = plan_tour_greedy(space, chosen, init_view);
  }
  rec.views = tour.order;
  rec.tour_cost = tour.total_cost;
  finalize_record(rec, ctx, cfg, step_metrics);
  for (std::size_t i = 1; i < rec.steps.size(); ++i) {
    rec.steps[i].leg_cost = tour.leg_costs[i - 1];
    rec.steps[i].cum_cost = rec.steps[i - 1].cum_cost + tour.leg_costs[i - 1];
  }
  return rec;
}

RunRecord run_nbv_baseline(const ObjectContext& ctx, const ViewSpace& space,
                           int init_view, int steps,
                           const PipelineConfig& cfg, double target_coverage,
                           bool step_metrics) {
  if (init_view < 0 || init_view >= space.size()) {
    throw ArgumentError("init view outside the view space");
  }
  if (steps < 1) throw ArgumentError("nbv needs at least one step");

  RunRecord rec;
  rec.object = ctx.name;
  rec.method = "nbv";
  rec.init_view = init_view;

  CoverageTracker tracker(ctx);
  tracker.add_view(init_view);
  rec.views.push_back(init_view);
  std::vector<char> visited(space.size(), 0);
  visited[init_view] = 1;
  int current = init_view;
  double cum = 0.0;
  std::vector<double> leg_costs;

  for (int s = 0; s < steps; ++s) {
    if (target_coverage > 0.0 && tracker.coverage() >= target_coverage) break;
    int best = -1;
    int best_gain = -1;
    for (int v = 0; v < space.size(); ++v) {
      if (visited[v]) continue;
      const int g = tracker.gain_of(v);
      if (g > best_gain) {
        best_gain = g;
        best = v;
      }
    }
    if (best < 0) break;  // every view visited
    visited[best] = 1;
    tracker.add_view(best);
    leg_costs.push_back(space.cost(current, best));
    cum += space.cost(current, best);
    current = best;
    rec.views.push_back(best);
  }
  rec.tour_cost = cum;
  finalize_record(rec, ctx, cfg, step_metrics);
  for (std::size_t i = 1; i < rec.steps.size(); ++i) {
    rec.steps[i].leg_cost = leg_costs[i - 1];
    rec.steps[i].cum_cost = rec.steps[i - 1].cum_cost + leg_costs[i - 1];
  }
  return rec;
}

std::string record_to_json_line(const RunRecord& record) {
  nlohmann::json j;
  j["object"] = record.object;
  j["method"] = record.method;
  j["init_view"] = record.init_view;
  j["views"] = record.views;
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : record.steps) {
    nlohmann::json step;
    step["view"] = s.view;
    step["leg_cost"] = s.leg_cost;
    step["cum_cost"] = s.cum_cost;
    step["coverage"] = s.coverage;
    if (s.has_metrics) {
      step["cd_mm"] = s.cd_mm;
      step["emd_mm"] = s.emd_mm;
      step["dcd"] = s.dcd_value;
    }
    steps.push_back(step);
  }
  j["steps"] = steps;
  j["required_views"] = record.required_views;
  j["tour_cost"] = record.tour_cost;
  j["final"] = {{"coverage", record.final_coverage},
                {"cd_mm", record.final_cd_mm},
                {"emd_mm", record.final_emd_mm},
                {"dcd", record.final_dcd},
                {"observed_points", record.observed_points}};
  j["flags"] = record.flags;
  return j.dump();
}

std::vector<SweepRow> sweep_budgets(const RunRecord& record,
                                    const std::vector<double>& budgets) {
  if (!std::is_sorted(budgets.begin(), budgets.end())) {
    throw ArgumentError("budgets must be sorted ascending");
  }
  std::vector<SweepRow> rows;
  for (double budget : budgets) {
    SweepRow row;
    row.object = record.object;
    row.method = record.method;
    row.budget = budget;
    for (const auto& step : record.steps) {
      if (step.cum_cost > budget) break;
      ++row.views_used;
      row.cost_used = step.cum_cost;
      row.coverage = step.coverage;
      row.has_metrics = step.has_metrics;
      row.cd_mm = step.cd_mm;
      row.emd_mm = step.emd_mm;
      row.dcd_value = step.dcd_value;
    }
    rows.push_back(row);
  }
  return rows;
}

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd out;
  if (values.empty()) return out;
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) /
             static_cast<double>(values.size());
  if (values.size() < 2) return out;
  double acc = 0.0;
  for (double v : values) acc += (v - out.mean) * (v - out.mean);
  out.stddev = std::sqrt(acc / static_cast<double>(values.size() - 1));
  return out;
}

void parallel_for(std::size_t count, int jobs,
                  const std::function<void(std::size_t)>& fn) {
  if (jobs < 1) throw ArgumentError("jobs must be at least 1");
  const int workers = static_cast<int>(
      std::min<std::size_t>(count, static_cast<std::size_t>(jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace viewplan
