#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "viewplan/error.hpp"
#include "viewplan/pipeline.hpp"
#include "viewplan/synth.hpp"

namespace {

using namespace viewplan;

// carried to main() so the exit code can be 3 with the diagnostic on stdout
struct InfeasiblePlan {
  std::string diagnostic;
};

std::string format_num(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

// wall-clock timing goes only to this sidecar; artifacts stay byte-stable
class SidecarLog {
 public:
  SidecarLog(std::string path, std::string command)
      : path_(std::move(path)), command_(std::move(command)),
        start_(std::chrono::steady_clock::now()) {}

  ~SidecarLog() {
    if (path_.empty()) return;
    const auto elapsed = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - start_)
                             .count();
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm);
    std::ofstream out(path_, std::ios::app);
    out << command_ << " finished=" << stamp << " elapsed_s=" << std::fixed
        << std::setprecision(3) << elapsed << "\n";
  }

 private:
  std::string path_;
  std::string command_;
  std::chrono::steady_clock::time_point start_;
};

struct CommonOpts {
  CLI::App* sub = nullptr;
  std::string config;
  std::string log;
  int n = 0;
  double radius = 0.0;
  double grid_res = 0.0;
  double spacing = 0.0;
  double max_range = 0.0;
  int alpha = 0;
  double lambda = 0.0;
  int feature_dim = 0;
  double object_min_size = 0.0;
  double object_max_size = 0.0;
  std::string refiner_kind;
  double dilation_radius = 0.0;
  int samples_per_object = 0;
  int tail_max = 0;
  int hidden = 0;
  int epochs = 0;
  double learning_rate = 0.0;
  int batch_size = 0;
  double val_fraction = 0.0;
  std::uint64_t seed = 0;
  int jobs = 0;

  bool has(const std::string& flag) const { return sub->count(flag) > 0; }
};

void add_common(CLI::App* sub, CommonOpts& o) {
  o.sub = sub;
  sub->add_option("--config", o.config,
                  "JSON config file; VIEWPLAN_CONFIG supplies the default "
                  "path when the flag is absent");
  sub->add_option("--log", o.log, "sidecar log file for wall-clock timing");
  sub->add_option("--n", o.n, "number of candidate views");
  sub->add_option("--radius", o.radius, "view sphere radius in meters");
  sub->add_option("--grid-res", o.grid_res, "occupancy voxel size in meters");
  sub->add_option("--spacing", o.spacing,
                  "surface sample spacing in meters");
  sub->add_option("--max-range", o.max_range, "sensor range limit in meters");
  sub->add_option("--alpha", o.alpha, "fused-universe view multiplicity");
  sub->add_option("--lambda", o.lambda, "positive-class loss weight");
  sub->add_option("--feature-dim", o.feature_dim,
                  "feature volume cells per axis");
  sub->add_option("--object-min-size", o.object_min_size,
                  "smallest object diameter in meters");
  sub->add_option("--object-max-size", o.object_max_size,
                  "largest object diameter in meters");
  sub->add_option("--refiner", o.refiner_kind,
                  "surface refiner: identity or oracle_dilation");
  sub->add_option("--dilation-radius", o.dilation_radius,
                  "oracle refiner dilation radius in meters");
  sub->add_option("--samples-per-object", o.samples_per_object,
                  "dataset samples drawn per object");
  sub->add_option("--tail-max", o.tail_max,
                  "largest sampled input subset (0 means n/2)");
  sub->add_option("--hidden", o.hidden, "predictor hidden width");
  sub->add_option("--epochs", o.epochs, "training epochs");
  sub->add_option("--lr", o.learning_rate, "learning rate");
  sub->add_option("--batch", o.batch_size, "minibatch size");
  sub->add_option("--val-fraction", o.val_fraction,
                  "validation split fraction");
  sub->add_option("--seed", o.seed, "master random seed");
  sub->add_option("--jobs", o.jobs, "parallel workers for per-object stages");
}

PipelineConfig make_config(const CommonOpts& o) {
  PipelineConfig cfg;
  std::string path = o.config;
  if (path.empty()) {
    if (const char* env = std::getenv("VIEWPLAN_CONFIG")) path = env;
  }
  if (!path.empty()) cfg = load_config(path);
  if (o.has("--n")) cfg.n_views = o.n;
  if (o.has("--radius")) cfg.radius = o.radius;
  if (o.has("--grid-res")) cfg.grid_res = o.grid_res;
  if (o.has("--spacing")) cfg.sensor_spacing = o.spacing;
  if (o.has("--max-range")) cfg.sensor_max_range = o.max_range;
  if (o.has("--alpha")) cfg.alpha = o.alpha;
  if (o.has("--lambda")) cfg.lambda = o.lambda;
  if (o.has("--feature-dim")) cfg.feature_dim = o.feature_dim;
  if (o.has("--object-min-size")) cfg.object_min_size = o.object_min_size;
  if (o.has("--object-max-size")) cfg.object_max_size = o.object_max_size;
  if (o.has("--refiner")) cfg.refiner.kind = refiner_kind_from_string(o.refiner_kind);
  if (o.has("--dilation-radius")) cfg.refiner.dilation_radius = o.dilation_radius;
  if (o.has("--samples-per-object")) cfg.samples_per_object = o.samples_per_object;
  if (o.has("--tail-max")) cfg.tail_max = o.tail_max;
  if (o.has("--hidden")) cfg.hidden = o.hidden;
  if (o.has("--epochs")) cfg.epochs = o.epochs;
  if (o.has("--lr")) cfg.learning_rate = o.learning_rate;
  if (o.has("--batch")) cfg.batch_size = o.batch_size;
  if (o.has("--val-fraction")) cfg.val_fraction = o.val_fraction;
  if (o.has("--seed")) cfg.seed = o.seed;
  if (o.has("--jobs")) cfg.jobs = o.jobs;
  cfg.validate();
  return cfg;
}

// The view space file is authoritative for n/radius/center; explicit flags
// must agree with it.
void adopt_space(PipelineConfig& cfg, const ViewSpace& space,
                 const CommonOpts& o) {
  if (o.has("--n") && cfg.n_views != space.size()) {
    throw ArgumentError("--n disagrees with the view space file");
  }
  if (o.has("--radius") && cfg.radius != space.radius) {
    throw ArgumentError("--radius disagrees with the view space file");
  }
  cfg.n_views = space.size();
  cfg.radius = space.radius;
  cfg.center = space.center;
  cfg.validate();
}

Mesh load_object(const std::string& name) {
  if (std::filesystem::exists(name)) return load_mesh(name);
  const auto names = shape_names();
  if (std::find(names.begin(), names.end(), name) != names.end()) {
    return make_shape(name);
  }
  throw ArgumentError("object '" + name +
                      "' is neither a mesh file nor a builtin shape");
}

std::string object_label(const std::string& name) {
  if (std::filesystem::exists(name)) {
    return std::filesystem::path(name).stem().string();
  }
  return name;
}

std::vector<Planner> parse_methods(const std::vector<std::string>& raw) {
  std::vector<Planner> out;
  for (const auto& entry : raw) {
    std::stringstream ss(entry);
    std::string token;
    while (std::getline(ss, token, ',')) {
      if (token.empty()) continue;
      const Planner p = planner_from_string(token);
      if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
    }
  }
  if (out.empty()) throw ArgumentError("no methods requested");
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
}

void check_infeasible(const RunRecord& rec) {
  for (const auto& flag : rec.flags) {
    if (flag != "infeasible residual") continue;
    nlohmann::json j;
    j["error"] = "infeasible";
    j["object"] = rec.object;
    j["method"] = rec.method;
    j["init_view"] = rec.init_view;
    throw InfeasiblePlan{j.dump()};
  }
}

struct ViewspaceOpts {
  std::string out;
  int iterations = 0;
};

void cmd_viewspace(const CommonOpts& co, const ViewspaceOpts& vo) {
  SidecarLog log(co.log, "viewspace");
  PipelineConfig cfg = make_config(co);
  const int iterations =
      vo.iterations > 0 ? vo.iterations : cfg.viewspace_iterations;
  const ViewSpace space =
      build_viewspace(cfg.n_views, cfg.radius, cfg.center, cfg.seed, iterations);
  save_viewspace(space, vo.out);
}

struct SynthOpts {
  std::string shape;
  std::string out;
  bool ascii = false;
};

void cmd_synth(const CommonOpts& co, const SynthOpts& so) {
  SidecarLog log(co.log, "synth");
  save_mesh_ply(make_shape(so.shape), so.out, !so.ascii);
}

struct GenDatasetOpts {
  std::string viewspace;
  std::string out_dir;
  std::vector<std::string> objects;
};

void cmd_gen_dataset(const CommonOpts& co, const GenDatasetOpts& go) {
  SidecarLog log(co.log, "gen-dataset");
  PipelineConfig cfg = make_config(co);
  const ViewSpace space = load_viewspace(go.viewspace);
  adopt_space(cfg, space, co);

  std::vector<std::string> names;
  std::vector<ObjectContext> contexts(go.objects.size());
  for (const auto& obj : go.objects) names.push_back(object_label(obj));
  parallel_for(go.objects.size(), cfg.jobs, [&](std::size_t oi) {
    const Mesh mesh = load_object(go.objects[oi]);
    const int id = static_cast<int>(oi);
    contexts[oi] = prepare_object(mesh, names[oi], id,
                                  draw_object_size(cfg, id), space, cfg);
  });

  DatasetGenStats stats;
  const Dataset dataset = generate_dataset(contexts, space, cfg, &stats);
  save_dataset_dir(dataset, cfg, names, stats, go.out_dir);

  nlohmann::json j;
  j["objects"] = go.objects.size();
  j["samples"] = stats.samples;
  j["skipped_infeasible"] = stats.skipped_infeasible;
  j["out_dir"] = go.out_dir;
  std::cout << j.dump() << "\n";
}

struct TrainOpts {
  std::string dataset;
  std::string model_out;
  std::string report_out;
};

void cmd_train(const CommonOpts& co, const TrainOpts& to) {
  SidecarLog log(co.log, "train");
  PipelineConfig cfg = make_config(co);
  const Dataset dataset = load_dataset_dir(to.dataset);
  if (dataset.samples.empty()) throw ArgumentError("dataset is empty");
  if (co.has("--feature-dim") && cfg.feature_dim != dataset.D) {
    throw ArgumentError("--feature-dim disagrees with the dataset");
  }
  if (co.has("--n") && cfg.n_views != dataset.n) {
    throw ArgumentError("--n disagrees with the dataset");
  }

  TrainOptions options;
  options.lambda = cfg.lambda;
  options.epochs = cfg.epochs;
  options.learning_rate = cfg.learning_rate;
  options.batch_size = cfg.batch_size;
  options.hidden = cfg.hidden;
  options.val_fraction = cfg.val_fraction;
  options.seed = cfg.seed;

  TrainReport report;
  const Model model = train(dataset, options, &report);
  save_model(model, to.model_out);

  std::string report_path = to.report_out;
  if (report_path.empty()) report_path = to.model_out + ".report.csv";
  std::ostringstream csv;
  csv << "epoch,train_loss,val_loss,precision,recall,f1\n";
  for (const auto& e : report.epochs) {
    csv << e.epoch << "," << format_num(e.train_loss) << ","
        << format_num(e.val_loss) << "," << format_num(e.precision) << ","
        << format_num(e.recall) << "," << format_num(e.f1) << "\n";
  }
  write_text(report_path, csv.str());

  nlohmann::json j;
  j["samples"] = dataset.samples.size();
  j["epochs"] = report.epochs.size();
  j["best_f1_epoch"] = report.best_f1_epoch;
  j["final_f1"] = report.final.f1;
  j["model"] = to.model_out;
  j["report"] = report_path;
  std::cout << j.dump() << "\n";
}

struct PlanOpts {
  std::string viewspace;
  std::string object;
  std::string planner = "scop";
  std::string model;
  std::string out;
  int object_id = 0;
  double size = 0.0;
  int init_view = 0;
  int steps = 0;
  bool step_metrics = false;
};

void cmd_plan(const CommonOpts& co, const PlanOpts& po) {
  SidecarLog log(co.log, "plan");
  PipelineConfig cfg = make_config(co);
  const ViewSpace space = load_viewspace(po.viewspace);
  adopt_space(cfg, space, co);

  const Planner planner = planner_from_string(po.planner);
  Model model;
  if (planner == Planner::predictor) {
    if (po.model.empty()) {
      throw ArgumentError("--model is required for the predictor planner");
    }
    model = load_model(po.model);
    if (model.n != space.size()) {
      throw ArgumentError("model view count disagrees with the view space");
    }
    if (co.has("--feature-dim") && cfg.feature_dim != model.D) {
      throw ArgumentError("--feature-dim disagrees with the model");
    }
    cfg.feature_dim = model.D;
  }

  const Mesh mesh = load_object(po.object);
  const double size =
      po.size > 0.0 ? po.size : draw_object_size(cfg, po.object_id);
  const ObjectContext ctx = prepare_object(mesh, object_label(po.object),
                                           po.object_id, size, space, cfg);

  RunRecord rec;
  if (planner == Planner::nbv) {
    const int steps = po.steps > 0 ? po.steps : space.size() - 1;
    rec = run_nbv_baseline(ctx, space, po.init_view, steps, cfg, -1.0,
                           po.step_metrics);
  } else {
    rec = run_oneshot(ctx, space, planner,
                      planner == Planner::predictor ? &model : nullptr,
                      po.init_view, cfg, po.step_metrics);
  }
  check_infeasible(rec);

  const std::string line = record_to_json_line(rec) + "\n";
  if (po.out.empty()) {
    std::cout << line;
  } else {
    write_text(po.out, line);
  }
}

struct EvalOpts {
  std::string viewspace;
  std::string out_dir;
  std::string model;
  std::vector<std::string> objects;
  std::vector<std::string> methods{"scop", "nbv"};
  int init_view = 0;
  bool no_step_metrics = false;
};

void append_summary_row(std::ostringstream& csv, const std::string& object,
                        const std::string& method, double views, double cost,
                        double coverage, double cd, double emd, double dcd_v,
                        const std::string& views_to_ref,
                        const std::string& cost_to_ref) {
  csv << object << "," << method << "," << format_num(views) << ","
      << format_num(cost) << "," << format_num(coverage) << ","
      << format_num(cd) << "," << format_num(emd) << "," << format_num(dcd_v)
      << "," << views_to_ref << "," << cost_to_ref << "\n";
}

void cmd_eval(const CommonOpts& co, const EvalOpts& eo) {
  SidecarLog log(co.log, "eval");
  PipelineConfig cfg = make_config(co);
  const ViewSpace space = load_viewspace(eo.viewspace);
  adopt_space(cfg, space, co);

  const std::vector<Planner> methods = parse_methods(eo.methods);
  if (eo.objects.empty()) throw ArgumentError("no objects requested");

  Model model;
  bool have_model = false;
  if (std::find(methods.begin(), methods.end(), Planner::predictor) !=
      methods.end()) {
    if (eo.model.empty()) {
      throw ArgumentError("--model is required when evaluating the predictor");
    }
    model = load_model(eo.model);
    if (model.n != space.size()) {
      throw ArgumentError("model view count disagrees with the view space");
    }
    cfg.feature_dim = model.D;
    have_model = true;
  }

  const bool step_metrics = !eo.no_step_metrics;
  std::vector<std::vector<RunRecord>> records(eo.objects.size());
  parallel_for(eo.objects.size(), cfg.jobs, [&](std::size_t oi) {
    const Mesh mesh = load_object(eo.objects[oi]);
    const int id = static_cast<int>(oi);
    const ObjectContext ctx =
        prepare_object(mesh, object_label(eo.objects[oi]), id,
                       draw_object_size(cfg, id), space, cfg);
    for (const Planner m : methods) {
      if (m == Planner::nbv) {
        records[oi].push_back(run_nbv_baseline(ctx, space, eo.init_view,
                                               space.size() - 1, cfg, -1.0,
                                               step_metrics));
      } else {
        records[oi].push_back(
            run_oneshot(ctx, space, m, have_model ? &model : nullptr,
                        eo.init_view, cfg, step_metrics));
      }
    }
  });
  for (const auto& per_object : records) {
    for (const auto& rec : per_object) check_infeasible(rec);
  }

  namespace fs = std::filesystem;
  fs::create_directories(eo.out_dir);

  std::ostringstream runs;
  for (const auto& per_object : records) {
    for (const auto& rec : per_object) {
      runs << record_to_json_line(rec) << "\n";
    }
  }
  write_text((fs::path(eo.out_dir) / "runs.jsonl").string(), runs.str());

  // per-object rows plus mean/std aggregates per method; the *_to_ref
  // columns report where the greedy baseline first matches the exact
  // cover planner's coverage
  std::ostringstream summary;
  summary << "object,method,views,tour_cost,coverage,cd_mm,emd_mm,dcd,"
             "views_to_ref,cost_to_ref\n";
  const auto method_index = [&](Planner p) {
    const auto it = std::find(methods.begin(), methods.end(), p);
    return it == methods.end() ? -1
                               : static_cast<int>(it - methods.begin());
  };
  const int scop_idx = method_index(Planner::scop_oracle);
  struct Agg {
    std::vector<double> views, cost, coverage, cd, emd, dcd_v;
  };
  std::vector<Agg> agg(methods.size());
  for (std::size_t oi = 0; oi < records.size(); ++oi) {
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      const RunRecord& rec = records[oi][mi];
      std::string views_to_ref, cost_to_ref;
      if (methods[mi] == Planner::nbv && scop_idx >= 0) {
        const double ref = records[oi][scop_idx].final_coverage;
        for (std::size_t si = 0; si < rec.steps.size(); ++si) {
          if (rec.steps[si].coverage + 1e-12 < ref) continue;
          views_to_ref = std::to_string(si + 1);
          cost_to_ref = format_num(rec.steps[si].cum_cost);
          break;
        }
      }
      append_summary_row(summary, rec.object, rec.method,
                         static_cast<double>(rec.required_views),
                         rec.tour_cost, rec.final_coverage, rec.final_cd_mm,
                         rec.final_emd_mm, rec.final_dcd, views_to_ref,
                         cost_to_ref);
      agg[mi].views.push_back(static_cast<double>(rec.required_views));
      agg[mi].cost.push_back(rec.tour_cost);
      agg[mi].coverage.push_back(rec.final_coverage);
      agg[mi].cd.push_back(rec.final_cd_mm);
      agg[mi].emd.push_back(rec.final_emd_mm);
      agg[mi].dcd_v.push_back(rec.final_dcd);
    }
  }
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    const auto views = mean_std(agg[mi].views);
    const auto cost = mean_std(agg[mi].cost);
    const auto coverage = mean_std(agg[mi].coverage);
    const auto cd = mean_std(agg[mi].cd);
    const auto emd = mean_std(agg[mi].emd);
    const auto dcd_v = mean_std(agg[mi].dcd_v);
    append_summary_row(summary, "mean", to_string(methods[mi]), views.mean,
                       cost.mean, coverage.mean, cd.mean, emd.mean,
                       dcd_v.mean, "", "");
    append_summary_row(summary, "std", to_string(methods[mi]), views.stddev,
                       cost.stddev, coverage.stddev, cd.stddev, emd.stddev,
                       dcd_v.stddev, "", "");
  }
  write_text((fs::path(eo.out_dir) / "summary.csv").string(), summary.str());

  std::ostringstream sweep;
  sweep << "object,method,budget,views_used,cost_used,coverage,cd_mm,emd_mm,"
           "dcd\n";
  const std::vector<double> budgets = cfg.budget_list();
  for (const auto& per_object : records) {
    for (const auto& rec : per_object) {
      for (const auto& row : sweep_budgets(rec, budgets)) {
        sweep << row.object << "," << row.method << ","
              << format_num(row.budget) << "," << row.views_used << ","
              << format_num(row.cost_used) << "," << format_num(row.coverage);
        if (row.has_metrics) {
          sweep << "," << format_num(row.cd_mm) << ","
                << format_num(row.emd_mm) << "," << format_num(row.dcd_value);
        } else {
          sweep << ",,,";
        }
        sweep << "\n";
      }
    }
  }
  write_text((fs::path(eo.out_dir) / "sweep.csv").string(), sweep.str());

  nlohmann::json j;
  j["objects"] = eo.objects.size();
  nlohmann::json ms = nlohmann::json::array();
  for (const Planner m : methods) ms.push_back(to_string(m));
  j["methods"] = ms;
  j["records"] = records.size() * methods.size();
  j["out_dir"] = eo.out_dir;
  std::cout << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"one-shot view planning toolkit"};
  app.require_subcommand(1);

  CommonOpts vs_common;
  ViewspaceOpts vs_opts;
  CLI::App* vs = app.add_subcommand(
      "viewspace", "build a hemisphere view space and write it as JSON");
  add_common(vs, vs_common);
  vs->add_option("--out", vs_opts.out, "output viewspace JSON file")
      ->required();
  vs->add_option("--iterations", vs_opts.iterations,
                 "repulsion iterations for the layout solver");
  vs->callback([&]() { cmd_viewspace(vs_common, vs_opts); });

  CommonOpts synth_common;
  SynthOpts synth_opts;
  CLI::App* synth = app.add_subcommand(
      "synth", "write a builtin shape as a PLY mesh");
  add_common(synth, synth_common);
  synth
      ->add_option("--shape", synth_opts.shape,
                   "one of: box icosphere ellipsoid cylinder cone capsule")
      ->required();
  synth->add_option("--out", synth_opts.out, "output PLY file")->required();
  synth->add_flag("--ascii", synth_opts.ascii, "write ascii PLY");
  synth->callback([&]() { cmd_synth(synth_common, synth_opts); });

  CommonOpts gen_common;
  GenDatasetOpts gen_opts;
  CLI::App* gen = app.add_subcommand(
      "gen-dataset",
      "capture objects, solve exact covers for sampled view subsets, and "
      "write the labeled dataset");
  add_common(gen, gen_common);
  gen->add_option("--viewspace", gen_opts.viewspace, "viewspace JSON file")
      ->required();
  gen->add_option("--objects", gen_opts.objects,
                  "mesh files or builtin shape names")
      ->required();
  gen->add_option("--out-dir", gen_opts.out_dir, "output dataset directory")
      ->required();
  gen->callback([&]() { cmd_gen_dataset(gen_common, gen_opts); });

  CommonOpts train_common;
  TrainOpts train_opts;
  CLI::App* tr = app.add_subcommand(
      "train", "fit the view-set predictor on a generated dataset");
  add_common(tr, train_common);
  tr->add_option("--dataset", train_opts.dataset, "dataset directory")
      ->required();
  tr->add_option("--model-out", train_opts.model_out, "output model file")
      ->required();
  tr->add_option("--report-out", train_opts.report_out,
                 "per-epoch CSV report (default: <model>.report.csv)");
  tr->callback([&]() { cmd_train(train_common, train_opts); });

  CommonOpts plan_common;
  PlanOpts plan_opts;
  CLI::App* pl = app.add_subcommand(
      "plan", "plan views for one object and write the run record as JSON");
  add_common(pl, plan_common);
  pl->add_option("--viewspace", plan_opts.viewspace, "viewspace JSON file")
      ->required();
  pl->add_option("--object", plan_opts.object,
                 "mesh file or builtin shape name")
      ->required();
  pl->add_option("--planner", plan_opts.planner, "scop, predictor, or nbv");
  pl->add_option("--model", plan_opts.model,
                 "model file (predictor planner only)");
  pl->add_option("--out", plan_opts.out,
                 "output JSON-lines file (default: stdout)");
  pl->add_option("--object-id", plan_opts.object_id,
                 "object id used for per-object seeding");
  pl->add_option("--size", plan_opts.size,
                 "object diameter in meters (default: drawn from the "
                 "configured range)");
  pl->add_option("--init-view", plan_opts.init_view, "starting view id");
  pl->add_option("--steps", plan_opts.steps,
                 "nbv steps (default: all remaining views)");
  pl->add_flag("--step-metrics", plan_opts.step_metrics,
               "compute distance metrics after every step");
  pl->callback([&]() { cmd_plan(plan_common, plan_opts); });

  CommonOpts eval_common;
  EvalOpts eval_opts;
  CLI::App* ev = app.add_subcommand(
      "eval", "run methods over objects and write tables and budget curves");
  add_common(ev, eval_common);
  ev->add_option("--viewspace", eval_opts.viewspace, "viewspace JSON file")
      ->required();
  ev->add_option("--objects", eval_opts.objects,
                 "mesh files or builtin shape names")
      ->required();
  ev->add_option("--methods", eval_opts.methods,
                 "comma or space separated: scop, predictor, nbv");
  ev->add_option("--model", eval_opts.model,
                 "model file (needed when methods include predictor)");
  ev->add_option("--out-dir", eval_opts.out_dir, "output directory")
      ->required();
  ev->add_option("--init-view", eval_opts.init_view, "starting view id");
  ev->add_flag("--no-step-metrics", eval_opts.no_step_metrics,
               "skip per-step distance metrics (budget curves keep only "
               "coverage)");
  ev->callback([&]() { cmd_eval(eval_common, eval_opts); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const InfeasiblePlan& e) {
    std::cout << e.diagnostic << "\n";
    std::cerr << "error: plan infeasible\n";
    return 3;
  } catch (const InternalError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 4;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
