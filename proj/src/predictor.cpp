#include "viewplan/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "viewplan/binio.hpp"
#include "viewplan/error.hpp"
#include "viewplan/rng.hpp"

namespace viewplan {

Eigen::AlignedBox3d default_feature_volume() {
  return Eigen::AlignedBox3d(Eigen::Vector3d(-0.075, -0.075, 0.0),
                             Eigen::Vector3d(0.075, 0.075, 0.15));
}

int FeatureTensor::occupied_count() const {
  int c = 0;
  for (std::uint8_t v : occupancy) c += v != 0;
  return c;
}

FeatureTensor featurize(const PointCloud& cloud, const ViewMask& view_state,
                        int D, const Eigen::AlignedBox3d& volume) {
  if (D < 1) throw ArgumentError("feature resolution must be at least 1");
  if (volume.isEmpty()) throw ArgumentError("feature volume is empty");
  FeatureTensor f;
  f.D = D;
  f.occupancy.assign(static_cast<std::size_t>(D) * D * D, 0);
  f.view_state = view_state;
  const Eigen::Vector3d lo = volume.min();
  const Eigen::Vector3d cell = volume.diagonal() / D;
  for (const auto& p : cloud.points) {
    bool clamped = false;
    int idx[3];
    for (int a = 0; a < 3; ++a) {
      int c = static_cast<int>(std::floor((p[a] - lo[a]) / cell[a]));
      if (c < 0) {
        c = 0;
        clamped = true;
      } else if (c >= D) {
        // the far face itself is not outside
        if (p[a] - lo[a] > cell[a] * D) clamped = true;
        c = D - 1;
      }
      idx[a] = c;
    }
    if (clamped) ++f.clamped;
    f.occupancy[(static_cast<std::size_t>(idx[2]) * D + idx[1]) * D + idx[0]] = 1;
  }
  if (f.clamped * 100 > static_cast<int>(cloud.points.size())) {
    std::cerr << "featurize: " << f.clamped << " of " << cloud.points.size()
              << " points fell outside the feature volume\n";
  }
  return f;
}

namespace {

void write_bits(std::ostream& os, const std::vector<std::uint8_t>& flags) {
  std::uint8_t byte = 0;
  int fill = 0;
  for (std::uint8_t f : flags) {
    byte |= static_cast<std::uint8_t>((f ? 1 : 0) << fill);
    if (++fill == 8) {
      binio::write<std::uint8_t>(os, byte);
      byte = 0;
      fill = 0;
    }
  }
  if (fill) binio::write<std::uint8_t>(os, byte);
}

std::vector<std::uint8_t> read_bits(std::istream& is, std::size_t count,
                                    const std::string& what) {
  std::vector<std::uint8_t> flags(count, 0);
  std::uint8_t byte = 0;
  for (std::size_t i = 0; i < count; ++i) {
    if (i % 8 == 0) byte = binio::read<std::uint8_t>(is, what);
    flags[i] = (byte >> (i % 8)) & 1;
  }
  return flags;
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  binio::write_magic(out, "VPDS");
  binio::write<std::uint32_t>(out, 1);
  binio::write<std::uint32_t>(out, static_cast<std::uint32_t>(dataset.n));
  binio::write<std::uint32_t>(out, static_cast<std::uint32_t>(dataset.D));
  binio::write<std::uint64_t>(out, dataset.samples.size());
  for (const auto& s : dataset.samples) {
    if (s.features.D != dataset.D || s.features.view_state.n != dataset.n ||
        s.label.n != dataset.n) {
      throw ArgumentError("dataset sample does not match dataset dimensions");
    }
    binio::write<std::uint32_t>(out, static_cast<std::uint32_t>(s.object_id));
    binio::write<std::uint32_t>(out, static_cast<std::uint32_t>(s.features.clamped));
    write_bits(out, s.features.view_state.bits);
    write_bits(out, s.label.bits);
    write_bits(out, s.features.occupancy);
  }
  if (!out) throw Error("write failed for '" + path + "'");
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  binio::expect_magic(in, "VPDS", path);
  const auto version = binio::read<std::uint32_t>(in, path);
  if (version != 1) {
    throw FormatError(path + ": " + "unsupported dataset version " + std::to_string(version));
  }
  Dataset ds;
  ds.n = static_cast<int>(binio::read<std::uint32_t>(in, path));
  ds.D = static_cast<int>(binio::read<std::uint32_t>(in, path));
  if (ds.n < 1 || ds.n > 0xFFFF || ds.D < 1 || ds.D > 512) {
    throw FormatError(path + ": " + "implausible dataset dimensions");
  }
  const auto count = binio::read<std::uint64_t>(in, path);
  const std::size_t cells = static_cast<std::size_t>(ds.D) * ds.D * ds.D;
  ds.samples.resize(count);
  for (auto& s : ds.samples) {
    s.object_id = static_cast<int>(binio::read<std::uint32_t>(in, path));
    s.features.clamped = static_cast<int>(binio::read<std::uint32_t>(in, path));
    s.features.D = ds.D;
    s.features.view_state.n = ds.n;
    s.features.view_state.bits =
        read_bits(in, static_cast<std::size_t>(ds.n), path);
    s.label.n = ds.n;
    s.label.bits = read_bits(in, static_cast<std::size_t>(ds.n), path);
    s.features.occupancy = read_bits(in, cells, path);
  }
  return ds;
}

Model init_model(int n, int D, int hidden, std::uint64_t seed) {
  if (n < 1 || D < 1 || hidden < 1) {
    throw ArgumentError("model dimensions must be positive");
  }
  Model m;
  m.n = n;
  m.D = D;
  m.hidden = hidden;
  m.seed = seed;
  Rng rng(derive_seed(seed, "model_init", 0));
  const std::size_t cells = static_cast<std::size_t>(D) * D * D;
  auto fill = [&rng](Eigen::MatrixXd& w, double fan_in) {
    const double bound = std::sqrt(6.0 / fan_in);
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) {
        w(r, c) = rng.uniform(-bound, bound);
      }
    }
  };
  m.w_occ.resize(hidden, static_cast<Eigen::Index>(cells));
  fill(m.w_occ, static_cast<double>(cells));
  m.b_occ = Eigen::VectorXd::Zero(hidden);
  m.w_vs.resize(hidden, n);
  fill(m.w_vs, n);
  m.b_vs = Eigen::VectorXd::Zero(hidden);
  m.w_out.resize(n, hidden);
  fill(m.w_out, hidden);
  m.b_out = Eigen::VectorXd::Zero(n);
  return m;
}

namespace {

template <typename M>
void write_matrix(std::ostream& os, const M& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      binio::write<double>(os, m(r, c));
    }
  }
}

template <typename M>
void read_matrix(std::istream& is, M& m, const std::string& what) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = binio::read<double>(is, what);
    }
  }
}

}  // namespace

void save_model(const Model& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  binio::write_magic(out, "VPMD");
  binio::write<std::uint32_t>(out, 1);
  binio::write<std::uint32_t>(out, static_cast<std::uint32_t>(model.n));
  binio::write<std::uint32_t>(out, static_cast<std::uint32_t>(model.D));
  binio::write<std::uint32_t>(out, static_cast<std::uint32_t>(model.hidden));
  binio::write<double>(out, model.lambda);
  binio::write<std::uint64_t>(out, model.seed);
  write_matrix(out, model.w_occ);
  write_matrix(out, model.b_occ);
  write_matrix(out, model.w_vs);
  write_matrix(out, model.b_vs);
  write_matrix(out, model.w_out);
  write_matrix(out, model.b_out);
  if (!out) throw Error("write failed for '" + path + "'");
}

Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  binio::expect_magic(in, "VPMD", path);
  const auto version = binio::read<std::uint32_t>(in, path);
  if (version != 1) {
    throw FormatError(path + ": " + "unsupported model version " + std::to_string(version));
  }
  Model m;
  m.n = static_cast<int>(binio::read<std::uint32_t>(in, path));
  m.D = static_cast<int>(binio::read<std::uint32_t>(in, path));
  m.hidden = static_cast<int>(binio::read<std::uint32_t>(in, path));
  if (m.n < 1 || m.n > 0xFFFF || m.D < 1 || m.D > 512 || m.hidden < 1 ||
      m.hidden > (1 << 20)) {
    throw FormatError(path + ": " + "implausible model dimensions");
  }
  m.lambda = binio::read<double>(in, path);
  m.seed = binio::read<std::uint64_t>(in, path);
  const std::size_t cells = static_cast<std::size_t>(m.D) * m.D * m.D;
  m.w_occ.resize(m.hidden, static_cast<Eigen::Index>(cells));
  m.b_occ.resize(m.hidden);
  m.w_vs.resize(m.hidden, m.n);
  m.b_vs.resize(m.hidden);
  m.w_out.resize(m.n, m.hidden);
  m.b_out.resize(m.n);
  read_matrix(in, m.w_occ, path);
  read_matrix(in, m.b_occ, path);
  read_matrix(in, m.w_vs, path);
  read_matrix(in, m.b_vs, path);
  read_matrix(in, m.w_out, path);
  read_matrix(in, m.b_out, path);
  return m;
}

namespace {

void check_features(const Model& model, const FeatureTensor& f) {
  if (f.D != model.D) {
    throw ArgumentError("feature resolution " + std::to_string(f.D) +
                        " does not match the model's " + std::to_string(model.D));
  }
  if (f.view_state.n != model.n) {
    throw ArgumentError("view state size does not match the model");
  }
}

// Hidden pre-activations; the occupancy branch sums columns of w_occ over
// occupied cells instead of multiplying by the dense binary vector.
void hidden_preacts(const Model& model, const FeatureTensor& f,
                    Eigen::VectorXd& z_occ, Eigen::VectorXd& z_vs) {
  z_occ = model.b_occ;
  for (std::size_t c = 0; c < f.occupancy.size(); ++c) {
    if (f.occupancy[c]) z_occ += model.w_occ.col(static_cast<Eigen::Index>(c));
  }
  z_vs = model.b_vs;
  for (int v = 0; v < model.n; ++v) {
    if (f.view_state.get(v)) z_vs += model.w_vs.col(v);
  }
}

Eigen::VectorXd sigmoid(const Eigen::VectorXd& x) {
  return 1.0 / (1.0 + (-x.array()).exp());
}

}  // namespace

Eigen::VectorXd forward(const Model& model, const FeatureTensor& features) {
  check_features(model, features);
  Eigen::VectorXd z_occ, z_vs;
  hidden_preacts(model, features, z_occ, z_vs);
  const Eigen::VectorXd h = z_occ.cwiseMax(0.0) + z_vs.cwiseMax(0.0);
  return sigmoid(model.w_out * h + model.b_out);
}

double sc_loss(const Eigen::VectorXd& pred, const Eigen::VectorXd& target,
               double lambda) {
  if (pred.size() != target.size()) {
    throw ArgumentError("loss inputs must have equal length");
  }
  if (pred.size() == 0) throw ArgumentError("loss inputs are empty");
  const double eps = 1e-7;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    const double p = std::clamp(pred[i], eps, 1.0 - eps);
    const double y = target[i];
    const double ce = y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    acc += ((1.0 - y) + lambda * y) * ce;
  }
  return -acc / static_cast<double>(pred.size());
}

Eigen::VectorXd sc_loss_grad(const Eigen::VectorXd& pred,
                             const Eigen::VectorXd& target, double lambda) {
  if (pred.size() != target.size()) {
    throw ArgumentError("loss inputs must have equal length");
  }
  const double eps = 1e-7;
  const double n = static_cast<double>(pred.size());
  Eigen::VectorXd grad(pred.size());
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    const double p = std::clamp(pred[i], eps, 1.0 - eps);
    const double y = target[i];
    // d/dp of -[(1-y) + lambda*y] * [y log p + (1-y) log(1-p)] / n
    grad[i] = ((1.0 - y) + lambda * y) * ((1.0 - y) / (1.0 - p) - y / p) / n;
  }
  return grad;
}

ViewMask predict(const Model& model, const FeatureTensor& features) {
  const Eigen::VectorXd probs = forward(model, features);
  ViewMask mask(model.n);
  for (int v = 0; v < model.n; ++v) mask.set(v, probs[v] > 0.5);
  return mask;
}

namespace {

Eigen::VectorXd label_vector(const ViewMask& mask) {
  Eigen::VectorXd y(mask.n);
  for (int v = 0; v < mask.n; ++v) y[v] = mask.get(v) ? 1.0 : 0.0;
  return y;
}

struct EvalCounts {
  double loss_sum = 0.0;
  long tp = 0, fp = 0, fn = 0;
  std::size_t count = 0;
};

void eval_sample(const Model& model, const Sample& s, double lambda,
                 EvalCounts& out) {
  const Eigen::VectorXd p = forward(model, s.features);
  out.loss_sum += sc_loss(p, label_vector(s.label), lambda);
  for (int v = 0; v < model.n; ++v) {
    const bool hat = p[v] > 0.5;
    const bool ref = s.label.get(v);
    if (hat && ref) ++out.tp;
    else if (hat && !ref) ++out.fp;
    else if (!hat && ref) ++out.fn;
  }
  ++out.count;
}

}  // namespace

Model train(const Dataset& dataset, const TrainOptions& options,
            TrainReport* report) {
  if (dataset.samples.empty()) throw ArgumentError("training dataset is empty");
  if (options.epochs < 1) throw ArgumentError("epoch count must be positive");
  if (options.batch_size < 1) throw ArgumentError("batch size must be positive");
  if (options.val_fraction < 0.0 || options.val_fraction >= 1.0) {
    throw ArgumentError("validation fraction must lie in [0, 1)");
  }

  std::vector<std::size_t> order(dataset.samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng split_rng(derive_seed(options.seed, "train_split", 0));
  split_rng.shuffle(order);
  const std::size_t val_count = static_cast<std::size_t>(
      std::floor(options.val_fraction * static_cast<double>(order.size())));
  const std::size_t train_count = order.size() - val_count;
  if (train_count == 0) throw ArgumentError("no training samples after split");
  std::vector<std::size_t> train_idx(order.begin(),
                                     order.begin() + static_cast<long>(train_count));
  std::vector<std::size_t> val_idx(order.begin() + static_cast<long>(train_count),
                                   order.end());

  Model model = init_model(dataset.n, dataset.D, options.hidden, options.seed);
  model.lambda = options.lambda;

  const std::size_t cells = static_cast<std::size_t>(dataset.D) * dataset.D * dataset.D;
  Eigen::VectorXd g_b_occ(options.hidden), g_b_vs(options.hidden);
  Eigen::MatrixXd g_w_vs(options.hidden, dataset.n);
  Eigen::MatrixXd g_w_out(dataset.n, options.hidden);
  Eigen::VectorXd g_b_out(dataset.n);
  std::unordered_map<std::size_t, Eigen::VectorXd> g_w_occ_cols;

  TrainReport local_report;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    Rng epoch_rng(derive_seed(options.seed, "train_epoch",
                              static_cast<std::uint64_t>(epoch)));
    std::vector<std::size_t> perm = train_idx;
    epoch_rng.shuffle(perm);

    double train_loss_sum = 0.0;
    for (std::size_t begin = 0; begin < perm.size();
         begin += static_cast<std::size_t>(options.batch_size)) {
      const std::size_t end = std::min(
          perm.size(), begin + static_cast<std::size_t>(options.batch_size));
      const double inv_batch = 1.0 / static_cast<double>(end - begin);
      g_b_occ.setZero();
      g_b_vs.setZero();
      g_w_vs.setZero();
      g_w_out.setZero();
      g_b_out.setZero();
      g_w_occ_cols.clear();

      for (std::size_t s = begin; s < end; ++s) {
        const Sample& sample = dataset.samples[perm[s]];
        if (sample.features.D != dataset.D || sample.label.n != dataset.n) {
          throw ArgumentError("dataset sample does not match dataset dimensions");
        }
        Eigen::VectorXd z_occ, z_vs;
        hidden_preacts(model, sample.features, z_occ, z_vs);
        const Eigen::VectorXd a_occ = z_occ.cwiseMax(0.0);
        const Eigen::VectorXd a_vs = z_vs.cwiseMax(0.0);
        const Eigen::VectorXd h = a_occ + a_vs;
        const Eigen::VectorXd p = sigmoid(model.w_out * h + model.b_out);
        const Eigen::VectorXd y = label_vector(sample.label);
        train_loss_sum += sc_loss(p, y, options.lambda);

        // d(loss)/d(logit): lambda-weighted binary cross entropy
        Eigen::VectorXd d_logit(dataset.n);
        const double inv_n = 1.0 / static_cast<double>(dataset.n);
        for (int v = 0; v < dataset.n; ++v) {
          d_logit[v] = y[v] > 0.5 ? -options.lambda * (1.0 - p[v]) * inv_n
                                  : p[v] * inv_n;
        }
        g_w_out.noalias() += d_logit * h.transpose();
        g_b_out += d_logit;
        const Eigen::VectorXd d_h = model.w_out.transpose() * d_logit;
        const Eigen::VectorXd d_occ =
            (z_occ.array() > 0.0).select(d_h, Eigen::VectorXd::Zero(options.hidden));
        const Eigen::VectorXd d_vs =
            (z_vs.array() > 0.0).select(d_h, Eigen::VectorXd::Zero(options.hidden));
        g_b_occ += d_occ;
        g_b_vs += d_vs;
        for (int v = 0; v < dataset.n; ++v) {
          if (sample.features.view_state.get(v)) g_w_vs.col(v) += d_vs;
        }
        for (std::size_t c = 0; c < cells; ++c) {
          if (!sample.features.occupancy[c]) continue;
          auto [it, inserted] = g_w_occ_cols.try_emplace(c, d_occ);
          if (!inserted) it->second += d_occ;
        }
      }

      const double step = options.learning_rate * inv_batch;
      model.b_occ -= step * g_b_occ;
      model.b_vs -= step * g_b_vs;
      model.w_vs -= step * g_w_vs;
      model.w_out -= step * g_w_out;
      model.b_out -= step * g_b_out;
      for (const auto& [c, g] : g_w_occ_cols) {
        model.w_occ.col(static_cast<Eigen::Index>(c)) -= step * g;
      }
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = train_loss_sum / static_cast<double>(perm.size());
    EvalCounts val;
    for (std::size_t i : val_idx) {
      eval_sample(model, dataset.samples[i], options.lambda, val);
    }
    if (val.count > 0) {
      stats.val_loss = val.loss_sum / static_cast<double>(val.count);
      stats.precision =
          val.tp + val.fp > 0 ? static_cast<double>(val.tp) / (val.tp + val.fp) : 0.0;
      stats.recall =
          val.tp + val.fn > 0 ? static_cast<double>(val.tp) / (val.tp + val.fn) : 0.0;
      stats.f1 = stats.precision + stats.recall > 0.0
                     ? 2.0 * stats.precision * stats.recall /
                           (stats.precision + stats.recall)
                     : 0.0;
    }
    local_report.epochs.push_back(stats);
    if (stats.f1 > local_report.epochs[local_report.best_f1_epoch].f1) {
      local_report.best_f1_epoch = epoch;
    }
  }
  local_report.final = local_report.epochs.back();
  if (report) *report = local_report;
  return model;
}

std::string train_report_to_json(const TrainReport& report) {
  nlohmann::json j;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : report.epochs) {
    rows.push_back({{"epoch", e.epoch},
                    {"train_loss", e.train_loss},
                    {"val_loss", e.val_loss},
                    {"precision", e.precision},
                    {"recall", e.recall},
                    {"f1", e.f1}});
  }
  j["epochs"] = rows;
  j["best_f1_epoch"] = report.best_f1_epoch;
  j["final"] = {{"epoch", report.final.epoch},
                {"train_loss", report.final.train_loss},
                {"val_loss", report.final.val_loss},
                {"precision", report.final.precision},
                {"recall", report.final.recall},
                {"f1", report.final.f1}};
  return j.dump(2) + "\n";
}

}  // namespace viewplan
