#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "test_util.hpp"
#include "viewplan/error.hpp"
#include "viewplan/predictor.hpp"
#include "viewplan/rng.hpp"

using namespace viewplan;

namespace {

PointCloud cloud_in(const Eigen::AlignedBox3d& volume, int count,
                    std::uint64_t seed) {
  Rng rng(seed);
  PointCloud cloud;
  for (int i = 0; i < count; ++i) {
    Eigen::Vector3d p;
    for (int a = 0; a < 3; ++a) {
      p[a] = rng.uniform(volume.min()[a], volume.max()[a]);
    }
    cloud.points.push_back(p);
  }
  return cloud;
}

ViewMask random_mask(int n, Rng& rng, double density = 0.5) {
  ViewMask mask(n);
  for (int v = 0; v < n; ++v) mask.set(v, rng.uniform() < density);
  return mask;
}

Eigen::VectorXd mask_vector(const ViewMask& mask) {
  Eigen::VectorXd y(mask.n);
  for (int v = 0; v < mask.n; ++v) y[v] = mask.get(v) ? 1.0 : 0.0;
  return y;
}

Model zeroed_model(int n, int D, int hidden) {
  Model m = init_model(n, D, hidden, 1);
  m.w_occ.setZero();
  m.b_occ.setZero();
  m.w_vs.setZero();
  m.b_vs.setZero();
  m.w_out.setZero();
  m.b_out.setZero();
  return m;
}

bool models_equal(const Model& a, const Model& b) {
  return a.n == b.n && a.D == b.D && a.hidden == b.hidden &&
         a.lambda == b.lambda && a.seed == b.seed &&
         (a.w_occ.array() == b.w_occ.array()).all() &&
         (a.b_occ.array() == b.b_occ.array()).all() &&
         (a.w_vs.array() == b.w_vs.array()).all() &&
         (a.b_vs.array() == b.b_vs.array()).all() &&
         (a.w_out.array() == b.w_out.array()).all() &&
         (a.b_out.array() == b.b_out.array()).all();
}

}  // namespace

TEST_CASE("featurize maps a single centered point to one occupied cell") {
  const auto volume = default_feature_volume();
  PointCloud cloud;
  cloud.points.push_back(volume.center());
  const ViewMask state = ViewMask::from_ids(8, {1, 5});
  const FeatureTensor f = featurize(cloud, state, 32, volume);
  CHECK(f.D == 32);
  CHECK(f.cell_count() == 32u * 32u * 32u);
  CHECK(f.occupied_count() == 1);
  CHECK(f.clamped == 0);
  CHECK(f.view_state == state);
  const std::size_t center = (16u * 32u + 16u) * 32u + 16u;
  CHECK(f.occupancy[center] == 1);
}

TEST_CASE("featurize is deterministic for the same cloud") {
  const auto volume = default_feature_volume();
  const PointCloud cloud = cloud_in(volume, 500, 2);
  Rng rng(3);
  const ViewMask state = random_mask(16, rng);
  const FeatureTensor a = featurize(cloud, state, 16, volume);
  const FeatureTensor b = featurize(cloud, state, 16, volume);
  CHECK(a.occupancy == b.occupancy);
  CHECK(a.view_state == b.view_state);
  CHECK(a.clamped == b.clamped);
}

TEST_CASE("featurize occupancy matches a hash set oracle on a cube cloud") {
  const auto volume = default_feature_volume();
  const int D = 32;
  const PointCloud cloud = cloud_in(volume, 15000, 4);
  const FeatureTensor f = featurize(cloud, ViewMask(4), D, volume);
  CHECK(f.clamped == 0);

  std::set<std::array<int, 3>> cells;
  const Eigen::Vector3d lo = volume.min();
  const Eigen::Vector3d hi = volume.max();
  for (const auto& p : cloud.points) {
    std::array<int, 3> c;
    for (int a = 0; a < 3; ++a) {
      const double t = (p[a] - lo[a]) / (hi[a] - lo[a]);
      c[a] = std::clamp(static_cast<int>(std::floor(t * D)), 0, D - 1);
    }
    cells.insert(c);
  }
  CHECK(f.occupied_count() == static_cast<int>(cells.size()));
  bool all_marked = true;
  for (const auto& c : cells) {
    const std::size_t idx =
        (static_cast<std::size_t>(c[2]) * D + c[1]) * D + c[0];
    if (f.occupancy[idx] != 1) all_marked = false;
  }
  CHECK(all_marked);
}

TEST_CASE("featurize clamps outside points onto the boundary and counts them") {
  const auto volume = default_feature_volume();
  const int D = 8;
  PointCloud cloud;
  cloud.points.push_back(volume.center());
  cloud.points.push_back({-0.2, 0.0, 0.075});  // past the x min face
  cloud.points.push_back({0.0, 0.0, 0.4});     // past the z max face
  const FeatureTensor f = featurize(cloud, ViewMask(4), D, volume);
  CHECK(f.clamped == 2);
  const std::size_t x_face = (4u * 8u + 4u) * 8u + 0u;
  const std::size_t z_face = (7u * 8u + 4u) * 8u + 4u;
  CHECK(f.occupancy[x_face] == 1);
  CHECK(f.occupancy[z_face] == 1);

  PointCloud corner;
  corner.points.push_back(volume.max());
  const FeatureTensor g = featurize(corner, ViewMask(4), D, volume);
  CHECK(g.clamped == 0);
  const std::size_t far_corner = (7u * 8u + 7u) * 8u + 7u;
  CHECK(g.occupancy[far_corner] == 1);
}

TEST_CASE("featurize rejects bad arguments") {
  PointCloud cloud;
  cloud.points.push_back(Eigen::Vector3d::Zero());
  CHECK_THROWS_AS(featurize(cloud, ViewMask(4), 0, default_feature_volume()),
                  ArgumentError);
  const Eigen::AlignedBox3d empty(Eigen::Vector3d::Ones(),
                                  Eigen::Vector3d::Zero());
  CHECK_THROWS_AS(featurize(cloud, ViewMask(4), 8, empty), ArgumentError);
}

TEST_CASE("selection loss with unit weight is plain cross entropy") {
  Rng rng(derive_seed(10, "bce"));
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_index(20));
    Eigen::VectorXd pred(n), y(n);
    for (int i = 0; i < n; ++i) {
      pred[i] = rng.uniform(0.02, 0.98);
      y[i] = rng.uniform() < 0.5 ? 1.0 : 0.0;
    }
    const double loss = sc_loss(pred, y, 1.0);
    const double oracle = testutil::mean_bce(pred, y, 1e-7);
    CHECK(loss == doctest::Approx(oracle).epsilon(1e-12));
  }
}

TEST_CASE("perfect predictions cost nearly nothing") {
  Rng rng(derive_seed(11, "perfect"));
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_index(16));
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = rng.uniform() < 0.5 ? 1.0 : 0.0;
    const double loss = sc_loss(y, y, 1.25);
    CHECK(loss >= 0.0);
    CHECK(loss < 3e-7);
  }
}

TEST_CASE("loss gradient matches central differences") {
  Rng rng(derive_seed(12, "gradcheck"));
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_index(14));
    Eigen::VectorXd pred(n), y(n);
    for (int i = 0; i < n; ++i) {
      pred[i] = rng.uniform(0.05, 0.95);
      y[i] = rng.uniform() < 0.5 ? 1.0 : 0.0;
    }
    const Eigen::VectorXd grad = sc_loss_grad(pred, y, 1.25);
    const double h = 1e-6;
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd up = pred, down = pred;
      up[i] += h;
      down[i] -= h;
      const double numeric =
          (sc_loss(up, y, 1.25) - sc_loss(down, y, 1.25)) / (2.0 * h);
      const double rel =
          std::abs(grad[i] - numeric) / std::max(std::abs(numeric), 1e-10);
      worst = std::max(worst, rel);
    }
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("loss is non-negative and grows with the positive weight") {
  Rng rng(derive_seed(13, "weights"));
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_index(12));
    Eigen::VectorXd pred(n), y(n);
    for (int i = 0; i < n; ++i) {
      pred[i] = rng.uniform(0.05, 0.95);
      y[i] = rng.uniform() < 0.5 ? 1.0 : 0.0;
    }
    const double l075 = sc_loss(pred, y, 0.75);
    const double l125 = sc_loss(pred, y, 1.25);
    const double l200 = sc_loss(pred, y, 2.0);
    CHECK(l075 >= 0.0);
    CHECK(l125 >= l075 - 1e-12);
    CHECK(l200 >= l125 - 1e-12);
  }
}

TEST_CASE("loss rejects mismatched or empty inputs") {
  const Eigen::VectorXd a = Eigen::VectorXd::Constant(3, 0.5);
  const Eigen::VectorXd b = Eigen::VectorXd::Constant(4, 1.0);
  CHECK_THROWS_AS(sc_loss(a, b, 1.0), ArgumentError);
  CHECK_THROWS_AS(sc_loss_grad(a, b, 1.0), ArgumentError);
  const Eigen::VectorXd empty;
  CHECK_THROWS_AS(sc_loss(empty, empty, 1.0), ArgumentError);
}

TEST_CASE("zero weights leave every view at exactly one half") {
  const Model m = zeroed_model(12, 4, 8);
  Rng rng(14);
  FeatureTensor f;
  f.D = 4;
  f.occupancy.assign(64, 0);
  for (int i = 0; i < 10; ++i) f.occupancy[rng.uniform_index(64)] = 1;
  f.view_state = random_mask(12, rng);
  const Eigen::VectorXd probs = forward(m, f);
  for (int v = 0; v < 12; ++v) CHECK(probs[v] == 0.5);
  CHECK(predict(m, f).count() == 0);
}

TEST_CASE("a strong logit on one view selects exactly that view") {
  Model m = zeroed_model(8, 4, 8);
  m.b_out[3] = 10.0;
  FeatureTensor f;
  f.D = 4;
  f.occupancy.assign(64, 0);
  f.view_state = ViewMask(8);
  const Eigen::VectorXd probs = forward(m, f);
  CHECK(probs[3] == doctest::Approx(1.0 / (1.0 + std::exp(-10.0))));
  CHECK(predict(m, f).ids() == std::vector<int>{3});
}

TEST_CASE("forward is a pure function with probabilities inside (0,1)") {
  const Model m = init_model(16, 8, 32, 7);
  Rng rng(15);
  FeatureTensor f;
  f.D = 8;
  f.occupancy.assign(512, 0);
  for (int i = 0; i < 40; ++i) f.occupancy[rng.uniform_index(512)] = 1;
  f.view_state = random_mask(16, rng);
  const Eigen::VectorXd a = forward(m, f);
  const Eigen::VectorXd b = forward(m, f);
  const bool identical = (a.array() == b.array()).all();
  CHECK(identical);
  bool open_interval = true;
  for (int v = 0; v < 16; ++v) {
    if (!(a[v] > 0.0 && a[v] < 1.0)) open_interval = false;
  }
  CHECK(open_interval);
  const ViewMask mask = predict(m, f);
  bool thresholded = true;
  for (int v = 0; v < 16; ++v) {
    if (mask.get(v) != (a[v] > 0.5)) thresholded = false;
  }
  CHECK(thresholded);
}

TEST_CASE("forward rejects mismatched dimensions") {
  const Model m = init_model(16, 8, 32, 7);
  FeatureTensor wrong_d;
  wrong_d.D = 4;
  wrong_d.occupancy.assign(64, 0);
  wrong_d.view_state = ViewMask(16);
  CHECK_THROWS_AS(forward(m, wrong_d), ArgumentError);
  FeatureTensor wrong_n;
  wrong_n.D = 8;
  wrong_n.occupancy.assign(512, 0);
  wrong_n.view_state = ViewMask(8);
  CHECK_THROWS_AS(forward(m, wrong_n), ArgumentError);
}

TEST_CASE("fresh models are finite, sized to the data, and seeded") {
  const Model m = init_model(16, 8, 32, 5);
  CHECK(m.w_occ.rows() == 32);
  CHECK(m.w_occ.cols() == 512);
  CHECK(m.b_occ.size() == 32);
  CHECK(m.w_vs.rows() == 32);
  CHECK(m.w_vs.cols() == 16);
  CHECK(m.b_vs.size() == 32);
  CHECK(m.w_out.rows() == 16);
  CHECK(m.w_out.cols() == 32);
  CHECK(m.b_out.size() == 16);
  const bool finite = m.w_occ.allFinite() && m.w_vs.allFinite() &&
                      m.w_out.allFinite();
  CHECK(finite);
  const Model again = init_model(16, 8, 32, 5);
  CHECK(models_equal(m, again));
  const Model other = init_model(16, 8, 32, 6);
  CHECK_FALSE(models_equal(m, other));
  CHECK_THROWS_AS(init_model(0, 8, 32, 5), ArgumentError);
  CHECK_THROWS_AS(init_model(16, 0, 32, 5), ArgumentError);
  CHECK_THROWS_AS(init_model(16, 8, 0, 5), ArgumentError);
}

TEST_CASE("training fits one repeated sample") {
  const Dataset one = testutil::toy_recognition_dataset(1, 1, 8, 8, 9);
  Dataset repeated;
  repeated.n = one.n;
  repeated.D = one.D;
  for (int i = 0; i < 20; ++i) repeated.samples.push_back(one.samples[0]);

  TrainOptions opt;
  opt.lambda = 1.25;
  opt.epochs = 60;
  opt.learning_rate = 0.5;
  opt.hidden = 16;
  opt.seed = 3;
  TrainReport report;
  const Model model = train(repeated, opt, &report);

  REQUIRE(report.epochs.size() == 60u);
  bool monotone = true;
  for (std::size_t i = 1; i < 50; ++i) {
    if (report.epochs[i].train_loss > report.epochs[i - 1].train_loss + 1e-6) {
      monotone = false;
    }
  }
  CHECK(monotone);
  CHECK(report.final.train_loss < report.epochs[0].train_loss / 10.0);
  CHECK(predict(model, one.samples[0].features) == one.samples[0].label);
}

TEST_CASE("a heavier positive weight trades precision for recall") {
  const Dataset ds = testutil::toy_recognition_dataset(6, 30, 16, 8, 3);
  auto run = [&ds](double lambda) {
    TrainOptions opt;
    opt.lambda = lambda;
    opt.epochs = 40;
    opt.learning_rate = 0.3;
    opt.hidden = 32;
    opt.seed = 3;
    TrainReport report;
    train(ds, opt, &report);
    return report.final;
  };
  const EpochStats low = run(0.75);
  const EpochStats mid = run(1.25);
  const EpochStats high = run(2.0);
  CHECK(mid.recall >= low.recall);
  CHECK(high.recall >= mid.recall);
  CHECK(low.precision > high.precision);
}

TEST_CASE("training reports are bit-identical for a fixed seed") {
  const Dataset ds = testutil::toy_recognition_dataset(3, 20, 12, 6, 4);
  TrainOptions opt;
  opt.lambda = 1.25;
  opt.epochs = 10;
  opt.learning_rate = 0.2;
  opt.hidden = 16;
  opt.seed = 11;

  TrainReport a, b;
  const Model ma = train(ds, opt, &a);
  const Model mb = train(ds, opt, &b);
  REQUIRE(a.epochs.size() == b.epochs.size());
  for (std::size_t i = 0; i < a.epochs.size(); ++i) {
    CHECK(a.epochs[i].epoch == b.epochs[i].epoch);
    CHECK(a.epochs[i].train_loss == b.epochs[i].train_loss);
    CHECK(a.epochs[i].val_loss == b.epochs[i].val_loss);
    CHECK(a.epochs[i].precision == b.epochs[i].precision);
    CHECK(a.epochs[i].recall == b.epochs[i].recall);
    CHECK(a.epochs[i].f1 == b.epochs[i].f1);
  }
  CHECK(a.best_f1_epoch == b.best_f1_epoch);
  CHECK(train_report_to_json(a) == train_report_to_json(b));
  CHECK(models_equal(ma, mb));

  opt.seed = 12;
  TrainReport c;
  train(ds, opt, &c);
  CHECK(train_report_to_json(a) != train_report_to_json(c));
}

TEST_CASE("epoch metrics stay inside their ranges") {
  const Dataset ds = testutil::toy_recognition_dataset(3, 20, 12, 6, 4);
  TrainOptions opt;
  opt.lambda = 1.25;
  opt.epochs = 8;
  opt.learning_rate = 0.2;
  opt.hidden = 16;
  opt.seed = 11;
  TrainReport report;
  train(ds, opt, &report);

  double best_f1 = -1.0;
  int best_epoch = 0;
  for (std::size_t i = 0; i < report.epochs.size(); ++i) {
    const EpochStats& e = report.epochs[i];
    CHECK(e.epoch == static_cast<int>(i));
    CHECK(e.train_loss >= 0.0);
    CHECK(e.val_loss >= 0.0);
    CHECK(e.precision >= 0.0);
    CHECK(e.precision <= 1.0);
    CHECK(e.recall >= 0.0);
    CHECK(e.recall <= 1.0);
    if (e.precision + e.recall > 0.0) {
      const double harmonic =
          2.0 * e.precision * e.recall / (e.precision + e.recall);
      CHECK(std::abs(e.f1 - harmonic) <= 1e-9);
    } else {
      CHECK(e.f1 == 0.0);
    }
    if (e.f1 > best_f1) {
      best_f1 = e.f1;
      best_epoch = e.epoch;
    }
  }
  CHECK(report.best_f1_epoch == best_epoch);
  CHECK(report.final.epoch == report.epochs.back().epoch);
  CHECK(report.final.f1 == report.epochs.back().f1);

  const nlohmann::json j = nlohmann::json::parse(train_report_to_json(report));
  CHECK(j["epochs"].size() == report.epochs.size());
  CHECK(j["best_f1_epoch"].get<int>() == report.best_f1_epoch);
  CHECK(j["final"]["f1"].get<double>() == report.final.f1);
}

TEST_CASE("training rejects bad options") {
  const Dataset ds = testutil::toy_recognition_dataset(2, 10, 8, 6, 4);
  TrainOptions opt;
  Dataset empty;
  empty.n = 8;
  empty.D = 6;
  CHECK_THROWS_AS(train(empty, opt), ArgumentError);
  opt.epochs = 0;
  CHECK_THROWS_AS(train(ds, opt), ArgumentError);
  opt.epochs = 2;
  opt.batch_size = 0;
  CHECK_THROWS_AS(train(ds, opt), ArgumentError);
  opt.batch_size = 32;
  opt.val_fraction = 1.0;
  CHECK_THROWS_AS(train(ds, opt), ArgumentError);
  opt.val_fraction = -0.1;
  CHECK_THROWS_AS(train(ds, opt), ArgumentError);
  opt.val_fraction = 0.2;

  Dataset mismatched = ds;
  mismatched.D = 7;
  CHECK_THROWS_AS(train(mismatched, opt), ArgumentError);
}

TEST_CASE("models survive a round trip to disk") {
  testutil::TempDir dir("viewplan-model");
  Model m = init_model(16, 8, 32, 5);
  m.lambda = 2.0;
  const std::string path = dir.file("model.bin");
  save_model(m, path);
  const Model loaded = load_model(path);
  CHECK(models_equal(m, loaded));

  CHECK_THROWS_AS(load_model(dir.file("absent.bin")), Error);
  testutil::write_file(dir.file("junk.bin"), "this is not a model file");
  CHECK_THROWS_AS(load_model(dir.file("junk.bin")), FormatError);

  const std::string bytes = testutil::read_file(path);
  testutil::write_file(dir.file("short.bin"), bytes.substr(0, 60));
  CHECK_THROWS_AS(load_model(dir.file("short.bin")), FormatError);

  std::string versioned = bytes;
  versioned[4] = 2;
  testutil::write_file(dir.file("future.bin"), versioned);
  CHECK_THROWS_AS(load_model(dir.file("future.bin")), FormatError);
}

TEST_CASE("datasets survive a round trip to disk") {
  const auto volume = default_feature_volume();
  Rng rng(16);
  Dataset ds;
  ds.n = 8;
  ds.D = 8;
  for (int i = 0; i < 3; ++i) {
    Sample s;
    PointCloud cloud = cloud_in(volume, 200 + 50 * i, 20 + i);
    if (i == 1) cloud.points.push_back({0.5, 0.5, 0.5});  // clamps
    s.features = featurize(cloud, random_mask(8, rng), 8, volume);
    s.label = random_mask(8, rng);
    s.object_id = i;
    ds.samples.push_back(std::move(s));
  }

  testutil::TempDir dir("viewplan-dataset");
  const std::string path = dir.file("data.bin");
  save_dataset(ds, path);
  const Dataset loaded = load_dataset(path);
  CHECK(loaded.n == ds.n);
  CHECK(loaded.D == ds.D);
  REQUIRE(loaded.samples.size() == ds.samples.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    CHECK(loaded.samples[i].object_id == ds.samples[i].object_id);
    CHECK(loaded.samples[i].features.clamped == ds.samples[i].features.clamped);
    CHECK(loaded.samples[i].features.D == ds.samples[i].features.D);
    CHECK(loaded.samples[i].features.view_state ==
          ds.samples[i].features.view_state);
    CHECK(loaded.samples[i].label == ds.samples[i].label);
    CHECK(loaded.samples[i].features.occupancy ==
          ds.samples[i].features.occupancy);
  }
  CHECK(loaded.samples[1].features.clamped == 1);

  CHECK_THROWS_AS(load_dataset(dir.file("absent.bin")), Error);
  testutil::write_file(dir.file("junk.bin"), "not a dataset");
  CHECK_THROWS_AS(load_dataset(dir.file("junk.bin")), FormatError);

  Dataset bad = ds;
  bad.samples[0].label = ViewMask(4);
  CHECK_THROWS_AS(save_dataset(bad, dir.file("bad.bin")), ArgumentError);
}
