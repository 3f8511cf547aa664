#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "viewplan/covering.hpp"
#include "viewplan/geometry.hpp"

namespace viewplan {

// Cubic feature volume the network sees, fixed across a dataset.
Eigen::AlignedBox3d default_feature_volume();

struct FeatureTensor {
  int D = 0;                           // cells per axis
  std::vector<std::uint8_t> occupancy; // D*D*D cells, x fastest
  ViewMask view_state;                 // views already visited
  int clamped = 0;                     // points pushed back into the volume

  std::size_t cell_count() const { return occupancy.size(); }
  int occupied_count() const;
};

// Binary occupancy of `cloud` over `volume` at D cells per axis. Points
// outside the volume are clamped onto the boundary cells and counted.
FeatureTensor featurize(const PointCloud& cloud, const ViewMask& view_state,
                        int D, const Eigen::AlignedBox3d& volume);

struct Sample {
  FeatureTensor features;
  ViewMask label;
  int object_id = 0;
};

struct Dataset {
  int n = 0;  // views per sample
  int D = 0;
  std::vector<Sample> samples;
};

void save_dataset(const Dataset& dataset, const std::string& path);
Dataset load_dataset(const std::string& path);

// Two-branch scorer: occupancy and view-state embeddings are summed, then
// mapped to one logit per candidate view.
struct Model {
  int n = 0;
  int D = 0;
  int hidden = 0;
  double lambda = 1.25;
  std::uint64_t seed = 0;
  Eigen::MatrixXd w_occ;  // hidden x D^3
  Eigen::VectorXd b_occ;
  Eigen::MatrixXd w_vs;   // hidden x n
  Eigen::VectorXd b_vs;
  Eigen::MatrixXd w_out;  // n x hidden
  Eigen::VectorXd b_out;
};

Model init_model(int n, int D, int hidden, std::uint64_t seed);
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

// Per-view selection probabilities.
Eigen::VectorXd forward(const Model& model, const FeatureTensor& features);

// Mean per-view cross entropy with positives scaled by lambda:
//   -(1/n) * sum_i [(1 - y_i) + lambda * y_i] * ce_i
// with ce_i = y_i*log(p_i) + (1-y_i)*log(1-p_i). Inputs are probabilities.
double sc_loss(const Eigen::VectorXd& pred, const Eigen::VectorXd& target,
               double lambda);
Eigen::VectorXd sc_loss_grad(const Eigen::VectorXd& pred,
                             const Eigen::VectorXd& target, double lambda);

// Views with probability strictly above 0.5.
ViewMask predict(const Model& model, const FeatureTensor& features);

struct TrainOptions {
  double lambda = 1.25;
  int epochs = 30;
  double learning_rate = 0.05;
  int batch_size = 32;
  int hidden = 64;
  double val_fraction = 0.2;
  std::uint64_t seed = 0;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  int best_f1_epoch = 0;
  EpochStats final;
};

// Deterministic SGD on a seeded train/validation split. The returned model
// carries the last epoch's weights; the report tracks every epoch.
Model train(const Dataset& dataset, const TrainOptions& options,
            TrainReport* report = nullptr);

std::string train_report_to_json(const TrainReport& report);

}  // namespace viewplan
