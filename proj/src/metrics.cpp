#include "viewplan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "viewplan/error.hpp"
#include "viewplan/occupancy.hpp"
#include "viewplan/rng.hpp"

namespace viewplan {

CoverageStats surface_coverage(const PointCloud& observed,
                               const PointCloud& ground_truth, double grid_res,
                               const std::vector<char>* coverable) {
  if (grid_res <= 0.0) throw ArgumentError("coverage resolution must be positive");
  if (ground_truth.empty()) throw ArgumentError("ground truth cloud is empty");
  if (coverable && coverable->size() != ground_truth.size()) {
    throw ArgumentError("coverable mask size does not match ground truth");
  }
  // world-anchored cells, matching the covering instance quantization
  auto key_of = [&](const Eigen::Vector3d& p) {
    return VoxelKey{static_cast<int>(std::floor(p.x() / grid_res)),
                    static_cast<int>(std::floor(p.y() / grid_res)),
                    static_cast<int>(std::floor(p.z() / grid_res))};
  };
  std::set<VoxelKey> denom;
  for (std::size_t i = 0; i < ground_truth.size(); ++i) {
    if (coverable && !(*coverable)[i]) continue;
    denom.insert(key_of(ground_truth.points[i]));
  }
  CoverageStats stats;
  stats.total_cells = static_cast<long>(denom.size());
  if (denom.empty()) return stats;
  std::set<VoxelKey> seen;
  for (const auto& p : observed.points) {
    const VoxelKey key = key_of(p);
    if (denom.count(key)) seen.insert(key);
  }
  stats.covered_cells = static_cast<long>(seen.size());
  stats.fraction = static_cast<double>(stats.covered_cells) /
                   static_cast<double>(stats.total_cells);
  return stats;
}

PointCloud subsample(const PointCloud& cloud, std::size_t count,
                     std::uint64_t seed) {
  if (cloud.size() <= count) return cloud;
  std::vector<std::size_t> idx(cloud.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(derive_seed(seed, "subsample", cloud.size()));
  rng.shuffle(idx);
  idx.resize(count);
  PointCloud out;
  out.points.reserve(count);
  const bool tags = cloud.has_tags();
  if (tags) out.source_view.reserve(count);
  for (std::size_t i : idx) {
    out.points.push_back(cloud.points[i]);
    if (tags) out.source_view.push_back(cloud.source_view[i]);
  }
  return out;
}

namespace {

using Matrix3X = Eigen::Matrix<double, 3, Eigen::Dynamic>;

Matrix3X to_matrix(const PointCloud& cloud) {
  Matrix3X m(3, static_cast<Eigen::Index>(cloud.size()));
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    m.col(static_cast<Eigen::Index>(i)) = cloud.points[i];
  }
  return m;
}

// index of the nearest column of `to` for every column of `from`
std::vector<Eigen::Index> nearest_indices(const Matrix3X& from,
                                          const Matrix3X& to) {
  std::vector<Eigen::Index> nn(static_cast<std::size_t>(from.cols()));
  for (Eigen::Index i = 0; i < from.cols(); ++i) {
    Eigen::Index best = 0;
    (to.colwise() - from.col(i)).colwise().squaredNorm().minCoeff(&best);
    nn[static_cast<std::size_t>(i)] = best;
  }
  return nn;
}

void check_pair(const PointCloud& a, const PointCloud& b) {
  if (a.empty() || b.empty()) {
    throw ArgumentError("cloud metrics need two non-empty clouds");
  }
}

// e-maxx style Hungarian algorithm on a square cost matrix; returns the
// column matched to each row.
std::vector<int> hungarian(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = std::numeric_limits<double>::infinity();
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> match(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j] > 0) match[p[j] - 1] = j - 1;
  }
  return match;
}

}  // namespace

double chamfer_mm(const PointCloud& a, const PointCloud& b,
                  std::size_t sample_n, std::uint64_t seed) {
  check_pair(a, b);
  const Matrix3X ma = to_matrix(subsample(a, sample_n, derive_seed(seed, "cd")));
  const Matrix3X mb = to_matrix(subsample(b, sample_n, derive_seed(seed, "cd")));
  double sum_ab = 0.0;
  for (Eigen::Index i = 0; i < ma.cols(); ++i) {
    sum_ab += std::sqrt(
        (mb.colwise() - ma.col(i)).colwise().squaredNorm().minCoeff());
  }
  double sum_ba = 0.0;
  for (Eigen::Index i = 0; i < mb.cols(); ++i) {
    sum_ba += std::sqrt(
        (ma.colwise() - mb.col(i)).colwise().squaredNorm().minCoeff());
  }
  return 0.5 *
         (sum_ab / static_cast<double>(ma.cols()) +
          sum_ba / static_cast<double>(mb.cols())) *
         1000.0;
}

double emd_mm(const PointCloud& a, const PointCloud& b,
              std::size_t sample_n, std::uint64_t seed) {
  check_pair(a, b);
  const std::size_t n = std::min({sample_n, a.size(), b.size()});
  if (n == 0) throw ArgumentError("assignment metric needs non-empty samples");
  const Matrix3X ma = to_matrix(subsample(a, n, derive_seed(seed, "emd")));
  const Matrix3X mb = to_matrix(subsample(b, n, derive_seed(seed, "emd")));
  Eigen::MatrixXd cost(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < cost.rows(); ++i) {
    cost.row(i) = (mb.colwise() - ma.col(i)).colwise().norm();
  }
  const std::vector<int> match = hungarian(cost);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += cost(static_cast<Eigen::Index>(i), match[i]);
  }
  return total / static_cast<double>(n) * 1000.0;
}

namespace {

double dcd_one_way(const Matrix3X& query, const Matrix3X& target,
                   double temperature) {
  const auto nn = nearest_indices(query, target);
  std::map<Eigen::Index, int> hits;
  for (Eigen::Index t : nn) ++hits[t];
  double sum = 0.0;
  for (Eigen::Index i = 0; i < query.cols(); ++i) {
    const Eigen::Index t = nn[static_cast<std::size_t>(i)];
    const double d2 = (query.col(i) - target.col(t)).squaredNorm();
    sum += 1.0 - std::exp(-temperature * d2) / hits[t];
  }
  return sum / static_cast<double>(query.cols());
}

}  // namespace

double dcd(const PointCloud& a, const PointCloud& b, double temperature,
           std::size_t sample_n, std::uint64_t seed) {
  check_pair(a, b);
  if (temperature < 0.0) throw ArgumentError("temperature must be non-negative");
  const Matrix3X ma = to_matrix(subsample(a, sample_n, derive_seed(seed, "dcd")));
  const Matrix3X mb = to_matrix(subsample(b, sample_n, derive_seed(seed, "dcd")));
  return 0.5 * (dcd_one_way(ma, mb, temperature) +
                dcd_one_way(mb, ma, temperature));
}

}  // namespace viewplan
