#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "test_util.hpp"
#include "viewplan/error.hpp"
#include "viewplan/metrics.hpp"
#include "viewplan/rng.hpp"
#include "viewplan/synth.hpp"

using namespace viewplan;

namespace {

PointCloud random_cloud(std::size_t count, std::uint64_t seed,
                        double scale = 0.05,
                        const Eigen::Vector3d& offset = Eigen::Vector3d::Zero()) {
  Rng rng(seed);
  PointCloud cloud;
  for (std::size_t i = 0; i < count; ++i) {
    cloud.points.push_back(offset + Eigen::Vector3d(rng.uniform(-scale, scale),
                                                    rng.uniform(-scale, scale),
                                                    rng.uniform(-scale, scale)));
  }
  return cloud;
}

double chamfer_scan_mm(const PointCloud& a, const PointCloud& b) {
  auto mean_min = [](const PointCloud& from, const PointCloud& to) {
    double sum = 0.0;
    for (const auto& p : from.points) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : to.points) best = std::min(best, (p - q).norm());
      sum += best;
    }
    return sum / static_cast<double>(from.size());
  };
  return 0.5 * (mean_min(a, b) + mean_min(b, a)) * 1000.0;
}

double dcd_scan(const PointCloud& a, const PointCloud& b, double temperature) {
  auto one_way = [temperature](const PointCloud& query,
                               const PointCloud& target) {
    std::vector<std::size_t> nn(query.size());
    for (std::size_t i = 0; i < query.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < target.size(); ++j) {
        const double d2 = (query.points[i] - target.points[j]).squaredNorm();
        if (d2 < best) {
          best = d2;
          nn[i] = j;
        }
      }
    }
    std::map<std::size_t, int> shared;
    for (std::size_t j : nn) ++shared[j];
    double sum = 0.0;
    for (std::size_t i = 0; i < query.size(); ++i) {
      const double d2 =
          (query.points[i] - target.points[nn[i]]).squaredNorm();
      sum += 1.0 - std::exp(-temperature * d2) / shared[nn[i]];
    }
    return sum / static_cast<double>(query.size());
  };
  return 0.5 * (one_way(a, b) + one_way(b, a));
}

std::set<std::array<double, 3>> point_set(const PointCloud& cloud) {
  std::set<std::array<double, 3>> out;
  for (const auto& p : cloud.points) out.insert({p.x(), p.y(), p.z()});
  return out;
}

}  // namespace

TEST_CASE("surface coverage is one for a full capture and zero for none") {
  const PointCloud gt =
      sample_surface(make_icosphere(3, 0.05), 0.004, 1);
  const CoverageStats full = surface_coverage(gt, gt, 0.01);
  CHECK(full.fraction == 1.0);
  CHECK(full.covered_cells == full.total_cells);
  CHECK(full.total_cells > 50);

  const CoverageStats none = surface_coverage(PointCloud{}, gt, 0.01);
  CHECK(none.fraction == 0.0);
  CHECK(none.covered_cells == 0);
  CHECK(none.total_cells == full.total_cells);
}

TEST_CASE("surface coverage matches a set intersection oracle on a half sphere") {
  const PointCloud gt =
      sample_surface(make_icosphere(3, 0.05), 0.004, 2);
  PointCloud upper;
  for (const auto& p : gt.points) {
    if (p.z() >= 0.0) upper.points.push_back(p);
  }
  const double res = 0.01;
  const CoverageStats stats = surface_coverage(upper, gt, res);

  auto cell_of = [res](const Eigen::Vector3d& p) {
    return std::array<int, 3>{static_cast<int>(std::floor(p.x() / res)),
                              static_cast<int>(std::floor(p.y() / res)),
                              static_cast<int>(std::floor(p.z() / res))};
  };
  std::set<std::array<int, 3>> gt_cells, hit_cells;
  for (const auto& p : gt.points) gt_cells.insert(cell_of(p));
  for (const auto& p : upper.points) {
    const auto c = cell_of(p);
    if (gt_cells.count(c)) hit_cells.insert(c);
  }
  CHECK(stats.total_cells == static_cast<long>(gt_cells.size()));
  CHECK(stats.covered_cells == static_cast<long>(hit_cells.size()));
  const double expected = static_cast<double>(hit_cells.size()) /
                          static_cast<double>(gt_cells.size());
  CHECK(stats.fraction == expected);
  CHECK(stats.fraction > 0.3);
  CHECK(stats.fraction < 0.8);
}

TEST_CASE("surface coverage honors the coverable mask") {
  PointCloud gt;
  for (int i = 0; i < 10; ++i) {
    gt.points.push_back({0.02 * i + 0.005, 0.005, 0.005});
  }
  std::vector<char> coverable(10, 1);
  for (int i = 6; i < 10; ++i) coverable[i] = 0;

  PointCloud observed;
  observed.points.push_back(gt.points[0]);
  observed.points.push_back(gt.points[2]);
  observed.points.push_back(gt.points[4]);
  observed.points.push_back(gt.points[7]);  // only in an excluded cell

  const CoverageStats stats = surface_coverage(observed, gt, 0.01, &coverable);
  CHECK(stats.total_cells == 6);
  CHECK(stats.covered_cells == 3);
  CHECK(stats.fraction == 0.5);

  const std::vector<char> nothing(10, 0);
  const CoverageStats empty_denom =
      surface_coverage(observed, gt, 0.01, &nothing);
  CHECK(empty_denom.total_cells == 0);
  CHECK(empty_denom.fraction == 0.0);

  CHECK_THROWS_AS(surface_coverage(observed, PointCloud{}, 0.01),
                  ArgumentError);
  CHECK_THROWS_AS(surface_coverage(observed, gt, 0.0), ArgumentError);
  std::vector<char> short_mask(3, 1);
  CHECK_THROWS_AS(surface_coverage(observed, gt, 0.01, &short_mask),
                  ArgumentError);
}

TEST_CASE("surface coverage never drops when observations grow") {
  const PointCloud gt = random_cloud(300, 30);
  for (int trial = 0; trial < 20; ++trial) {
    Rng rng(derive_seed(31, "grow", static_cast<std::uint64_t>(trial)));
    PointCloud small;
    for (const auto& p : gt.points) {
      if (rng.uniform() < 0.3) small.points.push_back(p);
    }
    PointCloud big = small;
    for (const auto& p : gt.points) {
      if (rng.uniform() < 0.4) big.points.push_back(p);
    }
    const double lo = surface_coverage(small, gt, 0.01).fraction;
    const double hi = surface_coverage(big, gt, 0.01).fraction;
    CHECK(hi >= lo);
  }
}

TEST_CASE("subsample is a deterministic subset without replacement") {
  PointCloud cloud = random_cloud(100, 5);
  cloud.source_view.resize(100);
  for (int i = 0; i < 100; ++i) cloud.source_view[i] = i;

  const PointCloud a = subsample(cloud, 50, 3);
  const PointCloud b = subsample(cloud, 50, 3);
  REQUIRE(a.size() == 50u);
  CHECK(a.points == b.points);
  CHECK(a.source_view == b.source_view);

  const auto original = point_set(cloud);
  const auto picked = point_set(a);
  CHECK(picked.size() == 50u);  // no repeats
  bool from_cloud = true;
  for (const auto& p : picked) {
    if (!original.count(p)) from_cloud = false;
  }
  CHECK(from_cloud);

  std::map<std::array<double, 3>, int> tag_of;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    tag_of[{p.x(), p.y(), p.z()}] = cloud.source_view[i];
  }
  bool tags_follow = true;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& p = a.points[i];
    if (tag_of[{p.x(), p.y(), p.z()}] != a.source_view[i]) tags_follow = false;
  }
  CHECK(tags_follow);

  const PointCloud c = subsample(cloud, 50, 4);
  CHECK(a.points != c.points);
  const PointCloud whole = subsample(cloud, 200, 3);
  CHECK(whole.points == cloud.points);
}

TEST_CASE("chamfer distance is zero on identical clouds and exact on singletons") {
  const PointCloud cloud = random_cloud(600, 6);
  CHECK(chamfer_mm(cloud, cloud) == 0.0);

  PointCloud p, q;
  p.points.push_back({0.01, 0.02, 0.03});
  q.points.push_back({0.01, 0.02, 0.035});
  CHECK(chamfer_mm(p, q) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("chamfer matches a quadratic scan oracle") {
  for (int trial = 0; trial < 30; ++trial) {
    const auto seed = static_cast<std::uint64_t>(trial);
    const PointCloud a = random_cloud(100, derive_seed(7, "cd_a", seed));
    const PointCloud b =
        random_cloud(80, derive_seed(7, "cd_b", seed), 0.05,
                     Eigen::Vector3d(0.01, -0.005, 0.02));
    const double got = chamfer_mm(a, b);
    CHECK(got == doctest::Approx(chamfer_scan_mm(a, b)).epsilon(1e-12));
    CHECK(got == chamfer_mm(b, a));
  }
}

TEST_CASE("chamfer subsampling is deterministic") {
  const PointCloud a = random_cloud(2000, 8);
  const PointCloud b = random_cloud(2000, 9, 0.05, {0.02, 0.0, 0.0});
  const double first = chamfer_mm(a, b, 256, 1);
  CHECK(first == chamfer_mm(a, b, 256, 1));
  CHECK(first != chamfer_mm(a, b, 256, 2));
  CHECK(chamfer_mm(a, b, 4096, 1) == chamfer_mm(a, b, 8192, 1));
}

TEST_CASE("assignment distance is zero on identical clouds and permutations") {
  const PointCloud cloud = random_cloud(200, 10);
  CHECK(emd_mm(cloud, cloud) == 0.0);

  PointCloud reversed = cloud;
  std::reverse(reversed.points.begin(), reversed.points.end());
  CHECK(emd_mm(cloud, reversed) == 0.0);

  PointCloud p, q;
  p.points.push_back({0.0, 0.0, 0.0});
  q.points.push_back({0.0, 0.005, 0.0});
  CHECK(emd_mm(p, q) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("three point assignment matches the factorial oracle") {
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng(derive_seed(11, "emd3", static_cast<std::uint64_t>(trial)));
    std::vector<Eigen::Vector3d> a(3), b(3);
    PointCloud ca, cb;
    for (int i = 0; i < 3; ++i) {
      a[i] = {rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05),
              rng.uniform(-0.05, 0.05)};
      b[i] = {rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05),
              rng.uniform(-0.05, 0.05)};
      ca.points.push_back(a[i]);
      cb.points.push_back(b[i]);
    }
    const double expected = testutil::emd3_bruteforce(a, b) * 1000.0;
    CHECK(emd_mm(ca, cb) == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("assignment cost never beats the nearest neighbor bound") {
  for (int trial = 0; trial < 20; ++trial) {
    const auto seed = static_cast<std::uint64_t>(trial);
    const PointCloud a = random_cloud(60, derive_seed(12, "pair_a", seed));
    const PointCloud b = random_cloud(60, derive_seed(12, "pair_b", seed));
    const double cd = chamfer_mm(a, b);
    const double emd = emd_mm(a, b);
    CHECK(cd <= emd + 1e-9);
    CHECK(emd == doctest::Approx(emd_mm(b, a)).epsilon(1e-9));
  }
}

TEST_CASE("density aware distance is zero on identical clouds and bounded") {
  const PointCloud cloud = random_cloud(400, 13);
  const double self = dcd(cloud, cloud);
  CHECK(self >= 0.0);
  CHECK(self <= 1e-9);

  for (int trial = 0; trial < 200; ++trial) {
    Rng rng(derive_seed(14, "bounds", static_cast<std::uint64_t>(trial)));
    const std::size_t na = 5 + rng.uniform_index(60);
    const std::size_t nb = 5 + rng.uniform_index(60);
    const double scale = rng.uniform(0.001, 0.2);
    const Eigen::Vector3d off(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5),
                              rng.uniform(-0.5, 0.5));
    const PointCloud a = random_cloud(na, derive_seed(14, "a", trial), scale);
    const PointCloud b =
        random_cloud(nb, derive_seed(14, "b", trial), scale, off);
    const double d = dcd(a, b);
    CHECK(d >= 0.0);
    CHECK(d <= 1.0);
  }
}

TEST_CASE("density aware distance matches an independent evaluation") {
  for (int trial = 0; trial < 50; ++trial) {
    const auto seed = static_cast<std::uint64_t>(trial);
    const PointCloud a = random_cloud(50, derive_seed(15, "dcd_a", seed));
    const PointCloud b =
        random_cloud(50, derive_seed(15, "dcd_b", seed), 0.05,
                     Eigen::Vector3d(0.005, 0.01, -0.01));
    const double got = dcd(a, b);
    CHECK(got == doctest::Approx(dcd_scan(a, b, 1000.0)).epsilon(1e-12));
    CHECK(got == dcd(b, a));

    const double warm = dcd(a, b, 80.0);
    CHECK(warm == doctest::Approx(dcd_scan(a, b, 80.0)).epsilon(1e-12));
  }
}

TEST_CASE("metric subsampling keeps results deterministic") {
  const PointCloud a = random_cloud(3000, 16);
  const PointCloud b = random_cloud(3000, 17, 0.05, {0.01, 0.0, 0.0});
  const double cd = chamfer_mm(a, b, 128, 5);
  const double em = emd_mm(a, b, 128, 5);
  const double dc = dcd(a, b, 1000.0, 256, 5);
  CHECK(cd == chamfer_mm(a, b, 128, 5));
  CHECK(em == emd_mm(a, b, 128, 5));
  CHECK(dc == dcd(a, b, 1000.0, 256, 5));
  CHECK(em != emd_mm(a, b, 128, 6));
  CHECK(dc != dcd(a, b, 1000.0, 256, 6));
}

TEST_CASE("cloud metrics reject empty inputs") {
  const PointCloud cloud = random_cloud(10, 18);
  const PointCloud empty;
  CHECK_THROWS_AS(chamfer_mm(empty, cloud), ArgumentError);
  CHECK_THROWS_AS(chamfer_mm(cloud, empty), ArgumentError);
  CHECK_THROWS_AS(emd_mm(empty, cloud), ArgumentError);
  CHECK_THROWS_AS(dcd(empty, cloud), ArgumentError);
  CHECK_THROWS_AS(dcd(cloud, cloud, -1.0), ArgumentError);
}
