#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "test_util.hpp"
#include "viewplan/error.hpp"
#include "viewplan/pathing.hpp"
#include "viewplan/rng.hpp"
#include "viewplan/viewspace.hpp"

using namespace viewplan;

namespace {

// views pinned at given equator angles on a 0.4 m sphere
ViewSpace ring_space(const std::vector<double>& angles) {
  ViewSpace space;
  space.radius = 0.4;
  space.center = Eigen::Vector3d::Zero();
  const int n = static_cast<int>(angles.size());
  space.views.resize(n);
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d pos(0.4 * std::cos(angles[i]),
                              0.4 * std::sin(angles[i]), 0.0);
    space.views[i].id = i;
    space.views[i].pose = look_at(pos, space.center);
  }
  space.cost.resize(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      space.cost(i, j) =
          movement_cost(space.views[i].pose, space.views[j].pose, 0.4);
    }
  }
  return space;
}

void check_tour_shape(const Tour& tour, const ViewSpace& space,
                      const ViewMask& chosen, int start) {
  std::vector<int> want = chosen.ids();
  if (!chosen.get(start)) want.push_back(start);
  std::sort(want.begin(), want.end());
  std::vector<int> got = tour.order;
  std::sort(got.begin(), got.end());
  CHECK(got == want);
  REQUIRE(tour.order.front() == start);
  REQUIRE(tour.leg_costs.size() + 1 == tour.order.size());
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < tour.order.size(); ++i) {
    CHECK(tour.leg_costs[i] == space.cost(tour.order[i], tour.order[i + 1]));
    sum += tour.leg_costs[i];
  }
  CHECK(tour.total_cost == doctest::Approx(sum).epsilon(1e-12));
}

}  // namespace

TEST_CASE("bad starts and mismatched masks are rejected") {
  const ViewSpace space = ring_space({0.0, 1.0, 2.0});
  CHECK_THROWS_AS(plan_tour(space, ViewMask(3), -1), ArgumentError);
  CHECK_THROWS_AS(plan_tour(space, ViewMask(3), 3), ArgumentError);
  CHECK_THROWS_AS(plan_tour(space, ViewMask(2), 0), ArgumentError);
  CHECK_THROWS_AS(plan_tour_greedy(space, ViewMask(4), 1), ArgumentError);
}

TEST_CASE("selections beyond the DP cap advise the greedy fallback") {
  const ViewSpace space = ring_space({0.0, 0.5, 1.0, 1.5, 2.0});
  ViewMask chosen(5);
  for (int i = 1; i < 5; ++i) chosen.set(i);
  CHECK_THROWS_AS(plan_tour(space, chosen, 0, 3), SizeError);
  CHECK_NOTHROW(plan_tour(space, chosen, 0, 4));
  CHECK_NOTHROW(plan_tour_greedy(space, chosen, 0));
}

TEST_CASE("single stop goes straight there") {
  const ViewSpace space = ring_space({0.0, 0.8, 1.6});
  ViewMask chosen(3);
  chosen.set(2);
  const Tour tour = plan_tour(space, chosen, 0);
  CHECK(tour.order == std::vector<int>{0, 2});
  CHECK(tour.total_cost == space.cost(0, 2));
  CHECK(tour.leg_costs == std::vector<double>{space.cost(0, 2)});
  const Tour greedy = plan_tour_greedy(space, chosen, 0);
  CHECK(greedy.order == tour.order);
  CHECK(greedy.total_cost == tour.total_cost);
}

TEST_CASE("the start view may appear in the selection") {
  const ViewSpace space = ring_space({0.0, 0.8, 1.6});
  ViewMask chosen(3);
  chosen.set(0);
  chosen.set(1);
  const Tour tour = plan_tour(space, chosen, 0);
  CHECK(tour.order == std::vector<int>{0, 1});
}

TEST_CASE("empty selection stays at the start") {
  const ViewSpace space = ring_space({0.0, 0.8});
  const Tour tour = plan_tour(space, ViewMask(2), 1);
  CHECK(tour.order == std::vector<int>{1});
  CHECK(tour.total_cost == 0.0);
  CHECK(tour.leg_costs.empty());
}

TEST_CASE("monotone arcs are walked in order") {
  const ViewSpace space = ring_space({0.0, 0.7, 1.4});
  ViewMask chosen(3);
  chosen.set(1);
  chosen.set(2);
  const Tour tour = plan_tour(space, chosen, 0);
  CHECK(tour.order == std::vector<int>{0, 1, 2});
  CHECK(tour.total_cost == doctest::Approx(0.4 * 1.4).epsilon(1e-12));
}

TEST_CASE("symmetric detours break toward the lexicographically smaller order") {
  // views 1 and 2 mirror each other around the start
  const ViewSpace space = ring_space({0.0, 0.9, -0.9});
  ViewMask chosen(3);
  chosen.set(1);
  chosen.set(2);
  const Tour tour = plan_tour(space, chosen, 0);
  CHECK(tour.order == std::vector<int>{0, 1, 2});
  const Tour greedy = plan_tour_greedy(space, chosen, 0);
  CHECK(greedy.order == std::vector<int>{0, 1, 2});
}

TEST_CASE("exact tours match factorial brute force on 100 random subsets") {
  const ViewSpace space = build_viewspace(16, 0.4, Eigen::Vector3d::Zero(), 5);
  Rng rng(derive_seed(7, "tour_oracle", 0));
  for (int t = 0; t < 100; ++t) {
    const int start = static_cast<int>(rng.uniform_index(16));
    ViewMask chosen(16);
    int added = 0;
    while (added < 8) {
      const int v = static_cast<int>(rng.uniform_index(16));
      if (v == start || chosen.get(v)) continue;
      chosen.set(v);
      ++added;
    }
    const Tour tour = plan_tour(space, chosen, start);
    check_tour_shape(tour, space, chosen, start);
    const testutil::BruteTour brute =
        testutil::brute_force_tour(space, chosen.ids(), start);
    CHECK(tour.total_cost == doctest::Approx(brute.cost).epsilon(1e-9));
    CHECK(tour.order == brute.order);

    const Tour greedy = plan_tour_greedy(space, chosen, start);
    check_tour_shape(greedy, space, chosen, start);
    CHECK(greedy.total_cost >= tour.total_cost - 1e-12);
  }
}

TEST_CASE("tour cost is invariant under view relabeling") {
  const ViewSpace space = build_viewspace(10, 0.4, Eigen::Vector3d::Zero(), 13);
  const std::vector<int> perm{7, 2, 9, 0, 4, 1, 8, 5, 3, 6};
  ViewSpace shuffled;
  shuffled.radius = space.radius;
  shuffled.center = space.center;
  shuffled.views.resize(10);
  shuffled.cost.resize(10, 10);
  for (int i = 0; i < 10; ++i) {
    shuffled.views[i].id = i;
    shuffled.views[i].pose = space.views[perm[i]].pose;
    for (int j = 0; j < 10; ++j) {
      shuffled.cost(i, j) = space.cost(perm[i], perm[j]);
    }
  }
  std::vector<int> inverse(10);
  for (int i = 0; i < 10; ++i) inverse[perm[i]] = i;

  ViewMask chosen(10);
  chosen.set(2);
  chosen.set(5);
  chosen.set(8);
  chosen.set(9);
  ViewMask relabeled(10);
  for (int id : chosen.ids()) relabeled.set(inverse[id]);

  const Tour a = plan_tour(space, chosen, 1);
  const Tour b = plan_tour(shuffled, relabeled, inverse[1]);
  CHECK(a.total_cost == doctest::Approx(b.total_cost).epsilon(1e-12));
}

TEST_CASE("greedy visits equidistant views lowest id first") {
  // three stops all at the same arc distance from the start and from each
  // other cannot be ordered by cost alone
  const double step = 2.0 * M_PI / 3.0;
  const ViewSpace space = ring_space({0.0, step, 2.0 * step, 0.0});
  ViewMask chosen(4);
  chosen.set(1);
  chosen.set(2);
  const Tour greedy = plan_tour_greedy(space, chosen, 0);
  CHECK(greedy.order == std::vector<int>{0, 1, 2});
}

TEST_CASE("tours serialize to JSON with order, total and leg costs") {
  const ViewSpace space = ring_space({0.0, 0.7, 1.4});
  ViewMask chosen(3);
  chosen.set(1);
  chosen.set(2);
  const Tour tour = plan_tour(space, chosen, 0);
  const nlohmann::json j = nlohmann::json::parse(tour_to_json(tour));
  CHECK(j.at("order").get<std::vector<int>>() == tour.order);
  CHECK(j.at("total_cost").get<double>() == tour.total_cost);
  CHECK(j.at("per_leg_costs").get<std::vector<double>>() == tour.leg_costs);
}
