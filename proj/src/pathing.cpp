#include "viewplan/pathing.hpp"

#include <algorithm>
#include <limits>

#include <nlohmann/json.hpp>

#include "viewplan/error.hpp"

namespace viewplan {

namespace {

void check_inputs(const ViewSpace& space, const ViewMask& chosen, int start) {
  if (start < 0 || start >= space.size()) {
    throw ArgumentError("start view " + std::to_string(start) +
                        " outside the view space");
  }
  if (chosen.n != space.size()) {
    throw ArgumentError("chosen mask size does not match the view space");
  }
}

Tour finish(const ViewSpace& space, std::vector<int> order) {
  Tour tour;
  tour.order = std::move(order);
  for (std::size_t i = 0; i + 1 < tour.order.size(); ++i) {
    const double c = space.cost(tour.order[i], tour.order[i + 1]);
    tour.leg_costs.push_back(c);
    tour.total_cost += c;
  }
  return tour;
}

}  // namespace

Tour plan_tour(const ViewSpace& space, const ViewMask& chosen, int start,
               int max_stops) {
  check_inputs(space, chosen, start);
  std::vector<int> nodes;
  for (int id : chosen.ids()) {
    if (id != start) nodes.push_back(id);
  }
  const int m = static_cast<int>(nodes.size());
  if (m == 0) return finish(space, {start});
  if (m > max_stops) {
    throw SizeError("exact tour supports up to " + std::to_string(max_stops) +
                    " stops, got " + std::to_string(m) +
                    "; use the greedy planner instead");
  }

  // g[S][j]: cheapest continuation that stands at nodes[j] and still has to
  // visit exactly the member set S (j not in S)
  const std::size_t full = std::size_t{1} << m;
  std::vector<double> g(full * static_cast<std::size_t>(m), 0.0);
  auto at = [m, &g](std::size_t set, int j) -> double& {
    return g[set * static_cast<std::size_t>(m) + static_cast<std::size_t>(j)];
  };
  for (std::size_t set = 1; set < full; ++set) {
    for (int j = 0; j < m; ++j) {
      if (set & (std::size_t{1} << j)) continue;
      double best = std::numeric_limits<double>::infinity();
      for (int k = 0; k < m; ++k) {
        if (!(set & (std::size_t{1} << k))) continue;
        const double c = space.cost(nodes[j], nodes[k]) +
                         at(set & ~(std::size_t{1} << k), k);
        best = std::min(best, c);
      }
      at(set, j) = best;
    }
  }

  // first hop: smallest id among cost-optimal entry nodes
  double best_total = std::numeric_limits<double>::infinity();
  for (int f = 0; f < m; ++f) {
    const std::size_t rest = (full - 1) & ~(std::size_t{1} << f);
    best_total = std::min(best_total,
                          space.cost(start, nodes[f]) + at(rest, f));
  }

  std::vector<int> order{start};
  std::size_t remaining = full - 1;
  int current = -1;  // -1 means we are still at the start view
  double target = best_total;
  while (remaining) {
    int next = -1;
    std::size_t next_rest = 0;
    for (int k = 0; k < m; ++k) {
      if (!(remaining & (std::size_t{1} << k))) continue;
      const std::size_t rest = remaining & ~(std::size_t{1} << k);
      const double hop =
          current < 0 ? space.cost(start, nodes[k]) : space.cost(nodes[current], nodes[k]);
      if (hop + at(rest, k) == target) {
        next = k;
        next_rest = rest;
        target = at(rest, k);
        break;
      }
    }
    if (next < 0) throw InternalError("tour reconstruction lost its optimum");
    order.push_back(nodes[next]);
    current = next;
    remaining = next_rest;
  }
  return finish(space, std::move(order));
}

Tour plan_tour_greedy(const ViewSpace& space, const ViewMask& chosen,
                      int start) {
  check_inputs(space, chosen, start);
  std::vector<int> pending;
  for (int id : chosen.ids()) {
    if (id != start) pending.push_back(id);
  }
  std::vector<int> order{start};
  int current = start;
  while (!pending.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < pending.size(); ++i) {
      if (space.cost(current, pending[i]) < space.cost(current, pending[best])) {
        best = i;
      }
    }
    current = pending[best];
    order.push_back(current);
    pending.erase(pending.begin() + static_cast<long>(best));
  }
  return finish(space, std::move(order));
}

std::string tour_to_json(const Tour& tour) {
  nlohmann::json j;
  j["order"] = tour.order;
  j["total_cost"] = tour.total_cost;
  j["per_leg_costs"] = tour.leg_costs;
  return j.dump();
}

}  // namespace viewplan
