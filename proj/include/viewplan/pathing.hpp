#pragma once

#include <vector>

#include "viewplan/covering.hpp"
#include "viewplan/viewspace.hpp"

namespace viewplan {

struct Tour {
  std::vector<int> order;       // view ids, starting at the start view
  double total_cost = 0.0;
  std::vector<double> leg_costs;  // one per transition, order.size()-1
};

// Cheapest open path visiting every chosen view exactly once, starting at
// `start`. Exact bitmask dynamic programming; ties resolve to the tour
// whose id sequence is lexicographically smallest. Selections beyond
// `max_stops` views throw SizeError (use plan_tour_greedy there); the
// default cap bounds the DP table at 2^23 states.
Tour plan_tour(const ViewSpace& space, const ViewMask& chosen, int start,
               int max_stops = 23);

// Nearest-neighbour fallback, ties to the lowest id.
Tour plan_tour_greedy(const ViewSpace& space, const ViewMask& chosen,
                      int start);

std::string tour_to_json(const Tour& tour);

}  // namespace viewplan
