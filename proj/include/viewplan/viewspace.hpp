#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "viewplan/geometry.hpp"

namespace viewplan {

struct View {
  int id = 0;
  Pose pose;
};

// Candidate views on an upper hemisphere around `center`, all aimed at the
// center, with the pairwise great-circle movement cost matrix in meters.
struct ViewSpace {
  std::vector<View> views;
  double radius = 0.0;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::MatrixXd cost;
  std::uint64_t seed = 0;

  int size() const { return static_cast<int>(views.size()); }

  // Smallest pairwise angular separation, in radians.
  double min_separation() const;
};

// Spread n views over the upper hemisphere by maximizing the minimum
// pairwise angle: seeded random start, repulsion descent, then a
// deterministic pattern-search polish. Same seed, same layout.
ViewSpace build_viewspace(int n, double radius, const Eigen::Vector3d& center,
                          std::uint64_t seed, int iterations = 2000);

// Arc length between the two camera positions on their common sphere.
double movement_cost(const Pose& a, const Pose& b, double radius);

std::string viewspace_to_json(const ViewSpace& space);
ViewSpace viewspace_from_json(const std::string& text);
void save_viewspace(const ViewSpace& space, const std::string& path);
ViewSpace load_viewspace(const std::string& path);

}  // namespace viewplan
