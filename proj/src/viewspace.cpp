#include "viewplan/viewspace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "viewplan/error.hpp"
#include "viewplan/rng.hpp"

namespace viewplan {

namespace {

double angle_between(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

double min_pair_angle(const std::vector<Eigen::Vector3d>& dirs) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    for (std::size_t j = i + 1; j < dirs.size(); ++j) {
      best = std::min(best, angle_between(dirs[i], dirs[j]));
    }
  }
  return best;
}

// Minimum angle from dirs[i] to any other direction.
double min_angle_at(const std::vector<Eigen::Vector3d>& dirs, std::size_t i,
                    const Eigen::Vector3d& candidate) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < dirs.size(); ++j) {
    if (j == i) continue;
    best = std::min(best, angle_between(candidate, dirs[j]));
  }
  return best;
}

Eigen::Vector3d clamp_to_hemisphere(Eigen::Vector3d d) {
  d.normalize();
  if (d.z() < 0.0) {
    d.z() = 0.0;
    const double n = d.norm();
    if (n < 1e-12) return Eigen::Vector3d::UnitX();
    d /= n;
  }
  return d;
}

// Rotate `d` by `angle` radians toward unit tangent `t` (t orthogonal to d).
Eigen::Vector3d rotate_toward(const Eigen::Vector3d& d, const Eigen::Vector3d& t,
                              double angle) {
  return clamp_to_hemisphere(std::cos(angle) * d + std::sin(angle) * t);
}

void tangent_basis(const Eigen::Vector3d& d, Eigen::Vector3d& u,
                   Eigen::Vector3d& v) {
  const Eigen::Vector3d ref =
      std::abs(d.z()) < 0.9 ? Eigen::Vector3d::UnitZ() : Eigen::Vector3d::UnitX();
  u = ref.cross(d).normalized();
  v = d.cross(u);
}

}  // namespace

double ViewSpace::min_separation() const {
  std::vector<Eigen::Vector3d> dirs;
  dirs.reserve(views.size());
  for (const auto& v : views) {
    dirs.push_back((v.pose.position - center).normalized());
  }
  return min_pair_angle(dirs);
}

double movement_cost(const Pose& a, const Pose& b, double radius) {
  // positions sit at center - radius * forward, so forward axes carry the
  // same angle as the radial directions
  return radius * angle_between(a.forward(), b.forward());
}

ViewSpace build_viewspace(int n, double radius, const Eigen::Vector3d& center,
                          std::uint64_t seed, int iterations) {
  if (n < 2) throw ArgumentError("view space needs at least two views");
  if (radius <= 0.0) throw ArgumentError("view space radius must be positive");

  Rng rng(derive_seed(seed, "viewspace", 0));
  std::vector<Eigen::Vector3d> dirs(n);
  for (auto& d : dirs) {
    // area-uniform on the upper hemisphere
    const double z = rng.uniform();
    const double phi = 2.0 * M_PI * rng.uniform();
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    d = Eigen::Vector3d(r * std::cos(phi), r * std::sin(phi), z);
  }

  // repulsion descent: inverse-square forces on chord vectors, projected
  // onto the tangent plane, with a decaying step
  for (int it = 0; it < iterations; ++it) {
    const double step = 0.1 * std::pow(0.998, it);
    std::vector<Eigen::Vector3d> force(n, Eigen::Vector3d::Zero());
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        Eigen::Vector3d delta = dirs[i] - dirs[j];
        const double d2 = std::max(delta.squaredNorm(), 1e-9);
        delta /= d2 * std::sqrt(d2);
        force[i] += delta;
        force[j] -= delta;
      }
      // mirror charge below the equator keeps points off the rim only
      // weakly; the hemisphere clamp does the real work
    }
    for (int i = 0; i < n; ++i) {
      const Eigen::Vector3d tangent =
          force[i] - force[i].dot(dirs[i]) * dirs[i];
      dirs[i] = clamp_to_hemisphere(dirs[i] + step * tangent);
    }
  }

  // pattern-search polish: coordinate ascent where each view raises its own
  // clearance (min angle to any other view). Candidate moves come from a
  // deterministic fan of tangent directions plus the steepest-ascent
  // direction of the clearance min, read off the near-active neighbor
  // gradients. At a fixed point no single view can raise its clearance,
  // hence none can raise the global minimum either.
  const int n_dirs = 64;
  const double scales[] = {4e-3, 2e-3, 1e-3, 5e-4, 2e-4, 1e-4, 4e-5, 1e-5};
  for (int sweep = 0; sweep < 2000; ++sweep) {
    bool improved = false;
    for (int i = 0; i < n; ++i) {
      Eigen::Vector3d u, v;
      tangent_basis(dirs[i], u, v);
      const double own = min_angle_at(dirs, i, dirs[i]);

      // tangent directions pointing away from each neighbor close enough to
      // become the binding constraint within one move
      std::vector<Eigen::Vector3d> away;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        if (angle_between(dirs[i], dirs[j]) > own + 6e-3) continue;
        Eigen::Vector3d w = dirs[j] - dirs[j].dot(dirs[i]) * dirs[i];
        const double norm = w.norm();
        if (norm < 1e-12) continue;
        away.push_back(-w / norm);
      }
      std::vector<Eigen::Vector3d> steps;
      auto consider = [&](const Eigen::Vector3d& t) {
        double margin = std::numeric_limits<double>::infinity();
        for (const auto& a : away) margin = std::min(margin, t.dot(a));
        if (margin > 0.0) steps.push_back(t);
      };
      for (const auto& a : away) consider(a);
      for (std::size_t a = 0; a < away.size(); ++a) {
        for (std::size_t b = a + 1; b < away.size(); ++b) {
          const Eigen::Vector3d bis = away[a] + away[b];
          if (bis.norm() > 1e-12) consider(bis.normalized());
        }
      }
      for (int a = 0; a < n_dirs; ++a) {
        const double phi = 2.0 * M_PI * a / n_dirs;
        steps.push_back(std::cos(phi) * u + std::sin(phi) * v);
      }

      double best = own;
      Eigen::Vector3d best_dir = dirs[i];
      for (const auto& t : steps) {
        for (double scale : scales) {
          const Eigen::Vector3d cand = rotate_toward(dirs[i], t, scale);
          const double local = min_angle_at(dirs, i, cand);
          if (local > best + 1e-12) {
            best = local;
            best_dir = cand;
          }
        }
      }
      if (best > own + 1e-12) {
        dirs[i] = best_dir;
        improved = true;
      }
    }
    if (!improved) break;
  }

  ViewSpace space;
  space.radius = radius;
  space.center = center;
  space.seed = seed;
  space.views.resize(n);
  for (int i = 0; i < n; ++i) {
    space.views[i].id = i;
    space.views[i].pose = look_at(center + radius * dirs[i], center);
  }
  space.cost.resize(n, n);
  for (int i = 0; i < n; ++i) {
    space.cost(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j) {
      const double c = radius * angle_between(dirs[i], dirs[j]);
      space.cost(i, j) = c;
      space.cost(j, i) = c;
    }
  }
  return space;
}

std::string viewspace_to_json(const ViewSpace& space) {
  nlohmann::json j;
  j["n"] = space.size();
  j["radius"] = space.radius;
  j["center"] = {space.center.x(), space.center.y(), space.center.z()};
  j["seed"] = space.seed;
  nlohmann::json positions = nlohmann::json::array();
  for (const auto& v : space.views) {
    positions.push_back(
        {v.pose.position.x(), v.pose.position.y(), v.pose.position.z()});
  }
  j["positions"] = positions;
  nlohmann::json cost = nlohmann::json::array();
  for (int i = 0; i < space.size(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int k = 0; k < space.size(); ++k) row.push_back(space.cost(i, k));
    cost.push_back(row);
  }
  j["cost"] = cost;
  return j.dump(2) + "\n";
}

ViewSpace viewspace_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("view space JSON: ") + e.what());
  }
  try {
    ViewSpace space;
    const int n = j.at("n").get<int>();
    space.radius = j.at("radius").get<double>();
    const auto& c = j.at("center");
    space.center = Eigen::Vector3d(c.at(0), c.at(1), c.at(2));
    space.seed = j.at("seed").get<std::uint64_t>();
    const auto& positions = j.at("positions");
    if (static_cast<int>(positions.size()) != n) {
      throw FormatError("view space JSON: positions size mismatch");
    }
    space.views.resize(n);
    for (int i = 0; i < n; ++i) {
      const auto& p = positions.at(i);
      space.views[i].id = i;
      space.views[i].pose =
          look_at(Eigen::Vector3d(p.at(0), p.at(1), p.at(2)), space.center);
    }
    const auto& cost = j.at("cost");
    if (static_cast<int>(cost.size()) != n) {
      throw FormatError("view space JSON: cost size mismatch");
    }
    space.cost.resize(n, n);
    for (int i = 0; i < n; ++i) {
      const auto& row = cost.at(i);
      if (static_cast<int>(row.size()) != n) {
        throw FormatError("view space JSON: cost row size mismatch");
      }
      for (int k = 0; k < n; ++k) space.cost(i, k) = row.at(k).get<double>();
    }
    return space;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("view space JSON: ") + e.what());
  }
}

void save_viewspace(const ViewSpace& space, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << viewspace_to_json(space);
  if (!out) throw Error("write failed for '" + path + "'");
}

ViewSpace load_viewspace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return viewspace_from_json(text);
}

}  // namespace viewplan
