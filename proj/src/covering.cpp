#include "viewplan/covering.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "viewplan/binio.hpp"
#include "viewplan/error.hpp"

namespace viewplan {

int ViewMask::count() const {
  int c = 0;
  for (std::uint8_t b : bits) c += b != 0;
  return c;
}

std::vector<int> ViewMask::ids() const {
  std::vector<int> out;
  for (int i = 0; i < n; ++i) {
    if (bits[i]) out.push_back(i);
  }
  return out;
}

std::string ViewMask::to_string() const {
  std::string s(static_cast<std::size_t>(n), '0');
  for (int i = 0; i < n; ++i) {
    if (bits[i]) s[static_cast<std::size_t>(i)] = '1';
  }
  return s;
}

ViewMask ViewMask::from_string(const std::string& s) {
  ViewMask m(static_cast<int>(s.size()));
  for (int i = 0; i < m.n; ++i) {
    const char c = s[static_cast<std::size_t>(i)];
    if (c == '1') m.bits[static_cast<std::size_t>(i)] = 1;
    else if (c != '0') throw FormatError("view mask must be 0/1 characters");
  }
  return m;
}

ViewMask ViewMask::from_ids(int n_views, const std::vector<int>& ids) {
  ViewMask m(n_views);
  for (int id : ids) {
    if (id < 0 || id >= n_views) {
      throw ArgumentError("view id " + std::to_string(id) + " outside [0, " +
                          std::to_string(n_views) + ")");
    }
    m.set(id);
  }
  return m;
}

namespace {

VoxelKey quantize_key(const Eigen::Vector3d& p, const Eigen::Vector3d& origin,
                      double res) {
  return VoxelKey{static_cast<int>(std::floor((p.x() - origin.x()) / res)),
                  static_cast<int>(std::floor((p.y() - origin.y()) / res)),
                  static_cast<int>(std::floor((p.z() - origin.z()) / res))};
}

std::vector<VoxelKey> sorted_unique(std::vector<VoxelKey> keys) {
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  return keys;
}

}  // namespace

CoverInstance build_instance(const std::vector<PointCloud>& per_view,
                             const PointCloud& ground_truth, double grid_res,
                             int alpha) {
  if (grid_res <= 0.0) throw ArgumentError("instance grid resolution must be positive");
  if (alpha < 1) throw ArgumentError("multiplicity threshold must be at least 1");
  if (ground_truth.empty()) throw ArgumentError("ground truth cloud is empty");

  CoverInstance inst;
  inst.n = static_cast<int>(per_view.size());
  inst.alpha = alpha;
  inst.grid_res = grid_res;
  // world-anchored cells so instance, coverage, and accumulation all agree
  inst.grid_origin = Eigen::Vector3d::Zero();

  std::vector<VoxelKey> gt_cells;
  gt_cells.reserve(ground_truth.size());
  for (const auto& p : ground_truth.points) {
    gt_cells.push_back(quantize_key(p, inst.grid_origin, grid_res));
  }
  gt_cells = sorted_unique(std::move(gt_cells));

  std::map<VoxelKey, int> multiplicity;
  inst.subsets.resize(per_view.size());
  for (std::size_t v = 0; v < per_view.size(); ++v) {
    std::vector<VoxelKey> cells;
    cells.reserve(per_view[v].size());
    for (const auto& p : per_view[v].points) {
      const VoxelKey key = quantize_key(p, inst.grid_origin, grid_res);
      if (std::binary_search(gt_cells.begin(), gt_cells.end(), key)) {
        cells.push_back(key);
      }
    }
    inst.subsets[v] = sorted_unique(std::move(cells));
    for (const auto& key : inst.subsets[v]) ++multiplicity[key];
  }
  for (const auto& [key, count] : multiplicity) {
    if (count >= alpha) inst.universe.push_back(key);
  }
  return inst;
}

namespace {

using Blocks = std::vector<std::uint64_t>;

int popcount_blocks(const Blocks& b) {
  int c = 0;
  for (std::uint64_t w : b) c += std::popcount(w);
  return c;
}

bool any_blocks(const Blocks& b) {
  for (std::uint64_t w : b) {
    if (w) return true;
  }
  return false;
}

int and_popcount(const Blocks& a, const Blocks& b) {
  int c = 0;
  for (std::size_t i = 0; i < a.size(); ++i) c += std::popcount(a[i] & b[i]);
  return c;
}

// true when every set bit of a is also set in b
bool subset_of(const Blocks& a, const Blocks& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] & ~b[i]) return false;
  }
  return true;
}

struct Reduced {
  // distinct cells that remain to cover, as supplier masks over view ids
  std::vector<std::uint64_t> suppliers;
  std::vector<int> forced;      // views every cover must contain
  std::vector<int> candidates;  // selectable views that still supply something
};

struct SearchCtx {
  int n_cells = 0;
  std::size_t words = 0;
  std::vector<int> cand;               // candidate view ids, ascending
  std::vector<Blocks> cover;           // per candidate, cells it supplies
  std::vector<Blocks> suffix_union;    // union of cover[i..]
  std::vector<int> picked;
  bool found = false;
  std::chrono::steady_clock::time_point deadline{};
  bool timed = false;
  bool expired = false;
  std::uint64_t visits = 0;
};

bool dfs(SearchCtx& ctx, std::size_t idx, Blocks& uncovered, int remaining_budget) {
  if (ctx.timed && (++ctx.visits & 0x3FF) == 0 &&
      std::chrono::steady_clock::now() > ctx.deadline) {
    ctx.expired = true;
    return false;
  }
  const int open = popcount_blocks(uncovered);
  if (open == 0) {
    ctx.found = true;
    return true;
  }
  if (ctx.expired || remaining_budget == 0 || idx >= ctx.cand.size()) return false;
  if (!subset_of(uncovered, ctx.suffix_union[idx])) return false;

  int max_gain = 0;
  for (std::size_t j = idx; j < ctx.cand.size(); ++j) {
    max_gain = std::max(max_gain, and_popcount(ctx.cover[j], uncovered));
  }
  if (max_gain == 0) return false;
  if ((open + max_gain - 1) / max_gain > remaining_budget) return false;

  // include first so the first full cover found is the smallest id sequence
  if (and_popcount(ctx.cover[idx], uncovered) > 0) {
    Blocks next = uncovered;
    for (std::size_t w = 0; w < ctx.words; ++w) next[w] &= ~ctx.cover[idx][w];
    ctx.picked.push_back(ctx.cand[idx]);
    if (dfs(ctx, idx + 1, next, remaining_budget - 1)) return true;
    ctx.picked.pop_back();
  }
  return dfs(ctx, idx + 1, uncovered, remaining_budget);
}

}  // namespace

SolveResult solve_greedy(const CoverInstance& inst, const ViewMask& used) {
  if (static_cast<int>(used.bits.size()) != inst.n) {
    throw ArgumentError("used mask size does not match instance");
  }
  std::vector<VoxelKey> uncovered = inst.universe;
  for (int v = 0; v < inst.n; ++v) {
    if (!used.get(v)) continue;
    std::vector<VoxelKey> rest;
    std::set_difference(uncovered.begin(), uncovered.end(),
                        inst.subsets[v].begin(), inst.subsets[v].end(),
                        std::back_inserter(rest));
    uncovered = std::move(rest);
  }

  SolveResult res;
  res.chosen = ViewMask(inst.n);
  res.optimal = uncovered.empty();
  while (!uncovered.empty()) {
    int best = -1;
    std::size_t best_gain = 0;
    for (int v = 0; v < inst.n; ++v) {
      if (used.get(v) || res.chosen.get(v)) continue;
      std::vector<VoxelKey> gain;
      std::set_intersection(uncovered.begin(), uncovered.end(),
                            inst.subsets[v].begin(), inst.subsets[v].end(),
                            std::back_inserter(gain));
      if (gain.size() > best_gain) {
        best_gain = gain.size();
        best = v;
      }
    }
    if (best < 0) {
      res.feasible = false;
      res.uncoverable = uncovered;
      break;
    }
    res.chosen.set(best);
    std::vector<VoxelKey> rest;
    std::set_difference(uncovered.begin(), uncovered.end(),
                        inst.subsets[best].begin(), inst.subsets[best].end(),
                        std::back_inserter(rest));
    uncovered = std::move(rest);
    res.optimal = false;
  }
  return res;
}

SolveResult solve_exact(const CoverInstance& inst) {
  return solve_exact(inst, ViewMask(inst.n));
}

SolveResult solve_exact(const CoverInstance& inst, const ViewMask& used,
                        double time_limit_s, int max_views) {
  if (inst.n < 0) throw ArgumentError("instance has negative view count");
  if (static_cast<int>(inst.subsets.size()) != inst.n) {
    throw ArgumentError("instance subset count does not match n");
  }
  if (static_cast<int>(used.bits.size()) != inst.n) {
    throw ArgumentError("used mask size does not match instance");
  }
  if (inst.n > max_views || inst.n > 63) {
    throw SizeError("exact cover supports up to " +
                    std::to_string(std::min(max_views, 63)) +
                    " views, got " + std::to_string(inst.n) +
                    "; use the greedy solver instead");
  }

  SolveResult res;
  res.chosen = ViewMask(inst.n);

  // supplier mask per universe cell, restricted to selectable views
  std::map<VoxelKey, std::uint64_t> suppliers;
  for (const auto& key : inst.universe) suppliers[key] = 0;
  std::vector<char> granted(inst.universe.size(), 0);
  for (int v = 0; v < inst.n; ++v) {
    for (const auto& key : inst.subsets[v]) {
      const auto it = suppliers.find(key);
      if (it == suppliers.end()) continue;
      if (used.get(v)) it->second |= std::uint64_t{1} << 63;  // marker: granted
      else it->second |= std::uint64_t{1} << v;
    }
  }

  std::vector<std::uint64_t> cell_mask;
  std::vector<VoxelKey> cell_key;
  for (const auto& [key, mask] : suppliers) {
    if (mask & (std::uint64_t{1} << 63)) continue;  // already covered
    const std::uint64_t m = mask & ~(std::uint64_t{1} << 63);
    if (m == 0) {
      res.uncoverable.push_back(key);
      continue;
    }
    cell_mask.push_back(m);
    cell_key.push_back(key);
  }
  if (!res.uncoverable.empty()) {
    res.feasible = false;
    res.optimal = false;
    return res;
  }

  // forced views: a cell with a single supplier pins that view
  std::vector<int> forced;
  {
    std::uint64_t forced_bits = 0;
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::uint64_t m : cell_mask) {
        if (std::popcount(m) == 1 && !(m & forced_bits)) {
          forced_bits |= m;
          changed = true;
        }
      }
      if (changed) {
        std::vector<std::uint64_t> rest;
        for (std::uint64_t m : cell_mask) {
          if (!(m & forced_bits)) rest.push_back(m);
        }
        cell_mask = std::move(rest);
      }
    }
    for (int v = 0; v < inst.n; ++v) {
      if (forced_bits & (std::uint64_t{1} << v)) {
        forced.push_back(v);
        res.chosen.set(v);
      }
    }
  }

  // drop dominated cells: if suppliers(u) is a subset of suppliers(v), any
  // cover of u also covers v
  {
    std::sort(cell_mask.begin(), cell_mask.end());
    cell_mask.erase(std::unique(cell_mask.begin(), cell_mask.end()),
                    cell_mask.end());
    std::vector<std::uint64_t> kept;
    for (std::size_t i = 0; i < cell_mask.size(); ++i) {
      bool dominated = false;
      for (std::size_t j = 0; j < cell_mask.size() && !dominated; ++j) {
        if (i == j) continue;
        const bool j_subset = (cell_mask[j] & ~cell_mask[i]) == 0;
        if (j_subset && (cell_mask[j] != cell_mask[i] || j < i)) dominated = true;
      }
      if (!dominated) kept.push_back(cell_mask[i]);
    }
    cell_mask = std::move(kept);
  }

  if (cell_mask.empty()) return res;  // forced views already cover everything

  SearchCtx ctx;
  {
    std::uint64_t cand_bits = 0;
    for (std::uint64_t m : cell_mask) cand_bits |= m;
    for (int v = 0; v < inst.n; ++v) {
      if (cand_bits & (std::uint64_t{1} << v)) ctx.cand.push_back(v);
    }
  }
  ctx.n_cells = static_cast<int>(cell_mask.size());
  ctx.words = static_cast<std::size_t>((ctx.n_cells + 63) / 64);
  ctx.cover.assign(ctx.cand.size(), Blocks(ctx.words, 0));
  for (std::size_t j = 0; j < ctx.cand.size(); ++j) {
    const std::uint64_t vbit = std::uint64_t{1} << ctx.cand[j];
    for (int c = 0; c < ctx.n_cells; ++c) {
      if (cell_mask[static_cast<std::size_t>(c)] & vbit) {
        ctx.cover[j][static_cast<std::size_t>(c) / 64] |=
            std::uint64_t{1} << (c % 64);
      }
    }
  }
  ctx.suffix_union.assign(ctx.cand.size() + 1, Blocks(ctx.words, 0));
  for (std::size_t j = ctx.cand.size(); j-- > 0;) {
    ctx.suffix_union[j] = ctx.suffix_union[j + 1];
    for (std::size_t w = 0; w < ctx.words; ++w) {
      ctx.suffix_union[j][w] |= ctx.cover[j][w];
    }
  }

  Blocks all(ctx.words, 0);
  for (int c = 0; c < ctx.n_cells; ++c) {
    all[static_cast<std::size_t>(c) / 64] |= std::uint64_t{1} << (c % 64);
  }
  if (!subset_of(all, ctx.suffix_union[0])) {
    throw InternalError("cover search lost a supplier");
  }

  // upper bound from a greedy pass over the reduced cells
  int upper = 0;
  {
    Blocks uncovered = all;
    while (any_blocks(uncovered)) {
      int best_gain = 0;
      std::size_t best_j = 0;
      for (std::size_t j = 0; j < ctx.cand.size(); ++j) {
        const int g = and_popcount(ctx.cover[j], uncovered);
        if (g > best_gain) {
          best_gain = g;
          best_j = j;
        }
      }
      for (std::size_t w = 0; w < ctx.words; ++w) {
        uncovered[w] &= ~ctx.cover[best_j][w];
      }
      ++upper;
    }
  }

  if (time_limit_s > 0.0) {
    ctx.timed = true;
    ctx.deadline = std::chrono::steady_clock::now() +
                   std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                       std::chrono::duration<double>(time_limit_s));
  }

  // deepen the budget until a cover appears; the first one found at the
  // first feasible budget is the lexicographically smallest optimum
  for (int k = 1; k <= upper && !ctx.expired; ++k) {
    Blocks uncovered = all;
    ctx.picked.clear();
    ctx.found = false;
    if (dfs(ctx, 0, uncovered, k)) break;
  }
  if (ctx.expired) {
    SolveResult fallback = solve_greedy(inst, used);
    fallback.optimal = false;
    return fallback;
  }
  if (!ctx.found) throw InternalError("cover search missed its greedy bound");
  for (int v : ctx.picked) res.chosen.set(v);
  return res;
}

void save_instance(const CoverInstance& inst, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  nlohmann::json header;
  header["n"] = inst.n;
  header["alpha"] = inst.alpha;
  header["grid_res"] = inst.grid_res;
  header["grid_origin"] = {inst.grid_origin.x(), inst.grid_origin.y(),
                           inst.grid_origin.z()};
  header["universe_count"] = inst.universe.size();
  nlohmann::json counts = nlohmann::json::array();
  for (const auto& s : inst.subsets) counts.push_back(s.size());
  header["subset_counts"] = counts;
  const std::string htext = header.dump();

  binio::write_magic(out, "VPCI");
  binio::write<std::uint32_t>(out, 1);
  binio::write<std::uint64_t>(out, htext.size());
  out.write(htext.data(), static_cast<std::streamsize>(htext.size()));
  auto write_keys = [&out](const std::vector<VoxelKey>& keys) {
    for (const auto& k : keys) {
      binio::write<std::int32_t>(out, k.i);
      binio::write<std::int32_t>(out, k.j);
      binio::write<std::int32_t>(out, k.k);
    }
  };
  write_keys(inst.universe);
  for (const auto& s : inst.subsets) write_keys(s);
  if (!out) throw Error("write failed for '" + path + "'");
}

CoverInstance load_instance(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  binio::expect_magic(in, "VPCI", path);
  const auto version = binio::read<std::uint32_t>(in, path);
  if (version != 1) {
    throw FormatError(path + ": " + "unsupported instance version " + std::to_string(version));
  }
  const auto hlen = binio::read<std::uint64_t>(in, path);
  if (hlen > (1u << 20)) throw FormatError(path + ": " + "oversized header");
  std::string htext(hlen, '\0');
  in.read(htext.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw FormatError(path + ": " + "truncated header");

  CoverInstance inst;
  std::size_t universe_count = 0;
  std::vector<std::size_t> subset_counts;
  try {
    const nlohmann::json header = nlohmann::json::parse(htext);
    inst.n = header.at("n").get<int>();
    inst.alpha = header.at("alpha").get<int>();
    inst.grid_res = header.at("grid_res").get<double>();
    const auto& o = header.at("grid_origin");
    inst.grid_origin = Eigen::Vector3d(o.at(0), o.at(1), o.at(2));
    universe_count = header.at("universe_count").get<std::size_t>();
    subset_counts = header.at("subset_counts").get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + std::string("bad instance header: ") + e.what());
  }
  if (static_cast<int>(subset_counts.size()) != inst.n) {
    throw FormatError(path + ": " + "subset count list does not match n");
  }

  auto read_keys = [&in, &path](std::size_t count) {
    std::vector<VoxelKey> keys(count);
    for (auto& k : keys) {
      k.i = binio::read<std::int32_t>(in, path);
      k.j = binio::read<std::int32_t>(in, path);
      k.k = binio::read<std::int32_t>(in, path);
    }
    return keys;
  };
  inst.universe = read_keys(universe_count);
  inst.subsets.reserve(subset_counts.size());
  for (std::size_t count : subset_counts) inst.subsets.push_back(read_keys(count));
  return inst;
}

}  // namespace viewplan
