// Copyright 2026 The predsafe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Scene stratification along agent density and road geometry. Together with
// the with/without-map evaluation condition these index the 16 scenario
// subsets a model is evaluated on.

#ifndef PREDSAFE__CLASSIFY_HPP_
#define PREDSAFE__CLASSIFY_HPP_

#include "predsafe/parallel.hpp"
#include "predsafe/scene_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <map>
#include <numbers>
#include <string>
#include <vector>

namespace predsafe
{
namespace classify
{

inline constexpr std::size_t kUnbounded = std::numeric_limits<std::size_t>::max();

/// Half-open agent-count range [lo, hi). hi == kUnbounded means no upper limit.
struct DensityBin
{
  std::size_t lo = 1;
  std::size_t hi = kUnbounded;

  bool contains(std::size_t n) const noexcept { return n >= lo && n < hi; }
};

struct ClassifyConfig
{
  // single {1}, few [2,3], medium [4,8], many [9,inf)
  std::array<DensityBin, 4> density_bins = {
    DensityBin{1, 2}, DensityBin{2, 4}, DensityBin{4, 9}, DensityBin{9, kUnbounded}};
  double curvature_threshold_deg = 15.0;
  double curvature_window_m = 20.0;
  double roi_radius_m = 30.0;
};

inline std::vector<Violation> validate_config(const ClassifyConfig & cfg)
{
  std::vector<Violation> out;
  const auto & bins = cfg.density_bins;
  if (bins.front().lo != 1) {
    out.push_back({"density_bins[0]", "must start at 1 agent"});
  }
  for (std::size_t i = 0; i < bins.size(); ++i) {
    if (bins[i].lo >= bins[i].hi) {
      out.push_back({"density_bins[" + std::to_string(i) + "]", "must be non-empty (lo < hi)"});
    }
    if (i + 1 < bins.size() && bins[i].hi != bins[i + 1].lo) {
      out.push_back(
        {"density_bins[" + std::to_string(i) + "]", "must end where the next bin starts"});
    }
  }
  if (bins.back().hi != kUnbounded) {
    out.push_back({"density_bins[3]", "last bin must be unbounded"});
  }
  auto positive = [&](double v, const char * name) {
    if (!(std::isfinite(v) && v > 0.0)) out.push_back({name, "must be finite and > 0"});
  };
  positive(cfg.curvature_threshold_deg, "curvature_threshold_deg");
  positive(cfg.curvature_window_m, "curvature_window_m");
  positive(cfg.roi_radius_m, "roi_radius_m");
  return out;
}

inline DensityLevel classify_density(std::size_t agent_count, const ClassifyConfig & cfg = {})
{
  for (std::size_t i = 0; i < cfg.density_bins.size(); ++i) {
    if (cfg.density_bins[i].contains(agent_count)) return kAllDensities[i];
  }
  // Only reachable with an invalid config or zero agents.
  return agent_count == 0 ? DensityLevel::kSingle : DensityLevel::kMany;
}

inline DensityLevel classify_density(const Scene & scene, const ClassifyConfig & cfg = {})
{
  return classify_density(scene.agents.size(), cfg);
}

// Slack on the arc-length window so runs whose length equals the window in
// exact arithmetic are not lost to rounding.
inline constexpr double kWindowSlackM = 1e-9;

/**
 * @brief Largest absolute cumulative heading change, in degrees, over any
 * contiguous run of segments whose total arc length is at most `window_m`.
 *
 * The cumulative change of a run is the sum of signed turn angles between
 * its consecutive segments. Consecutive points closer than
 * kMinPointSeparation are merged first. Runs in O(n) using monotone deques
 * over the turn-angle prefix sums.
 *
 * Throws Error(kSemantic) if fewer than two distinct points remain.
 */
inline double heading_change_deg(const Trajectory & polyline, double window_m)
{
  Trajectory pts;
  pts.reserve(polyline.size());
  for (const auto & p : polyline) {
    if (pts.empty() || distance(pts.back(), p) > kMinPointSeparation) pts.push_back(p);
  }
  if (pts.size() < 2) {
    throw Error(ErrorKind::kSemantic, "degenerate polyline: fewer than 2 distinct points");
  }

  const std::size_t n_seg = pts.size() - 1;
  // arc[i] = length of segments [0, i); turn[i] = sum of turns at vertices 1..i.
  std::vector<double> arc(n_seg + 1, 0.0);
  std::vector<double> turn(n_seg, 0.0);
  for (std::size_t i = 0; i < n_seg; ++i) {
    arc[i + 1] = arc[i] + distance(pts[i], pts[i + 1]);
    if (i > 0) {
      const double ax = pts[i].x - pts[i - 1].x;
      const double ay = pts[i].y - pts[i - 1].y;
      const double bx = pts[i + 1].x - pts[i].x;
      const double by = pts[i + 1].y - pts[i].y;
      turn[i] = turn[i - 1] + std::atan2(ax * by - ay * bx, ax * bx + ay * by);
    }
  }

  // Segment run [i, j] changes heading by turn[j] - turn[i].
  double best = 0.0;
  std::deque<std::size_t> min_q;
  std::deque<std::size_t> max_q;
  std::size_t lo = 0;
  for (std::size_t j = 0; j < n_seg; ++j) {
    while (!min_q.empty() && turn[min_q.back()] >= turn[j]) min_q.pop_back();
    min_q.push_back(j);
    while (!max_q.empty() && turn[max_q.back()] <= turn[j]) max_q.pop_back();
    max_q.push_back(j);

    while (lo <= j && arc[j + 1] - arc[lo] > window_m + kWindowSlackM) ++lo;
    while (!min_q.empty() && min_q.front() < lo) min_q.pop_front();
    while (!max_q.empty() && max_q.front() < lo) max_q.pop_front();
    if (lo > j) continue;

    best = std::max(best, turn[j] - turn[min_q.front()]);
    best = std::max(best, turn[max_q.front()] - turn[j]);
  }
  return best * 180.0 / std::numbers::pi;
}

struct GeometryResult
{
  GeometryType type = GeometryType::kStraight;
  double heading_change_deg = 0.0;  // largest change observed
  bool from_map = false;            // false when the trajectory fallback was used
};

/**
 * @brief Straight/curved decision for a scene.
 *
 * With a map, every lane having a centerline point within roi_radius_m of
 * some agent's last observed position is tested. Without a map, or with no
 * lane in range, each agent's history+future path is tested instead
 * (stationary agents contribute 0). Curved iff the largest heading change
 * strictly exceeds the threshold.
 */
inline GeometryResult classify_geometry(const Scene & scene, const ClassifyConfig & cfg = {})
{
  GeometryResult result;
  bool any_lane = false;
  if (scene.map) {
    for (const auto & lane : scene.map->lanes) {
      const bool in_roi = std::any_of(
        lane.centerline.begin(), lane.centerline.end(), [&](const TrajPoint & p) {
          return std::any_of(scene.agents.begin(), scene.agents.end(), [&](const AgentTrack & a) {
            return !a.history.empty() && distance(p, a.history.back()) <= cfg.roi_radius_m;
          });
        });
      if (!in_roi) continue;
      any_lane = true;
      result.heading_change_deg = std::max(
        result.heading_change_deg, heading_change_deg(lane.centerline, cfg.curvature_window_m));
    }
  }
  result.from_map = any_lane;
  if (!any_lane) {
    for (const auto & agent : scene.agents) {
      Trajectory path = agent.history;
      path.insert(path.end(), agent.future.begin(), agent.future.end());
      try {
        result.heading_change_deg =
          std::max(result.heading_change_deg, heading_change_deg(path, cfg.curvature_window_m));
      } catch (const Error &) {
        // stationary agent: no heading information
      }
    }
  }
  result.type = result.heading_change_deg > cfg.curvature_threshold_deg ? GeometryType::kCurved
                                                                        : GeometryType::kStraight;
  return result;
}

struct SceneClass
{
  std::string scene_id;
  std::size_t agent_count = 0;
  DensityLevel rho = DensityLevel::kSingle;
  GeometryType tau = GeometryType::kStraight;
  double heading_change_deg = 0.0;

  CellKey cell() const { return {rho, tau}; }
};

/// Disjoint assignment of scenes to the eight (rho, tau) cells.
struct Partition
{
  std::map<CellKey, std::vector<std::string>> cells;  // all 8 keys present
  std::vector<SceneClass> scenes;                     // sorted by scene_id

  const SceneClass * find(std::string_view scene_id) const
  {
    auto it = std::lower_bound(
      scenes.begin(), scenes.end(), scene_id,
      [](const SceneClass & s, std::string_view id) { return s.scene_id < id; });
    return (it != scenes.end() && it->scene_id == scene_id) ? &*it : nullptr;
  }

  std::size_t total() const
  {
    std::size_t n = 0;
    for (const auto & [key, ids] : cells) n += ids.size();
    return n;
  }
};

inline std::map<CellKey, std::vector<std::string>> empty_cells()
{
  std::map<CellKey, std::vector<std::string>> cells;
  for (auto r : kAllDensities) {
    for (auto t : kAllGeometries) cells[{r, t}];
  }
  return cells;
}

/// Builds a partition from precomputed per-scene classes (sorted or not).
inline Partition partition_from_classes(std::vector<SceneClass> classes)
{
  std::sort(classes.begin(), classes.end(), [](const SceneClass & a, const SceneClass & b) {
    return a.scene_id < b.scene_id;
  });
  for (std::size_t i = 1; i < classes.size(); ++i) {
    if (classes[i].scene_id == classes[i - 1].scene_id) {
      throw Error(
        ErrorKind::kValidation, "duplicate scene_id '" + classes[i].scene_id + "'", "scene_id");
    }
  }
  Partition out;
  out.cells = empty_cells();
  for (const auto & c : classes) out.cells[c.cell()].push_back(c.scene_id);
  out.scenes = std::move(classes);
  return out;
}

inline SceneClass classify_scene(const Scene & scene, const ClassifyConfig & cfg = {})
{
  const auto geometry = classify_geometry(scene, cfg);
  return {
    scene.scene_id, scene.agents.size(), classify_density(scene, cfg), geometry.type,
    geometry.heading_change_deg};
}

/**
 * @brief Assign every scene to exactly one (rho, tau) cell.
 *
 * Scenes are classified independently on up to `jobs` threads; the result
 * does not depend on `jobs` or on input order. Duplicate scene ids throw.
 */
inline Partition partition(
  const std::vector<Scene> & scenes, const ClassifyConfig & cfg = {}, std::size_t jobs = 1)
{
  std::vector<SceneClass> classes(scenes.size());
  parallel_for(scenes.size(), jobs, [&](std::size_t i) {
    classes[i] = classify_scene(scenes[i], cfg);
  });
  return partition_from_classes(std::move(classes));
}

inline std::string classification_csv(const Partition & p)
{
  std::string out = "scene_id,agent_count,rho,tau,heading_change_deg\n";
  char buf[64];
  for (const auto & s : p.scenes) {
    std::snprintf(buf, sizeof(buf), "%.6f", s.heading_change_deg);
    out += csv_field(s.scene_id) + "," + std::to_string(s.agent_count) + "," +
           std::string(to_string(s.rho)) + "," + std::string(to_string(s.tau)) + "," + buf + "\n";
  }
  return out;
}

}  // namespace classify
}  // namespace predsafe

#endif  // PREDSAFE__CLASSIFY_HPP_
