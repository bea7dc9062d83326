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

// Parametric scene generator and two kinematic reference predictors.
//
// Randomness comes from std::mt19937_64, whose output sequence is fixed by
// the C++ standard, seeded through SplitMix64. Uniform and Gaussian variates
// are derived here (53-bit mantissa, Box-Muller) rather than through the
// standard distributions, whose algorithms are implementation-defined.

#ifndef PREDSAFE__SYNTH_HPP_
#define PREDSAFE__SYNTH_HPP_

#include "predsafe/parallel.hpp"
#include "predsafe/scene_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace predsafe
{
namespace synth
{

inline std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL)
{
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Portable random stream identified by (seed, stream tag).
class Rng
{
public:
  Rng(std::uint64_t seed, std::uint64_t stream) : engine_(splitmix64(seed ^ splitmix64(stream))) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi].
  std::uint64_t integer(std::uint64_t lo, std::uint64_t hi)
  {
    return lo + engine_() % (hi - lo + 1);
  }

  /// Standard normal via Box-Muller (cosine branch only).
  double normal()
  {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

private:
  std::mt19937_64 engine_;
};

////////////////////////////////////////////////////////////////////////////////
// Scene generation

struct PathGeometry
{
  enum class Kind { kStraight, kArc };
  Kind kind = Kind::kStraight;
  double radius_m = 50.0;  // arcs only; turns left

  static PathGeometry straight() { return {Kind::kStraight, 0.0}; }
  static PathGeometry arc(double radius_m) { return {Kind::kArc, radius_m}; }

  /// Position after arc length s from the origin, starting along +x.
  TrajPoint at(double s) const
  {
    if (kind == Kind::kStraight) return {s, 0.0};
    const double theta = s / radius_m;
    return {radius_m * std::sin(theta), radius_m * (1.0 - std::cos(theta))};
  }
};

struct SynthSpec
{
  std::size_t n_scenes = 10;
  std::size_t agents_min = 1;
  std::size_t agents_max = 1;
  PathGeometry geometry;
  double speed_mps = 10.0;
  double dt = 0.5;
  std::size_t history = 4;
  std::size_t future = 6;
  bool map_included = true;
  double noise_sigma_m = 0.0;   // positional noise on ground-truth tracks
  std::uint64_t seed = 0;
  std::string scene_prefix = "synth";
  double agent_spacing_m = 12.0;  // along-path gap between consecutive agents
  double lane_step_m = 1.0;
  bool random_pose = true;        // random rotation + translation per scene
};

inline std::vector<Violation> validate_spec(const SynthSpec & s)
{
  std::vector<Violation> out;
  if (s.agents_min < 1 || s.agents_max < s.agents_min) {
    out.push_back({"agents_per_scene", "need 1 <= min <= max"});
  }
  if (s.geometry.kind == PathGeometry::Kind::kArc && !(s.geometry.radius_m > 0.0)) {
    out.push_back({"geometry.radius_m", "must be > 0"});
  }
  if (!(s.speed_mps >= 0.0)) out.push_back({"speed_mps", "must be >= 0"});
  if (!(s.dt > 0.0)) out.push_back({"dt", "must be > 0"});
  if (!(s.noise_sigma_m >= 0.0)) out.push_back({"noise_sigma_m", "must be >= 0"});
  if (s.history < 1 || s.future < 1) out.push_back({"horizon", "history and future must be >= 1"});
  if (!(s.lane_step_m > 0.0)) out.push_back({"lane_step_m", "must be > 0"});
  return out;
}

inline std::string numbered(std::string_view prefix, std::size_t i, int width)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%0*zu", width, i);
  return std::string(prefix) + buf;
}

/**
 * @brief Deterministic scene `index` of a spec.
 *
 * Agents share one path, spaced agent_spacing_m apart, moving at constant
 * speed and sampled every dt. With map_included the path is exported as a
 * single lane sampled every lane_step_m.
 */
inline Scene gen_scene(const SynthSpec & spec, std::size_t index)
{
  Rng rng(spec.seed, index);
  const std::size_t n_agents = static_cast<std::size_t>(rng.integer(spec.agents_min, spec.agents_max));

  double yaw = 0.0;
  TrajPoint offset{};
  if (spec.random_pose) {
    yaw = rng.uniform(0.0, 2.0 * std::numbers::pi);
    offset = {rng.uniform(-500.0, 500.0), rng.uniform(-500.0, 500.0)};
  }
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  auto place = [&](const TrajPoint & p) {
    return TrajPoint{c * p.x - s * p.y + offset.x, s * p.x + c * p.y + offset.y};
  };

  Scene scene;
  scene.scene_id = numbered(spec.scene_prefix + "-", index, 6);
  scene.dt = spec.dt;
  const double step = spec.speed_mps * spec.dt;
  for (std::size_t a = 0; a < n_agents; ++a) {
    AgentTrack track;
    track.agent_id = numbered("agent_", a, 2);
    const double s0 = static_cast<double>(a) * spec.agent_spacing_m;
    const auto h = static_cast<long>(spec.history);
    for (long t = -(h - 1); t <= static_cast<long>(spec.future); ++t) {
      TrajPoint p = place(spec.geometry.at(s0 + step * static_cast<double>(t)));
      if (spec.noise_sigma_m > 0.0) {
        p.x += spec.noise_sigma_m * rng.normal();
        p.y += spec.noise_sigma_m * rng.normal();
      }
      (t <= 0 ? track.history : track.future).push_back(p);
    }
    scene.agents.push_back(std::move(track));
  }

  if (spec.map_included) {
    const double margin = 10.0;
    const double s_begin = -step * static_cast<double>(spec.history - 1) - margin;
    const double s_end = static_cast<double>(n_agents - 1) * spec.agent_spacing_m +
                         step * static_cast<double>(spec.future) + margin;
    Lane lane;
    lane.lane_id = "lane_0";
    const auto n_steps = static_cast<std::size_t>(std::ceil((s_end - s_begin) / spec.lane_step_m - 1e-9));
    for (std::size_t i = 0; i <= n_steps; ++i) {
      const double along = std::min(s_begin + spec.lane_step_m * static_cast<double>(i), s_end);
      lane.centerline.push_back(place(spec.geometry.at(along)));
    }
    scene.map = SemanticMap{{std::move(lane)}};
  }
  return scene;
}

inline std::vector<Scene> gen_corpus(const std::vector<SynthSpec> & specs, std::size_t jobs = 1)
{
  std::vector<std::pair<std::size_t, std::size_t>> jobs_list;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    for (std::size_t k = 0; k < specs[i].n_scenes; ++k) jobs_list.emplace_back(i, k);
  }
  std::vector<Scene> scenes(jobs_list.size());
  parallel_for(jobs_list.size(), jobs, [&](std::size_t i) {
    scenes[i] = gen_scene(specs[jobs_list[i].first], jobs_list[i].second);
  });
  std::sort(scenes.begin(), scenes.end(), [](const Scene & a, const Scene & b) {
    return a.scene_id < b.scene_id;
  });
  return scenes;
}

////////////////////////////////////////////////////////////////////////////////
// Presets

inline const std::vector<std::string_view> & preset_names()
{
  static const std::vector<std::string_view> names = {"straight_sparse", "curved_dense", "mixed_grid"};
  return names;
}

/// Named corpora. mixed_grid covers every (density, geometry) cell.
inline std::optional<std::vector<SynthSpec>> preset(std::string_view name, std::uint64_t seed)
{
  std::vector<SynthSpec> specs;
  if (name == "straight_sparse") {
    SynthSpec s;
    s.n_scenes = 12;
    s.agents_min = 1;
    s.agents_max = 3;
    s.geometry = PathGeometry::straight();
    s.seed = seed;
    s.scene_prefix = "straight_sparse";
    specs.push_back(s);
  } else if (name == "curved_dense") {
    SynthSpec s;
    s.n_scenes = 12;
    s.agents_min = 9;
    s.agents_max = 14;
    s.geometry = PathGeometry::arc(50.0);
    s.seed = seed;
    s.scene_prefix = "curved_dense";
    specs.push_back(s);
  } else if (name == "mixed_grid") {
    const std::size_t counts[4][2] = {{1, 1}, {2, 3}, {4, 8}, {9, 12}};
    std::uint64_t cell = 0;
    for (std::size_t d = 0; d < 4; ++d) {
      for (auto g : kAllGeometries) {
        SynthSpec s;
        s.n_scenes = 3;
        s.agents_min = counts[d][0];
        s.agents_max = counts[d][1];
        s.geometry = g == GeometryType::kStraight ? PathGeometry::straight() : PathGeometry::arc(50.0);
        s.seed = splitmix64(seed + cell++);
        s.scene_prefix = "grid-" + std::string(to_string(kAllDensities[d])) + "-" +
                         std::string(to_string(g));
        specs.push_back(s);
      }
    }
  } else {
    return std::nullopt;
  }
  return specs;
}

////////////////////////////////////////////////////////////////////////////////
// Reference predictors

/// Motion state at the last observed point.
struct KinematicState
{
  TrajPoint position;
  double heading = 0.0;   // rad
  double speed = 0.0;     // m/s
  double yaw_rate = 0.0;  // rad/s
};

// Turns below this (rad per step) are treated as straight motion.
inline constexpr double kStraightTurnRad = 1e-9;

/**
 * @brief Constant-speed, constant-turn-rate fit to the last three history
 * points (last two when only two exist).
 *
 * For uniform circular motion the turn between consecutive chords equals
 * the arc angle per step, the tangent at the last point is the last chord
 * rotated by half that turn, and the arc length per step is the chord
 * length times (phi/2)/sin(phi/2). All three are exact on noise-free arcs.
 */
inline KinematicState estimate_state(const Trajectory & history, double dt)
{
  if (history.size() < 2) {
    throw Error(ErrorKind::kValidation, "need at least 2 history points", "history");
  }
  KinematicState state;
  const auto & p0 = history[history.size() - 1];
  const auto & p1 = history[history.size() - 2];
  state.position = p0;
  const double bx = p0.x - p1.x;
  const double by = p0.y - p1.y;
  const double chord = std::hypot(bx, by);
  state.speed = chord / dt;
  state.heading = chord > 0.0 ? std::atan2(by, bx) : 0.0;
  if (history.size() < 3 || chord <= kMinPointSeparation) return state;

  const auto & p2 = history[history.size() - 3];
  const double ax = p1.x - p2.x;
  const double ay = p1.y - p2.y;
  if (std::hypot(ax, ay) <= kMinPointSeparation) return state;
  const double phi = std::atan2(ax * by - ay * bx, ax * bx + ay * by);
  if (std::abs(phi) <= kStraightTurnRad) return state;

  state.heading += 0.5 * phi;
  state.speed = chord * (0.5 * phi) / std::sin(0.5 * phi) / dt;
  state.yaw_rate = phi / dt;
  return state;
}

namespace detail
{
inline Trajectory straight_rollout(const KinematicState & st, std::size_t horizon, double dt)
{
  Trajectory out;
  const double ux = std::cos(st.heading);
  const double uy = std::sin(st.heading);
  for (std::size_t t = 1; t <= horizon; ++t) {
    const double d = st.speed * dt * static_cast<double>(t);
    out.push_back({st.position.x + d * ux, st.position.y + d * uy});
  }
  return out;
}

inline Trajectory turning_rollout(const KinematicState & st, std::size_t horizon, double dt)
{
  if (st.yaw_rate == 0.0) return straight_rollout(st, horizon, dt);
  Trajectory out;
  const double radius = st.speed / st.yaw_rate;  // signed
  for (std::size_t t = 1; t <= horizon; ++t) {
    const double heading = st.heading + st.yaw_rate * dt * static_cast<double>(t);
    out.push_back(
      {st.position.x + radius * (std::sin(heading) - std::sin(st.heading)),
       st.position.y - radius * (std::cos(heading) - std::cos(st.heading))});
  }
  return out;
}

template <typename Rollout>
PredictionSet predict(
  const Scene & scene, std::size_t k, double noise_sigma_m, std::uint64_t seed,
  SemanticCondition condition, std::string model_id, Rollout rollout)
{
  if (k < 1) throw Error(ErrorKind::kUsage, "K must be >= 1", "k");
  if (!(noise_sigma_m >= 0.0)) throw Error(ErrorKind::kUsage, "noise must be >= 0", "noise_sigma_m");
  PredictionSet set;
  set.scene_id = scene.scene_id;
  set.model_id = std::move(model_id);
  set.condition = condition;
  for (const auto & agent : scene.agents) {
    const auto base = rollout(estimate_state(agent.history, scene.dt), agent.future.size(), scene.dt);
    AgentPrediction pred;
    pred.agent_id = agent.agent_id;
    pred.samples.push_back(base);
    Rng rng(seed, fnv1a(agent.agent_id, fnv1a(scene.scene_id) ^ 0xffULL));
    for (std::size_t s = 1; s < k; ++s) {
      Trajectory noisy = base;
      for (auto & p : noisy) {
        p.x += noise_sigma_m * rng.normal();
        p.y += noise_sigma_m * rng.normal();
      }
      pred.samples.push_back(std::move(noisy));
    }
    set.per_agent.push_back(std::move(pred));
  }
  return set;
}
}  // namespace detail

/**
 * @brief Constant-velocity baseline. Sample 1 extrapolates the velocity at
 * the last observed point along a straight line; samples 2..K add i.i.d.
 * Gaussian positional noise of deviation noise_sigma_m to it.
 */
inline PredictionSet predict_cv(
  const Scene & scene, std::size_t k, double noise_sigma_m, std::uint64_t seed,
  SemanticCondition condition = SemanticCondition::kWithoutMap, std::string model_id = "cv")
{
  return detail::predict(
    scene, k, noise_sigma_m, seed, condition, std::move(model_id), detail::straight_rollout);
}

/// Constant-turn-rate predictor; exact on noise-free circular motion.
inline PredictionSet predict_ctr(
  const Scene & scene, std::size_t k, double noise_sigma_m, std::uint64_t seed,
  SemanticCondition condition = SemanticCondition::kWithMap, std::string model_id = "ctr")
{
  for (const auto & agent : scene.agents) {
    if (agent.history.size() < 3) {
      throw Error(
        ErrorKind::kValidation, "turn-rate estimation needs history length >= 3",
        "agents." + agent.agent_id + ".history");
    }
  }
  return detail::predict(
    scene, k, noise_sigma_m, seed, condition, std::move(model_id), detail::turning_rollout);
}

}  // namespace synth
}  // namespace predsafe

#endif  // PREDSAFE__SYNTH_HPP_
