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

#ifndef PREDSAFE__SCENE_MODEL_HPP_
#define PREDSAFE__SCENE_MODEL_HPP_

#include <array>
#include <cmath>
#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace predsafe
{

////////////////////////////////////////////////////////////////////////////////
// Errors

enum class ErrorKind {
  kSyntax,        // malformed document text
  kSchema,        // missing/extra field, wrong type or arity
  kSemantic,      // well-typed but meaningless value (NaN, dt <= 0, duplicate id)
  kNonUniformK,   // prediction sample count differs across agents
  kValidation,    // cross-document consistency
  kUsage,         // bad command line or configuration
  kInternal,
};

inline std::string_view to_string(ErrorKind kind)
{
  switch (kind) {
    case ErrorKind::kSyntax: return "syntax";
    case ErrorKind::kSchema: return "schema";
    case ErrorKind::kSemantic: return "semantic";
    case ErrorKind::kNonUniformK: return "non_uniform_k";
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kUsage: return "usage";
    case ErrorKind::kInternal: return "internal";
  }
  return "internal";
}

/**
 * @brief Structured failure carrying a machine-readable kind plus the
 * document location (e.g. "corpus.scenes.jsonl:12") and field path
 * (e.g. "agents[0].future") it refers to.
 */
class Error : public std::runtime_error
{
public:
  Error(ErrorKind kind, std::string message, std::string field = {}, std::string document = {})
  : std::runtime_error(compose(kind, message, field, document)),
    kind_(kind),
    message_(std::move(message)),
    field_(std::move(field)),
    document_(std::move(document))
  {
  }

  ErrorKind kind() const noexcept { return kind_; }
  const std::string & message() const noexcept { return message_; }
  const std::string & field() const noexcept { return field_; }
  const std::string & document() const noexcept { return document_; }

  /// Same error, re-anchored to a document location.
  Error at_document(std::string document) const
  {
    return Error(kind_, message_, field_, std::move(document));
  }

private:
  static std::string compose(
    ErrorKind kind, const std::string & message, const std::string & field,
    const std::string & document)
  {
    std::string out;
    if (!document.empty()) {
      out += document + ": ";
    }
    out += std::string(to_string(kind)) + " error";
    if (!field.empty()) {
      out += " at " + field;
    }
    out += ": " + message;
    return out;
  }

  ErrorKind kind_;
  std::string message_;
  std::string field_;
  std::string document_;
};

/// One broken invariant. Violations are data, not failures.
struct Violation
{
  std::string field;
  std::string rule;

  std::string to_string() const { return field + ": " + rule; }
  friend bool operator==(const Violation &, const Violation &) = default;
};

////////////////////////////////////////////////////////////////////////////////
// Horizon defaults

/// Observation/prediction window. Defaults match the nuScenes setup:
/// 4 observed steps (2 s), 6 predicted steps (3 s), 20 samples.
struct Horizon
{
  std::size_t history = 4;
  std::size_t future = 6;
  double dt = 0.5;
  std::size_t samples = 20;  // 0 accepts any K
};

inline constexpr double kMinPointSeparation = 1e-9;

////////////////////////////////////////////////////////////////////////////////
// Geometry and scene records

struct TrajPoint
{
  double x = 0.0;
  double y = 0.0;

  bool finite() const noexcept { return std::isfinite(x) && std::isfinite(y); }
  friend bool operator==(const TrajPoint &, const TrajPoint &) = default;
};

using Trajectory = std::vector<TrajPoint>;

inline double distance(const TrajPoint & a, const TrajPoint & b) noexcept
{
  return std::hypot(a.x - b.x, a.y - b.y);
}

struct AgentTrack
{
  std::string agent_id;
  Trajectory history;
  Trajectory future;

  friend bool operator==(const AgentTrack &, const AgentTrack &) = default;
};

struct Lane
{
  std::string lane_id;
  Trajectory centerline;

  friend bool operator==(const Lane &, const Lane &) = default;
};

struct SemanticMap
{
  std::vector<Lane> lanes;

  friend bool operator==(const SemanticMap &, const SemanticMap &) = default;
};

struct Scene
{
  std::string scene_id;
  double dt = 0.5;
  std::vector<AgentTrack> agents;
  std::optional<SemanticMap> map;

  const AgentTrack * find_agent(std::string_view agent_id) const
  {
    for (const auto & agent : agents) {
      if (agent.agent_id == agent_id) {
        return &agent;
      }
    }
    return nullptr;
  }

  friend bool operator==(const Scene &, const Scene &) = default;
};

////////////////////////////////////////////////////////////////////////////////
// Stratification axes

enum class SemanticCondition { kWithMap, kWithoutMap };
enum class DensityLevel { kSingle, kFew, kMedium, kMany };
enum class GeometryType { kStraight, kCurved };

inline constexpr std::array<SemanticCondition, 2> kAllConditions = {
  SemanticCondition::kWithMap, SemanticCondition::kWithoutMap};
inline constexpr std::array<DensityLevel, 4> kAllDensities = {
  DensityLevel::kSingle, DensityLevel::kFew, DensityLevel::kMedium, DensityLevel::kMany};
inline constexpr std::array<GeometryType, 2> kAllGeometries = {
  GeometryType::kStraight, GeometryType::kCurved};

inline std::string_view to_string(SemanticCondition c)
{
  return c == SemanticCondition::kWithMap ? "with_map" : "without_map";
}

inline std::string_view to_string(DensityLevel d)
{
  switch (d) {
    case DensityLevel::kSingle: return "single";
    case DensityLevel::kFew: return "few";
    case DensityLevel::kMedium: return "medium";
    case DensityLevel::kMany: return "many";
  }
  return "single";
}

inline std::string_view to_string(GeometryType g)
{
  return g == GeometryType::kStraight ? "straight" : "curved";
}

inline std::optional<SemanticCondition> condition_from_string(std::string_view s)
{
  if (s == "with_map") return SemanticCondition::kWithMap;
  if (s == "without_map") return SemanticCondition::kWithoutMap;
  return std::nullopt;
}

inline std::optional<DensityLevel> density_from_string(std::string_view s)
{
  for (auto d : kAllDensities) {
    if (to_string(d) == s) return d;
  }
  return std::nullopt;
}

inline std::optional<GeometryType> geometry_from_string(std::string_view s)
{
  for (auto g : kAllGeometries) {
    if (to_string(g) == s) return g;
  }
  return std::nullopt;
}

/// Index of one scenario subset. Ordered by (sigma, rho, tau) in
/// declaration order of each axis.
struct StratumKey
{
  SemanticCondition sigma = SemanticCondition::kWithMap;
  DensityLevel rho = DensityLevel::kSingle;
  GeometryType tau = GeometryType::kStraight;

  friend auto operator<=>(const StratumKey &, const StratumKey &) = default;
};

/// (rho, tau) cell with sigma folded out; sigma is an evaluation condition,
/// not a scene property.
struct CellKey
{
  DensityLevel rho = DensityLevel::kSingle;
  GeometryType tau = GeometryType::kStraight;

  friend auto operator<=>(const CellKey &, const CellKey &) = default;
};

inline std::vector<StratumKey> all_strata()
{
  std::vector<StratumKey> keys;
  for (auto s : kAllConditions) {
    for (auto r : kAllDensities) {
      for (auto t : kAllGeometries) {
        keys.push_back({s, r, t});
      }
    }
  }
  return keys;
}

////////////////////////////////////////////////////////////////////////////////
// Predictions and results

struct AgentPrediction
{
  std::string agent_id;
  std::vector<Trajectory> samples;  // K trajectories of T points

  friend bool operator==(const AgentPrediction &, const AgentPrediction &) = default;
};

/// K sampled futures per agent for one scene, produced by model `model_id`
/// under one semantic condition.
struct PredictionSet
{
  std::string scene_id;
  std::string model_id;
  SemanticCondition condition = SemanticCondition::kWithMap;
  std::vector<AgentPrediction> per_agent;

  std::size_t k() const noexcept
  {
    return per_agent.empty() ? 0 : per_agent.front().samples.size();
  }

  friend bool operator==(const PredictionSet &, const PredictionSet &) = default;
};

struct MetricRecord
{
  std::string scene_id;
  std::string agent_id;
  SemanticCondition condition = SemanticCondition::kWithMap;
  double ade = 0.0;
  double fde = 0.0;

  friend bool operator==(const MetricRecord &, const MetricRecord &) = default;
};

/// Which rows a report contains.
enum class Grouping { kOverall, kDensity, kGeometry, kFull };

inline constexpr std::array<Grouping, 4> kAllGroupings = {
  Grouping::kOverall, Grouping::kDensity, Grouping::kGeometry, Grouping::kFull};

inline std::string_view to_string(Grouping g)
{
  switch (g) {
    case Grouping::kOverall: return "overall";
    case Grouping::kDensity: return "density";
    case Grouping::kGeometry: return "geometry";
    case Grouping::kFull: return "full";
  }
  return "overall";
}

inline std::optional<Grouping> grouping_from_string(std::string_view s)
{
  for (auto g : kAllGroupings) {
    if (to_string(g) == s) return g;
  }
  return std::nullopt;
}

/// Error columns of one stratum. Present only when the stratum has samples.
struct StratumMetrics
{
  double ade_o = 0.0;
  double ade_w = 0.0;
  double fde_o = 0.0;
  double fde_w = 0.0;
  std::optional<double> mie_a;  // unset when the MIE denominator is not positive
  std::optional<double> mie_f;
};

/// One row of a stratified report. An unset rho/tau means that axis is
/// aggregated over (e.g. the overall row has neither).
struct StratumReport
{
  std::optional<DensityLevel> rho;
  std::optional<GeometryType> tau;
  std::size_t sample_size = 0;
  std::optional<StratumMetrics> metrics;

  std::string label() const
  {
    if (!rho && !tau) return "overall";
    if (rho && !tau) return std::string(to_string(*rho));
    if (!rho && tau) return std::string(to_string(*tau));
    return std::string(to_string(*rho)) + "/" + std::string(to_string(*tau));
  }
};

/// RFC 4180 quoting for free-form identifiers.
inline std::string csv_field(std::string_view s)
{
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

////////////////////////////////////////////////////////////////////////////////
// Validation

namespace detail
{
inline std::string indexed(std::string_view base, std::size_t i)
{
  return std::string(base) + "[" + std::to_string(i) + "]";
}

inline void check_points(
  const Trajectory & points, const std::string & field, std::vector<Violation> & out)
{
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].finite()) {
      out.push_back({indexed(field, i), "coordinate must be finite"});
    }
  }
}
}  // namespace detail

inline std::vector<Violation> validate_lane(const Lane & lane, const std::string & field)
{
  std::vector<Violation> out;
  if (lane.lane_id.empty()) {
    out.push_back({field + ".lane_id", "must be non-empty"});
  }
  if (lane.centerline.size() < 2) {
    out.push_back({field + ".centerline", "must have at least 2 points"});
  }
  detail::check_points(lane.centerline, field + ".centerline", out);
  for (std::size_t i = 1; i < lane.centerline.size(); ++i) {
    if (distance(lane.centerline[i - 1], lane.centerline[i]) <= kMinPointSeparation) {
      out.push_back(
        {detail::indexed(field + ".centerline", i), "consecutive points must be distinct"});
    }
  }
  return out;
}

/**
 * @brief Check every Scene invariant against the expected horizon.
 *
 * Returns an empty list iff the scene is well formed. Each violation names
 * the offending field path and the rule it breaks.
 */
inline std::vector<Violation> validate_scene(const Scene & scene, const Horizon & horizon = {})
{
  std::vector<Violation> out;
  if (scene.scene_id.empty()) {
    out.push_back({"scene_id", "must be non-empty"});
  }
  if (!(std::isfinite(scene.dt) && scene.dt > 0.0)) {
    out.push_back({"dt", "must be finite and > 0"});
  }
  if (scene.agents.empty()) {
    out.push_back({"agents", "must contain at least 1 agent"});
  }

  std::set<std::string_view> seen;
  for (std::size_t i = 0; i < scene.agents.size(); ++i) {
    const auto & agent = scene.agents[i];
    const std::string field = detail::indexed("agents", i);
    if (agent.agent_id.empty()) {
      out.push_back({field + ".agent_id", "must be non-empty"});
    } else if (!seen.insert(agent.agent_id).second) {
      out.push_back({field + ".agent_id", "agent_id '" + agent.agent_id + "' must be unique"});
    }
    if (agent.history.size() != horizon.history) {
      out.push_back(
        {field + ".history", "history length " + std::to_string(agent.history.size()) +
                               " != " + std::to_string(horizon.history)});
    }
    if (agent.future.size() != horizon.future) {
      out.push_back(
        {field + ".future", "future length " + std::to_string(agent.future.size()) +
                              " != " + std::to_string(horizon.future)});
    }
    detail::check_points(agent.history, field + ".history", out);
    detail::check_points(agent.future, field + ".future", out);
  }

  if (scene.map) {
    std::set<std::string_view> lane_ids;
    for (std::size_t i = 0; i < scene.map->lanes.size(); ++i) {
      const auto & lane = scene.map->lanes[i];
      const std::string field = detail::indexed("map.lanes", i);
      auto lane_violations = validate_lane(lane, field);
      out.insert(out.end(), lane_violations.begin(), lane_violations.end());
      if (!lane.lane_id.empty() && !lane_ids.insert(lane.lane_id).second) {
        out.push_back({field + ".lane_id", "lane_id '" + lane.lane_id + "' must be unique"});
      }
    }
  }
  return out;
}

}  // namespace predsafe

#endif  // PREDSAFE__SCENE_MODEL_HPP_
