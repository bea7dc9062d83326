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

// Line-delimited JSON interchange for scenes and prediction sets.
//
//   scene:      {"scene_id", "dt", "agents": [{"agent_id", "history", "future"}],
//                "map": {"lanes": [{"lane_id", "centerline"}]} | null}
//   prediction: {"scene_id", "model_id", "condition",
//                "predictions": [{"agent_id", "samples": [[[x, y] x T] x K]}]}
//
// Both accept an optional "format": 1. Unknown fields are rejected.

#ifndef PREDSAFE__INGEST_HPP_
#define PREDSAFE__INGEST_HPP_

#include "predsafe/parallel.hpp"
#include "predsafe/scene_model.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace predsafe
{
namespace ingest
{

using Json = nlohmann::ordered_json;

namespace detail
{

[[noreturn]] inline void schema(const std::string & field, const std::string & message)
{
  throw Error(ErrorKind::kSchema, message, field);
}

[[noreturn]] inline void semantic(const std::string & field, const std::string & message)
{
  throw Error(ErrorKind::kSemantic, message, field);
}

inline std::string join(const std::string & base, std::string_view key)
{
  return base.empty() ? std::string(key) : base + "." + std::string(key);
}

inline std::string at(const std::string & base, std::size_t i)
{
  return base + "[" + std::to_string(i) + "]";
}

inline std::string type_name(const Json & j) { return j.type_name(); }

/// Parses text, rejecting duplicate object keys (which the JSON library
/// would otherwise collapse silently).
inline Json parse_text(std::string_view text)
{
  std::vector<std::set<std::string>> key_stack;
  std::string duplicate;
  Json::parser_callback_t on_event =
    [&](int /*depth*/, Json::parse_event_t event, Json & parsed) -> bool {
    switch (event) {
      case Json::parse_event_t::object_start:
        key_stack.emplace_back();
        break;
      case Json::parse_event_t::object_end:
        if (!key_stack.empty()) key_stack.pop_back();
        break;
      case Json::parse_event_t::key:
        if (!key_stack.empty() && parsed.is_string() &&
            !key_stack.back().insert(parsed.get<std::string>()).second && duplicate.empty()) {
          duplicate = parsed.get<std::string>();
        }
        break;
      default:
        break;
    }
    return true;
  };

  Json doc;
  try {
    doc = Json::parse(text.begin(), text.end(), on_event);
  } catch (const nlohmann::json::parse_error & e) {
    throw Error(
      ErrorKind::kSyntax, "malformed document at byte " + std::to_string(e.byte) + ": " + e.what());
  } catch (const nlohmann::json::out_of_range & e) {
    // Number literal outside the double range.
    throw Error(ErrorKind::kSemantic, std::string("non-finite number: ") + e.what());
  } catch (const nlohmann::json::exception & e) {
    throw Error(ErrorKind::kSyntax, e.what());
  }
  if (!duplicate.empty()) {
    schema(duplicate, "duplicate field '" + duplicate + "'");
  }
  return doc;
}

inline const Json & require_object(const Json & j, const std::string & field)
{
  if (!j.is_object()) schema(field, "expected object, got " + type_name(j));
  return j;
}

inline const Json & require_array(const Json & j, const std::string & field)
{
  if (!j.is_array()) schema(field, "expected array, got " + type_name(j));
  return j;
}

/// Rejects keys outside `allowed` and requires every key in `required`.
inline void check_keys(
  const Json & obj, const std::string & field, std::initializer_list<std::string_view> required,
  std::initializer_list<std::string_view> optional = {})
{
  for (const auto & item : obj.items()) {
    const auto & key = item.key();
    const bool known = std::find(required.begin(), required.end(), key) != required.end() ||
                       std::find(optional.begin(), optional.end(), key) != optional.end();
    if (!known) schema(join(field, key), "unknown field '" + key + "'");
  }
  for (auto key : required) {
    if (!obj.contains(key)) schema(join(field, key), "missing field '" + std::string(key) + "'");
  }
}

inline void check_format(const Json & obj)
{
  if (!obj.contains("format")) return;
  const auto & f = obj["format"];
  if (!f.is_number_integer() || f.get<long long>() != 1) {
    schema("format", "unsupported format version (expected 1)");
  }
}

inline std::string read_string(const Json & j, const std::string & field, bool non_empty = true)
{
  if (!j.is_string()) schema(field, "expected string, got " + type_name(j));
  auto s = j.get<std::string>();
  if (non_empty && s.empty()) semantic(field, "must be non-empty");
  return s;
}

inline bool is_non_finite_spelling(const std::string & s)
{
  std::string lower;
  for (char c : s) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (!lower.empty() && (lower[0] == '+' || lower[0] == '-')) lower.erase(0, 1);
  return lower == "nan" || lower == "inf" || lower == "infinity";
}

inline double read_number(const Json & j, const std::string & field)
{
  if (j.is_number()) {
    double v = j.get<double>();
    if (!std::isfinite(v)) semantic(field, "coordinate must be finite");
    return v;
  }
  if (j.is_string() && is_non_finite_spelling(j.get<std::string>())) {
    semantic(field, "coordinate must be finite, got \"" + j.get<std::string>() + "\"");
  }
  schema(field, "expected number, got " + type_name(j));
}

inline TrajPoint read_point(const Json & j, const std::string & field)
{
  require_array(j, field);
  if (j.size() != 2) schema(field, "expected [x, y], got " + std::to_string(j.size()) + " values");
  return {read_number(j[0], at(field, 0)), read_number(j[1], at(field, 1))};
}

inline Trajectory read_polyline(const Json & j, const std::string & field)
{
  require_array(j, field);
  Trajectory out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(read_point(j[i], at(field, i)));
  }
  return out;
}

inline Trajectory read_fixed(const Json & j, const std::string & field, std::size_t length)
{
  require_array(j, field);
  if (j.size() != length) {
    schema(
      field, "expected " + std::to_string(length) + " points, got " + std::to_string(j.size()));
  }
  return read_polyline(j, field);
}

inline Json write_point(const TrajPoint & p) { return Json::array({p.x, p.y}); }

inline Json write_polyline(const Trajectory & points)
{
  Json out = Json::array();
  for (const auto & p : points) out.push_back(write_point(p));
  return out;
}

}  // namespace detail

////////////////////////////////////////////////////////////////////////////////
// Scenes

inline Scene scene_from_json(const Json & doc, const Horizon & horizon = {})
{
  using namespace detail;
  require_object(doc, "");
  check_keys(doc, "", {"scene_id", "dt", "agents", "map"}, {"format"});
  check_format(doc);

  Scene scene;
  scene.scene_id = read_string(doc["scene_id"], "scene_id");
  if (!doc["dt"].is_number()) schema("dt", "expected number, got " + type_name(doc["dt"]));
  scene.dt = doc["dt"].get<double>();
  if (!(std::isfinite(scene.dt) && scene.dt > 0.0)) semantic("dt", "dt must be > 0");

  const auto & agents = require_array(doc["agents"], "agents");
  if (agents.empty()) schema("agents", "must contain at least 1 agent");
  std::set<std::string> agent_ids;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const std::string field = at("agents", i);
    const auto & a = require_object(agents[i], field);
    check_keys(a, field, {"agent_id", "history", "future"});
    AgentTrack track;
    track.agent_id = read_string(a["agent_id"], join(field, "agent_id"));
    if (!agent_ids.insert(track.agent_id).second) {
      semantic(join(field, "agent_id"), "duplicate agent_id '" + track.agent_id + "'");
    }
    track.history = read_fixed(a["history"], join(field, "history"), horizon.history);
    track.future = read_fixed(a["future"], join(field, "future"), horizon.future);
    scene.agents.push_back(std::move(track));
  }

  const auto & map = doc["map"];
  if (!map.is_null()) {
    require_object(map, "map");
    check_keys(map, "map", {"lanes"});
    const auto & lanes = require_array(map["lanes"], "map.lanes");
    SemanticMap semantic_map;
    for (std::size_t i = 0; i < lanes.size(); ++i) {
      const std::string field = at("map.lanes", i);
      const auto & l = require_object(lanes[i], field);
      check_keys(l, field, {"lane_id", "centerline"});
      Lane lane;
      lane.lane_id = read_string(l["lane_id"], join(field, "lane_id"));
      lane.centerline = read_polyline(l["centerline"], join(field, "centerline"));
      if (lane.centerline.size() < 2) {
        schema(join(field, "centerline"), "expected at least 2 points");
      }
      semantic_map.lanes.push_back(std::move(lane));
    }
    scene.map = std::move(semantic_map);
  }

  // Whatever remains (lane id uniqueness, repeated centerline points) is semantic.
  auto violations = validate_scene(scene, horizon);
  if (!violations.empty()) {
    semantic(violations.front().field, violations.front().rule);
  }
  return scene;
}

/**
 * @brief Parse one scene document.
 *
 * Throws predsafe::Error with kind kSyntax, kSchema or kSemantic; the
 * error's field() carries the offending field path.
 */
inline Scene parse_scene(std::string_view text, const Horizon & horizon = {})
{
  return scene_from_json(detail::parse_text(text), horizon);
}

inline Json scene_to_json(const Scene & scene)
{
  Json doc;
  doc["scene_id"] = scene.scene_id;
  doc["dt"] = scene.dt;
  Json agents = Json::array();
  for (const auto & a : scene.agents) {
    Json agent;
    agent["agent_id"] = a.agent_id;
    agent["history"] = detail::write_polyline(a.history);
    agent["future"] = detail::write_polyline(a.future);
    agents.push_back(std::move(agent));
  }
  doc["agents"] = std::move(agents);
  if (scene.map) {
    Json lanes = Json::array();
    for (const auto & l : scene.map->lanes) {
      Json lane;
      lane["lane_id"] = l.lane_id;
      lane["centerline"] = detail::write_polyline(l.centerline);
      lanes.push_back(std::move(lane));
    }
    doc["map"] = Json{{"lanes", std::move(lanes)}};
  } else {
    doc["map"] = nullptr;
  }
  return doc;
}

/// Single-line document; doubles are printed in shortest round-trip form.
inline std::string write_scene(const Scene & scene) { return scene_to_json(scene).dump(); }

////////////////////////////////////////////////////////////////////////////////
// Predictions

inline PredictionSet predictions_from_json(const Json & doc, const Horizon & horizon = {})
{
  using namespace detail;
  require_object(doc, "");
  check_keys(doc, "", {"scene_id", "model_id", "condition", "predictions"}, {"format"});
  check_format(doc);

  PredictionSet set;
  set.scene_id = read_string(doc["scene_id"], "scene_id");
  set.model_id = read_string(doc["model_id"], "model_id");
  const auto condition_text = read_string(doc["condition"], "condition");
  const auto condition = condition_from_string(condition_text);
  if (!condition) {
    schema("condition", "expected \"with_map\" or \"without_map\", got \"" + condition_text + "\"");
  }
  set.condition = *condition;

  const auto & preds = require_array(doc["predictions"], "predictions");
  if (preds.empty()) schema("predictions", "must contain at least 1 agent");
  std::set<std::string> agent_ids;
  std::size_t k = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const std::string field = at("predictions", i);
    const auto & p = require_object(preds[i], field);
    check_keys(p, field, {"agent_id", "samples"});
    AgentPrediction agent;
    agent.agent_id = read_string(p["agent_id"], join(field, "agent_id"));
    if (!agent_ids.insert(agent.agent_id).second) {
      semantic(join(field, "agent_id"), "duplicate agent_id '" + agent.agent_id + "'");
    }
    const std::string samples_field = join(field, "samples");
    const auto & samples = require_array(p["samples"], samples_field);
    if (samples.empty()) schema(samples_field, "K must be >= 1");
    if (i == 0) {
      k = samples.size();
    } else if (samples.size() != k) {
      throw Error(
        ErrorKind::kNonUniformK,
        "agent '" + agent.agent_id + "' has K=" + std::to_string(samples.size()) +
          " but earlier agents have K=" + std::to_string(k),
        samples_field);
    }
    for (std::size_t s = 0; s < samples.size(); ++s) {
      agent.samples.push_back(read_fixed(samples[s], at(samples_field, s), horizon.future));
    }
    set.per_agent.push_back(std::move(agent));
  }
  if (horizon.samples != 0 && k != horizon.samples) {
    schema(
      "predictions",
      "expected K=" + std::to_string(horizon.samples) + " samples, got " + std::to_string(k));
  }
  return set;
}

/// Parse one prediction document. Same error kinds as parse_scene, plus
/// kNonUniformK when agents carry different sample counts.
inline PredictionSet parse_predictions(std::string_view text, const Horizon & horizon = {})
{
  return predictions_from_json(detail::parse_text(text), horizon);
}

inline Json predictions_to_json(const PredictionSet & set)
{
  Json doc;
  doc["scene_id"] = set.scene_id;
  doc["model_id"] = set.model_id;
  doc["condition"] = std::string(to_string(set.condition));
  Json preds = Json::array();
  for (const auto & a : set.per_agent) {
    Json samples = Json::array();
    for (const auto & s : a.samples) samples.push_back(detail::write_polyline(s));
    Json agent;
    agent["agent_id"] = a.agent_id;
    agent["samples"] = std::move(samples);
    preds.push_back(std::move(agent));
  }
  doc["predictions"] = std::move(preds);
  return doc;
}

inline std::string write_predictions(const PredictionSet & set)
{
  return predictions_to_json(set).dump();
}

////////////////////////////////////////////////////////////////////////////////
// Cross-document checks

/// Empty iff scene ids match, every predicted agent exists in the scene and
/// every sample has the scene's future length.
inline std::vector<Violation> validate_pair(const Scene & scene, const PredictionSet & preds)
{
  std::vector<Violation> out;
  if (scene.scene_id != preds.scene_id) {
    out.push_back(
      {"scene_id", "prediction scene_id '" + preds.scene_id + "' does not match scene '" +
                     scene.scene_id + "'"});
  }
  for (std::size_t i = 0; i < preds.per_agent.size(); ++i) {
    const auto & p = preds.per_agent[i];
    const std::string field = "predictions[" + std::to_string(i) + "]";
    const AgentTrack * track = scene.find_agent(p.agent_id);
    if (track == nullptr) {
      out.push_back({field + ".agent_id", "unknown agent '" + p.agent_id + "'"});
      continue;
    }
    for (std::size_t s = 0; s < p.samples.size(); ++s) {
      if (p.samples[s].size() != track->future.size()) {
        out.push_back(
          {field + ".samples[" + std::to_string(s) + "]",
           "horizon mismatch: prediction T=" + std::to_string(p.samples[s].size()) +
             " vs scene T=" + std::to_string(track->future.size())});
        break;
      }
    }
  }
  return out;
}

////////////////////////////////////////////////////////////////////////////////
// Corpus files

/// Non-blank lines of a jsonl file, with 1-based line numbers.
struct Line
{
  std::size_t number;
  std::string text;
};

inline std::vector<Line> read_lines(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::kUsage, "cannot open file", "", path.string());
  }
  std::vector<Line> lines;
  std::string text;
  std::size_t number = 0;
  while (std::getline(in, text)) {
    ++number;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    lines.push_back({number, std::move(text)});
  }
  return lines;
}

template <typename T, typename ParseFn>
std::vector<std::pair<T, std::string>> parse_lines(
  const std::filesystem::path & path, std::size_t jobs, ParseFn parse)
{
  const auto lines = read_lines(path);
  std::vector<std::pair<T, std::string>> out(lines.size());
  parallel_for(lines.size(), jobs, [&](std::size_t i) {
    const std::string where = path.string() + ":" + std::to_string(lines[i].number);
    try {
      out[i] = {parse(lines[i].text), where};
    } catch (const Error & e) {
      throw e.at_document(where);
    }
  });
  return out;
}

/// Which files make up one evaluation run.
struct CorpusManifest
{
  std::vector<std::filesystem::path> scene_files;
  std::map<SemanticCondition, std::vector<std::filesystem::path>> prediction_files;
};

/// Scenes sorted by scene_id, predictions per condition sorted by scene_id.
struct Corpus
{
  std::vector<Scene> scenes;
  std::map<SemanticCondition, std::vector<PredictionSet>> predictions;
  std::string model_id;

  const Scene * find_scene(std::string_view scene_id) const
  {
    auto it = std::lower_bound(
      scenes.begin(), scenes.end(), scene_id,
      [](const Scene & s, std::string_view id) { return s.scene_id < id; });
    return (it != scenes.end() && it->scene_id == scene_id) ? &*it : nullptr;
  }
};

inline std::vector<Scene> load_scenes(
  const std::vector<std::filesystem::path> & files, const Horizon & horizon, std::size_t jobs = 1)
{
  std::vector<std::pair<Scene, std::string>> parsed;
  for (const auto & f : files) {
    auto part = parse_lines<Scene>(f, jobs, [&](const std::string & t) {
      return parse_scene(t, horizon);
    });
    std::move(part.begin(), part.end(), std::back_inserter(parsed));
  }
  std::stable_sort(parsed.begin(), parsed.end(), [](const auto & a, const auto & b) {
    return a.first.scene_id < b.first.scene_id;
  });
  for (std::size_t i = 1; i < parsed.size(); ++i) {
    if (parsed[i].first.scene_id == parsed[i - 1].first.scene_id) {
      throw Error(
        ErrorKind::kValidation,
        "duplicate scene_id '" + parsed[i].first.scene_id + "' (first seen at " +
          parsed[i - 1].second + ")",
        "scene_id", parsed[i].second);
    }
  }
  std::vector<Scene> scenes;
  scenes.reserve(parsed.size());
  for (auto & p : parsed) scenes.push_back(std::move(p.first));
  return scenes;
}

/**
 * @brief Load and cross-validate a full corpus.
 *
 * Every prediction document must name a loaded scene, carry the condition of
 * the file group it came from, and pass validate_pair. All prediction
 * documents must share one model_id. Failures are kValidation errors
 * anchored to file:line.
 */
inline Corpus load_corpus(
  const CorpusManifest & manifest, const Horizon & horizon, std::size_t jobs = 1)
{
  Corpus corpus;
  corpus.scenes = load_scenes(manifest.scene_files, horizon, jobs);

  for (const auto & [condition, files] : manifest.prediction_files) {
    std::vector<std::pair<PredictionSet, std::string>> parsed;
    for (const auto & f : files) {
      auto part = parse_lines<PredictionSet>(f, jobs, [&](const std::string & t) {
        return parse_predictions(t, horizon);
      });
      std::move(part.begin(), part.end(), std::back_inserter(parsed));
    }
    for (const auto & [set, where] : parsed) {
      if (set.condition != condition) {
        throw Error(
          ErrorKind::kValidation,
          "document has condition '" + std::string(to_string(set.condition)) +
            "' but was supplied as " + std::string(to_string(condition)) + " predictions",
          "condition", where);
      }
      if (corpus.model_id.empty()) {
        corpus.model_id = set.model_id;
      } else if (set.model_id != corpus.model_id) {
        throw Error(
          ErrorKind::kValidation,
          "model_id '" + set.model_id + "' differs from '" + corpus.model_id + "'", "model_id",
          where);
      }
      const Scene * scene = corpus.find_scene(set.scene_id);
      if (scene == nullptr) {
        throw Error(
          ErrorKind::kValidation, "scene_id '" + set.scene_id + "' not found in scene corpus",
          "scene_id", where);
      }
      auto violations = validate_pair(*scene, set);
      if (!violations.empty()) {
        throw Error(
          ErrorKind::kValidation, violations.front().rule, violations.front().field, where);
      }
    }
    std::stable_sort(parsed.begin(), parsed.end(), [](const auto & a, const auto & b) {
      return a.first.scene_id < b.first.scene_id;
    });
    auto & sets = corpus.predictions[condition];
    for (std::size_t i = 0; i < parsed.size(); ++i) {
      if (!sets.empty() && parsed[i].first.scene_id == sets.back().scene_id) {
        throw Error(
          ErrorKind::kValidation,
          "duplicate " + std::string(to_string(condition)) + " predictions for scene '" +
            parsed[i].first.scene_id + "'",
          "scene_id", parsed[i].second);
      }
      sets.push_back(std::move(parsed[i].first));
    }
  }
  return corpus;
}

}  // namespace ingest
}  // namespace predsafe

#endif  // PREDSAFE__INGEST_HPP_
