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

#ifndef PREDSAFE__REPORT_HPP_
#define PREDSAFE__REPORT_HPP_

#include "predsafe/classify.hpp"
#include "predsafe/ingest.hpp"
#include "predsafe/metrics.hpp"
#include "predsafe/scene_model.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace predsafe
{
namespace report
{

enum class TableFormat { kCsv, kMarkdown };

inline std::optional<TableFormat> format_from_string(std::string_view s)
{
  if (s == "csv") return TableFormat::kCsv;
  if (s == "markdown" || s == "md") return TableFormat::kMarkdown;
  return std::nullopt;
}

inline std::string_view extension(TableFormat f) { return f == TableFormat::kCsv ? "csv" : "md"; }

namespace detail
{
inline std::string fixed4(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

inline std::string fixed4(const std::optional<double> & v) { return v ? fixed4(*v) : "-"; }

/// Exact decimal form for cached values (17 significant digits round-trip).
inline std::string exact(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <typename T>
int rank_of(const std::optional<T> & v)
{
  return v ? 1 + static_cast<int>(*v) : 0;
}
}  // namespace detail

inline constexpr std::array<std::string_view, 8> kTableColumns = {
  "group", "sample_size", "ADE_o", "ADE_w", "FDE_o", "FDE_w", "MIE_A", "MIE_F"};

/**
 * @brief Render report rows as CSV or a markdown table.
 *
 * Rows are sorted overall first, then by rho, then by tau. Numbers use four
 * decimals; absent metrics render as "-".
 */
inline std::string render_table(std::span<const StratumReport> reports, TableFormat format)
{
  std::vector<const StratumReport *> rows;
  for (const auto & r : reports) rows.push_back(&r);
  std::stable_sort(rows.begin(), rows.end(), [](const StratumReport * a, const StratumReport * b) {
    return std::make_tuple(detail::rank_of(a->rho), detail::rank_of(a->tau)) <
           std::make_tuple(detail::rank_of(b->rho), detail::rank_of(b->tau));
  });

  auto cells_of = [](const StratumReport & r) {
    std::vector<std::string> cells{r.label(), std::to_string(r.sample_size)};
    if (r.metrics) {
      const auto & m = *r.metrics;
      for (double v : {m.ade_o, m.ade_w, m.fde_o, m.fde_w}) cells.push_back(detail::fixed4(v));
      cells.push_back(detail::fixed4(m.mie_a));
      cells.push_back(detail::fixed4(m.mie_f));
    } else {
      cells.insert(cells.end(), 6, "-");
    }
    return cells;
  };

  std::string out;
  if (format == TableFormat::kCsv) {
    for (std::size_t i = 0; i < kTableColumns.size(); ++i) {
      out += (i ? "," : "") + std::string(kTableColumns[i]);
    }
    out += "\n";
    for (const auto * r : rows) {
      const auto cells = cells_of(*r);
      for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
      out += "\n";
    }
    return out;
  }

  out += "|";
  for (auto c : kTableColumns) out += " " + std::string(c) + " |";
  out += "\n|---|";
  for (std::size_t i = 1; i < kTableColumns.size(); ++i) out += "---:|";
  out += "\n";
  for (const auto * r : rows) {
    out += "|";
    for (const auto & c : cells_of(*r)) out += " " + c + " |";
    out += "\n";
  }
  return out;
}

////////////////////////////////////////////////////////////////////////////////
// Failure flagging

struct FailureConfig
{
  std::optional<double> threshold_m = 10.0;  // FDE above this is flagged
  std::size_t top_n = 20;                    // plus the N largest FDEs; 0 disables
};

struct FailureCase
{
  std::string scene_id;
  std::string agent_id;
  SemanticCondition condition = SemanticCondition::kWithMap;
  double fde = 0.0;
  double ade = 0.0;
  std::optional<CellKey> stratum;
  std::size_t rank = 0;  // 1-based, by descending FDE
};

/**
 * @brief Union of records with FDE above the threshold and the top_n
 * records by FDE, sorted by FDE descending with (scene_id, agent_id,
 * condition) as tie-break. Strata are filled in when a partition is given.
 */
inline std::vector<FailureCase> flag_failures(
  std::span<const MetricRecord> records, const FailureConfig & cfg,
  const classify::Partition * partition = nullptr)
{
  const bool use_threshold = cfg.threshold_m.has_value();
  if (use_threshold && !(*cfg.threshold_m > 0.0)) {
    throw Error(ErrorKind::kUsage, "failure threshold must be > 0", "failure_threshold_m");
  }
  if (!use_threshold && cfg.top_n == 0) {
    throw Error(ErrorKind::kUsage, "need a failure threshold or top_n >= 1", "failure_top_n");
  }

  std::vector<const MetricRecord *> ordered;
  for (const auto & r : records) ordered.push_back(&r);
  std::sort(ordered.begin(), ordered.end(), [](const MetricRecord * a, const MetricRecord * b) {
    if (a->fde != b->fde) return a->fde > b->fde;
    return std::tie(a->scene_id, a->agent_id, a->condition) <
           std::tie(b->scene_id, b->agent_id, b->condition);
  });

  std::vector<FailureCase> out;
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    const auto & r = *ordered[i];
    const bool selected = i < cfg.top_n || (use_threshold && r.fde > *cfg.threshold_m);
    if (!selected) continue;
    FailureCase c{r.scene_id, r.agent_id, r.condition, r.fde, r.ade, std::nullopt, out.size() + 1};
    if (partition != nullptr) {
      if (const auto * cls = partition->find(r.scene_id)) c.stratum = cls->cell();
    }
    out.push_back(std::move(c));
  }
  return out;
}

inline std::string failures_csv(std::span<const FailureCase> cases)
{
  std::string out = "rank,scene_id,agent_id,condition,rho,tau,ade,fde\n";
  for (const auto & c : cases) {
    out += std::to_string(c.rank) + "," + csv_field(c.scene_id) + "," + csv_field(c.agent_id) +
           "," + std::string(to_string(c.condition)) + "," +
           (c.stratum ? std::string(to_string(c.stratum->rho)) : "-") + "," +
           (c.stratum ? std::string(to_string(c.stratum->tau)) : "-") + "," +
           detail::fixed4(c.ade) + "," + detail::fixed4(c.fde) + "\n";
  }
  return out;
}

////////////////////////////////////////////////////////////////////////////////
// Metric record cache

namespace detail
{
/// Splits one CSV line, honoring RFC 4180 quotes.
inline std::vector<std::string> split_csv(std::string_view line)
{
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back() += c;
    }
  }
  return fields;
}

inline double parse_double(const std::string & s, const std::string & where)
{
  char * end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
    throw Error(ErrorKind::kSchema, "expected a finite number, got '" + s + "'", "", where);
  }
  return v;
}
}  // namespace detail

inline constexpr std::string_view kRecordsHeader = "scene_id,agent_id,condition,rho,tau,ade,fde";

/// Per-agent records with their strata, at full precision, so reports can be
/// rebuilt without re-reading the corpus.
inline std::string records_csv(
  std::span<const MetricRecord> records, const classify::Partition & partition)
{
  std::string out = std::string(kRecordsHeader) + "\n";
  for (const auto & r : records) {
    const auto * cls = partition.find(r.scene_id);
    if (cls == nullptr) {
      throw Error(ErrorKind::kInternal, "record scene '" + r.scene_id + "' not in partition");
    }
    out += csv_field(r.scene_id) + "," + csv_field(r.agent_id) + "," +
           std::string(to_string(r.condition)) + "," + std::string(to_string(cls->rho)) + "," +
           std::string(to_string(cls->tau)) + "," + detail::exact(r.ade) + "," +
           detail::exact(r.fde) + "\n";
  }
  return out;
}

struct CachedRecords
{
  std::vector<MetricRecord> records;
  classify::Partition partition;  // only scenes that have records
};

inline CachedRecords parse_records_csv(std::string_view text, const std::string & document = {})
{
  CachedRecords out;
  std::vector<classify::SceneClass> classes;
  std::map<std::string, CellKey> cell_of;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header_seen = false;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const std::string where = document + ":" + std::to_string(line_no);
    if (line.find_first_not_of(" \r\t") == std::string_view::npos) continue;
    if (!header_seen) {
      std::string header(line);
      if (!header.empty() && header.back() == '\r') header.pop_back();
      if (header != kRecordsHeader) {
        throw Error(ErrorKind::kSchema, "unexpected header '" + header + "'", "", where);
      }
      header_seen = true;
      continue;
    }
    const auto f = detail::split_csv(line);
    if (f.size() != 7) {
      throw Error(ErrorKind::kSchema, "expected 7 fields, got " + std::to_string(f.size()), "", where);
    }
    const auto condition = condition_from_string(f[2]);
    const auto rho = density_from_string(f[3]);
    const auto tau = geometry_from_string(f[4]);
    if (!condition || !rho || !tau || f[0].empty() || f[1].empty()) {
      throw Error(ErrorKind::kSchema, "bad identifier or stratum field", "", where);
    }
    MetricRecord r{f[0], f[1], *condition, detail::parse_double(f[5], where),
                   detail::parse_double(f[6], where)};
    if (r.ade < 0.0 || r.fde < 0.0) {
      throw Error(ErrorKind::kSemantic, "errors must be >= 0", "", where);
    }
    const auto [known, inserted] = cell_of.try_emplace(r.scene_id, CellKey{*rho, *tau});
    if (inserted) {
      classes.push_back({r.scene_id, 0, *rho, *tau, 0.0});
    } else if (known->second != CellKey{*rho, *tau}) {
      throw Error(
        ErrorKind::kValidation, "scene '" + r.scene_id + "' listed under two strata", "", where);
    }
    out.records.push_back(std::move(r));
  }
  if (!header_seen) {
    throw Error(ErrorKind::kSchema, "missing header", "", document);
  }
  std::sort(out.records.begin(), out.records.end(), metrics::record_less);
  out.partition = classify::partition_from_classes(std::move(classes));
  return out;
}

////////////////////////////////////////////////////////////////////////////////
// Plot bundles

struct PlotErrors
{
  std::string agent_id;
  SemanticCondition condition = SemanticCondition::kWithMap;
  double ade = 0.0;
  double fde = 0.0;

  friend bool operator==(const PlotErrors &, const PlotErrors &) = default;
};

/// Everything an external plotter needs to overlay one scene: lanes, ground
/// truth, sampled futures per condition and per-agent errors.
struct PlotBundle
{
  std::string scene_id;
  std::vector<Lane> lanes;
  std::vector<AgentTrack> truth;
  std::optional<std::vector<AgentPrediction>> with_map;
  std::optional<std::vector<AgentPrediction>> without_map;
  std::vector<PlotErrors> errors;

  friend bool operator==(const PlotBundle &, const PlotBundle &) = default;
};

inline PlotBundle export_plot_bundle(
  const Scene & scene, const PredictionSet * preds_with, const PredictionSet * preds_without,
  std::span<const MetricRecord> records)
{
  PlotBundle b;
  b.scene_id = scene.scene_id;
  if (scene.map) b.lanes = scene.map->lanes;
  b.truth = scene.agents;
  if (preds_with != nullptr && preds_with->scene_id == scene.scene_id) {
    b.with_map = preds_with->per_agent;
  }
  if (preds_without != nullptr && preds_without->scene_id == scene.scene_id) {
    b.without_map = preds_without->per_agent;
  }
  for (const auto & r : records) {
    if (r.scene_id == scene.scene_id && scene.find_agent(r.agent_id) != nullptr) {
      b.errors.push_back({r.agent_id, r.condition, r.ade, r.fde});
    }
  }
  std::sort(b.errors.begin(), b.errors.end(), [](const PlotErrors & a, const PlotErrors & c) {
    return std::tie(a.condition, a.agent_id) < std::tie(c.condition, c.agent_id);
  });
  return b;
}

inline ingest::Json plot_bundle_to_json(const PlotBundle & b)
{
  using ingest::Json;
  auto polyline = [](const Trajectory & t) {
    Json out = Json::array();
    for (const auto & p : t) out.push_back(Json::array({p.x, p.y}));
    return out;
  };
  auto samples = [&](const std::optional<std::vector<AgentPrediction>> & preds) -> Json {
    if (!preds) return nullptr;
    Json out = Json::array();
    for (const auto & a : *preds) {
      Json s = Json::array();
      for (const auto & t : a.samples) s.push_back(polyline(t));
      out.push_back(Json{{"agent_id", a.agent_id}, {"samples", std::move(s)}});
    }
    return out;
  };

  Json doc;
  doc["scene_id"] = b.scene_id;
  Json lanes = Json::array();
  for (const auto & l : b.lanes) {
    lanes.push_back(Json{{"lane_id", l.lane_id}, {"centerline", polyline(l.centerline)}});
  }
  doc["lanes"] = std::move(lanes);
  Json truth = Json::array();
  for (const auto & a : b.truth) {
    truth.push_back(Json{
      {"agent_id", a.agent_id}, {"history", polyline(a.history)}, {"future", polyline(a.future)}});
  }
  doc["truth"] = std::move(truth);
  doc["samples"] = Json{{"with_map", samples(b.with_map)}, {"without_map", samples(b.without_map)}};
  Json errors = Json::array();
  for (const auto & e : b.errors) {
    errors.push_back(Json{
      {"agent_id", e.agent_id},
      {"condition", std::string(to_string(e.condition))},
      {"ade", e.ade},
      {"fde", e.fde}});
  }
  doc["errors"] = std::move(errors);
  return doc;
}

inline std::string write_plot_bundle(const PlotBundle & b)
{
  return plot_bundle_to_json(b).dump(2) + "\n";
}

/// Strict reader for the bundle schema, mirroring the ingest parsers.
inline PlotBundle parse_plot_bundle(std::string_view text)
{
  using namespace ingest::detail;
  const auto doc = parse_text(text);
  require_object(doc, "");
  check_keys(doc, "", {"scene_id", "lanes", "truth", "samples", "errors"});

  PlotBundle b;
  b.scene_id = read_string(doc["scene_id"], "scene_id");
  const auto & lanes = require_array(doc["lanes"], "lanes");
  for (std::size_t i = 0; i < lanes.size(); ++i) {
    const std::string field = at("lanes", i);
    check_keys(require_object(lanes[i], field), field, {"lane_id", "centerline"});
    b.lanes.push_back(
      {read_string(lanes[i]["lane_id"], join(field, "lane_id")),
       read_polyline(lanes[i]["centerline"], join(field, "centerline"))});
  }
  const auto & truth = require_array(doc["truth"], "truth");
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const std::string field = at("truth", i);
    check_keys(require_object(truth[i], field), field, {"agent_id", "history", "future"});
    b.truth.push_back(
      {read_string(truth[i]["agent_id"], join(field, "agent_id")),
       read_polyline(truth[i]["history"], join(field, "history")),
       read_polyline(truth[i]["future"], join(field, "future"))});
  }
  const auto & samples = require_object(doc["samples"], "samples");
  check_keys(samples, "samples", {"with_map", "without_map"});
  auto read_group = [&](const char * key) -> std::optional<std::vector<AgentPrediction>> {
    const std::string field = join("samples", key);
    const auto & g = samples[key];
    if (g.is_null()) return std::nullopt;
    require_array(g, field);
    std::vector<AgentPrediction> out;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const std::string af = at(field, i);
      check_keys(require_object(g[i], af), af, {"agent_id", "samples"});
      AgentPrediction a;
      a.agent_id = read_string(g[i]["agent_id"], join(af, "agent_id"));
      const auto & s = require_array(g[i]["samples"], join(af, "samples"));
      for (std::size_t k = 0; k < s.size(); ++k) {
        a.samples.push_back(read_polyline(s[k], at(join(af, "samples"), k)));
      }
      out.push_back(std::move(a));
    }
    return out;
  };
  b.with_map = read_group("with_map");
  b.without_map = read_group("without_map");
  const auto & errors = require_array(doc["errors"], "errors");
  for (std::size_t i = 0; i < errors.size(); ++i) {
    const std::string field = at("errors", i);
    check_keys(require_object(errors[i], field), field, {"agent_id", "condition", "ade", "fde"});
    const auto cond_text = read_string(errors[i]["condition"], join(field, "condition"));
    const auto cond = condition_from_string(cond_text);
    if (!cond) schema(join(field, "condition"), "unknown condition '" + cond_text + "'");
    b.errors.push_back(
      {read_string(errors[i]["agent_id"], join(field, "agent_id")), *cond,
       read_number(errors[i]["ade"], join(field, "ade")),
       read_number(errors[i]["fde"], join(field, "fde"))});
  }
  return b;
}

}  // namespace report
}  // namespace predsafe

#endif  // PREDSAFE__REPORT_HPP_
