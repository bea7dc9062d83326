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

// Run configuration: `key = value` lines, '#' starts a comment. Unknown keys
// are rejected.

#ifndef PREDSAFE__CONFIG_HPP_
#define PREDSAFE__CONFIG_HPP_

#include "predsafe/classify.hpp"
#include "predsafe/metrics.hpp"
#include "predsafe/report.hpp"
#include "predsafe/scene_model.hpp"

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace predsafe
{

enum class PlotSelection { kNone, kFailures, kAll };

struct RunConfig
{
  Horizon horizon;
  classify::ClassifyConfig classify;
  metrics::MetricConfig metrics;
  report::FailureConfig failures;
  std::vector<Grouping> groupings = {
    Grouping::kOverall, Grouping::kDensity, Grouping::kGeometry, Grouping::kFull};
  report::TableFormat format = report::TableFormat::kCsv;
  PlotSelection plots = PlotSelection::kFailures;
  std::size_t jobs = 1;

  std::filesystem::path scenes;
  std::filesystem::path preds_with;
  std::filesystem::path preds_without;
  std::filesystem::path records;
  std::filesystem::path out;

  // synth
  std::string preset = "mixed_grid";
  std::uint64_t seed = 0;
  double synth_noise_m = 0.5;  // deviation of samples 2..K of the reference predictors
  std::string model_id = "reference";
};

namespace config_detail
{

inline std::string trim(std::string_view s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] inline void bad(const std::string & key, const std::string & message)
{
  throw Error(ErrorKind::kUsage, message, key);
}

inline std::uint64_t to_uint(const std::string & key, const std::string & v)
{
  std::uint64_t out = 0;
  const auto * end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (v.empty() || ec != std::errc() || ptr != end) bad(key, "expected unsigned integer, got '" + v + "'");
  return out;
}

inline double to_double(const std::string & key, const std::string & v)
{
  char * end = nullptr;
  const double out = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(out)) {
    bad(key, "expected number, got '" + v + "'");
  }
  return out;
}

inline std::vector<std::string> split(const std::string & v, char sep)
{
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

}  // namespace config_detail

/// Known configuration keys, in documentation order.
inline const std::vector<std::string_view> & config_keys()
{
  static const std::vector<std::string_view> keys = {
    "history", "future", "dt", "k",
    "density_bins", "curvature_threshold_deg", "curvature_window_m", "roi_radius_m",
    "k_aggregation", "weighting", "mie_denominator",
    "failure_threshold_m", "failure_top_n",
    "groupings", "format", "plots", "jobs",
    "scenes", "preds_with", "preds_without", "records", "out",
    "preset", "seed", "synth_noise_m", "model_id"};
  return keys;
}

/**
 * @brief Apply one `key = value` setting. Throws Error(kUsage) for unknown
 * keys and malformed values.
 */
inline void apply_setting(RunConfig & cfg, const std::string & key, const std::string & value)
{
  using namespace config_detail;
  if (key == "history") {
    cfg.horizon.history = to_uint(key, value);
  } else if (key == "future") {
    cfg.horizon.future = to_uint(key, value);
  } else if (key == "dt") {
    cfg.horizon.dt = to_double(key, value);
    if (!(cfg.horizon.dt > 0.0)) bad(key, "must be > 0");
  } else if (key == "k") {
    cfg.horizon.samples = to_uint(key, value);
  } else if (key == "density_bins") {
    // Lower bounds of the four bins, e.g. "1,2,4,9".
    const auto parts = split(value, ',');
    if (parts.size() != 4) bad(key, "expected 4 comma-separated lower bounds");
    for (std::size_t i = 0; i < 4; ++i) {
      cfg.classify.density_bins[i].lo = to_uint(key, parts[i]);
      cfg.classify.density_bins[i].hi =
        i + 1 < 4 ? to_uint(key, parts[i + 1]) : classify::kUnbounded;
    }
  } else if (key == "curvature_threshold_deg") {
    cfg.classify.curvature_threshold_deg = to_double(key, value);
  } else if (key == "curvature_window_m") {
    cfg.classify.curvature_window_m = to_double(key, value);
  } else if (key == "roi_radius_m") {
    cfg.classify.roi_radius_m = to_double(key, value);
  } else if (key == "k_aggregation") {
    if (value == "min_over_k") cfg.metrics.k_aggregation = metrics::KAggregation::kMinOverK;
    else if (value == "mean_over_k") cfg.metrics.k_aggregation = metrics::KAggregation::kMeanOverK;
    else bad(key, "expected min_over_k or mean_over_k");
  } else if (key == "weighting") {
    if (value == "agent") cfg.metrics.weighting = metrics::Weighting::kAgent;
    else if (value == "scene") cfg.metrics.weighting = metrics::Weighting::kScene;
    else bad(key, "expected agent or scene");
  } else if (key == "mie_denominator") {
    if (value == "without_map") cfg.metrics.mie_denominator = metrics::MieDenominator::kWithoutMap;
    else if (value == "with_map") cfg.metrics.mie_denominator = metrics::MieDenominator::kWithMap;
    else bad(key, "expected without_map or with_map");
  } else if (key == "failure_threshold_m") {
    if (value == "none") {
      cfg.failures.threshold_m.reset();
    } else {
      cfg.failures.threshold_m = to_double(key, value);
      if (!(*cfg.failures.threshold_m > 0.0)) bad(key, "must be > 0 (or 'none')");
    }
  } else if (key == "failure_top_n") {
    cfg.failures.top_n = to_uint(key, value);
  } else if (key == "groupings") {
    cfg.groupings.clear();
    for (const auto & g : split(value, ',')) {
      const auto parsed = grouping_from_string(g);
      if (!parsed) bad(key, "unknown grouping '" + g + "'");
      if (std::find(cfg.groupings.begin(), cfg.groupings.end(), *parsed) == cfg.groupings.end()) {
        cfg.groupings.push_back(*parsed);
      }
    }
    std::sort(cfg.groupings.begin(), cfg.groupings.end());
  } else if (key == "format") {
    const auto f = report::format_from_string(value);
    if (!f) bad(key, "expected csv or markdown");
    cfg.format = *f;
  } else if (key == "plots") {
    if (value == "none") cfg.plots = PlotSelection::kNone;
    else if (value == "failures") cfg.plots = PlotSelection::kFailures;
    else if (value == "all") cfg.plots = PlotSelection::kAll;
    else bad(key, "expected none, failures or all");
  } else if (key == "jobs") {
    cfg.jobs = to_uint(key, value);
    if (cfg.jobs == 0) bad(key, "must be >= 1");
  } else if (key == "scenes") {
    cfg.scenes = value;
  } else if (key == "preds_with") {
    cfg.preds_with = value;
  } else if (key == "preds_without") {
    cfg.preds_without = value;
  } else if (key == "records") {
    cfg.records = value;
  } else if (key == "out") {
    cfg.out = value;
  } else if (key == "preset") {
    cfg.preset = value;
  } else if (key == "seed") {
    cfg.seed = to_uint(key, value);
  } else if (key == "synth_noise_m") {
    cfg.synth_noise_m = to_double(key, value);
    if (cfg.synth_noise_m < 0.0) bad(key, "must be >= 0");
  } else if (key == "model_id") {
    if (value.empty()) bad(key, "must be non-empty");
    cfg.model_id = value;
  } else {
    bad(key, "unknown configuration key '" + key + "'");
  }
}

/// Parse config text into `cfg`. `document` names the source in errors.
inline void apply_config_text(RunConfig & cfg, std::string_view text, const std::string & document)
{
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = config_detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(
        ErrorKind::kUsage, "expected 'key = value'", "", document + ":" + std::to_string(line_no));
    }
    try {
      apply_setting(cfg, config_detail::trim(line.substr(0, eq)), config_detail::trim(line.substr(eq + 1)));
    } catch (const Error & e) {
      throw e.at_document(document + ":" + std::to_string(line_no));
    }
  }
}

inline void apply_config_file(RunConfig & cfg, const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kUsage, "cannot open config file", "", path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(cfg, ss.str(), path.string());
}

/// Cross-field checks that single settings cannot catch.
inline void validate_config(const RunConfig & cfg)
{
  const auto classify_violations = classify::validate_config(cfg.classify);
  if (!classify_violations.empty()) {
    throw Error(ErrorKind::kUsage, classify_violations.front().rule, classify_violations.front().field);
  }
  if (cfg.horizon.history < 2) {
    throw Error(ErrorKind::kUsage, "history must be >= 2", "history");
  }
  if (cfg.horizon.future < 1) {
    throw Error(ErrorKind::kUsage, "future must be >= 1", "future");
  }
  if (cfg.groupings.empty()) {
    throw Error(ErrorKind::kUsage, "at least one grouping required", "groupings");
  }
  if (!cfg.failures.threshold_m && cfg.failures.top_n == 0) {
    throw Error(ErrorKind::kUsage, "need failure_threshold_m or failure_top_n >= 1", "failure_top_n");
  }
}

}  // namespace predsafe

#endif  // PREDSAFE__CONFIG_HPP_
