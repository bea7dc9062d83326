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

#ifndef PREDSAFE__METRICS_HPP_
#define PREDSAFE__METRICS_HPP_

#include "predsafe/classify.hpp"
#include "predsafe/ingest.hpp"
#include "predsafe/parallel.hpp"
#include "predsafe/scene_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace predsafe
{
namespace metrics
{

enum class KAggregation { kMinOverK, kMeanOverK };
enum class Weighting { kAgent, kScene };
/// Which error goes under the square root of the MIE denominator.
enum class MieDenominator { kWithoutMap, kWithMap };

struct MetricConfig
{
  KAggregation k_aggregation = KAggregation::kMinOverK;
  Weighting weighting = Weighting::kAgent;
  MieDenominator mie_denominator = MieDenominator::kWithoutMap;
};

struct DisplacementErrors
{
  double ade = 0.0;
  double fde = 0.0;
};

/**
 * @brief ADE/FDE of K sampled futures against the ground truth.
 *
 * Per sample: ADE_k is the mean Euclidean distance over the T steps, FDE_k
 * the distance at the last step. Under min-over-K the two minima are taken
 * independently, so they may come from different samples.
 */
inline DisplacementErrors displacement_errors(
  std::span<const Trajectory> samples, const Trajectory & truth, const MetricConfig & cfg = {})
{
  if (samples.empty()) {
    throw Error(ErrorKind::kValidation, "need at least one sample (K >= 1)", "samples");
  }
  if (truth.empty()) {
    throw Error(ErrorKind::kValidation, "need at least one future step (T >= 1)", "future");
  }
  for (const auto & p : truth) {
    if (!p.finite()) throw Error(ErrorKind::kSemantic, "non-finite coordinate", "future");
  }

  const std::size_t horizon = truth.size();
  double best_ade = std::numeric_limits<double>::infinity();
  double best_fde = std::numeric_limits<double>::infinity();
  double sum_ade = 0.0;
  double sum_fde = 0.0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto & sample = samples[k];
    const std::string field = "samples[" + std::to_string(k) + "]";
    if (sample.size() != horizon) {
      throw Error(
        ErrorKind::kValidation,
        "length " + std::to_string(sample.size()) + " != " + std::to_string(horizon), field);
    }
    double total = 0.0;
    for (std::size_t t = 0; t < horizon; ++t) {
      if (!sample[t].finite()) throw Error(ErrorKind::kSemantic, "non-finite coordinate", field);
      total += distance(sample[t], truth[t]);
    }
    const double ade = total / static_cast<double>(horizon);
    const double fde = distance(sample.back(), truth.back());
    best_ade = std::min(best_ade, ade);
    best_fde = std::min(best_fde, fde);
    sum_ade += ade;
    sum_fde += fde;
  }
  if (cfg.k_aggregation == KAggregation::kMeanOverK) {
    const auto k = static_cast<double>(samples.size());
    return {sum_ade / k, sum_fde / k};
  }
  return {best_ade, best_fde};
}

/// One record per predicted agent, in prediction order.
inline std::vector<MetricRecord> scene_metrics(
  const Scene & scene, const PredictionSet & preds, const MetricConfig & cfg = {})
{
  std::vector<MetricRecord> out;
  out.reserve(preds.per_agent.size());
  for (const auto & p : preds.per_agent) {
    const AgentTrack * track = scene.find_agent(p.agent_id);
    if (track == nullptr) {
      throw Error(
        ErrorKind::kValidation, "unknown agent '" + p.agent_id + "'", "agent_id", scene.scene_id);
    }
    try {
      const auto e = displacement_errors(p.samples, track->future, cfg);
      out.push_back({scene.scene_id, p.agent_id, preds.condition, e.ade, e.fde});
    } catch (const Error & e) {
      throw Error(
        e.kind(), e.message(), "agent '" + p.agent_id + "'." + e.field(), scene.scene_id);
    }
  }
  return out;
}

/// Canonical record order: condition, scene_id, agent_id.
inline bool record_less(const MetricRecord & a, const MetricRecord & b)
{
  return std::tie(a.condition, a.scene_id, a.agent_id) <
         std::tie(b.condition, b.scene_id, b.agent_id);
}

/**
 * @brief Metric records for every prediction set in a loaded corpus.
 *
 * Scenes are evaluated on up to `jobs` threads; output is in canonical
 * record order regardless of `jobs`.
 */
inline std::vector<MetricRecord> corpus_metrics(
  const ingest::Corpus & corpus, const MetricConfig & cfg = {}, std::size_t jobs = 1)
{
  std::vector<const PredictionSet *> sets;
  for (const auto & [condition, list] : corpus.predictions) {
    for (const auto & s : list) sets.push_back(&s);
  }
  std::vector<std::vector<MetricRecord>> per_set(sets.size());
  parallel_for(sets.size(), jobs, [&](std::size_t i) {
    const Scene * scene = corpus.find_scene(sets[i]->scene_id);
    if (scene == nullptr) {
      throw Error(
        ErrorKind::kValidation, "scene_id '" + sets[i]->scene_id + "' not in corpus", "scene_id");
    }
    per_set[i] = scene_metrics(*scene, *sets[i], cfg);
  });
  std::vector<MetricRecord> out;
  for (auto & part : per_set) std::move(part.begin(), part.end(), std::back_inserter(out));
  std::sort(out.begin(), out.end(), record_less);
  return out;
}

struct AggregateError
{
  double ade = 0.0;
  double fde = 0.0;
  std::size_t n = 0;  // agents or scenes, per weighting
};

/**
 * @brief Mean ADE/FDE over records of a single condition.
 *
 * Agent weighting is a flat mean over records; scene weighting averages the
 * per-scene means. Summation runs in (scene_id, agent_id) order so the
 * result is bit-identical for any input permutation.
 */
inline AggregateError aggregate(std::span<const MetricRecord> records, const MetricConfig & cfg = {})
{
  if (records.empty()) {
    throw Error(ErrorKind::kValidation, "cannot aggregate an empty record set");
  }
  for (const auto & r : records) {
    if (r.condition != records.front().condition) {
      throw Error(ErrorKind::kValidation, "records mix with_map and without_map", "condition");
    }
  }

  std::vector<const MetricRecord *> ordered;
  ordered.reserve(records.size());
  for (const auto & r : records) ordered.push_back(&r);
  std::sort(ordered.begin(), ordered.end(), [](const MetricRecord * a, const MetricRecord * b) {
    return std::tie(a->scene_id, a->agent_id) < std::tie(b->scene_id, b->agent_id);
  });

  AggregateError out;
  if (cfg.weighting == Weighting::kAgent) {
    for (const auto * r : ordered) {
      out.ade += r->ade;
      out.fde += r->fde;
    }
    out.n = ordered.size();
  } else {
    std::size_t i = 0;
    while (i < ordered.size()) {
      std::size_t j = i;
      double ade = 0.0;
      double fde = 0.0;
      while (j < ordered.size() && ordered[j]->scene_id == ordered[i]->scene_id) {
        ade += ordered[j]->ade;
        fde += ordered[j]->fde;
        ++j;
      }
      const auto count = static_cast<double>(j - i);
      out.ade += ade / count;
      out.fde += fde / count;
      ++out.n;
      i = j;
    }
  }
  out.ade /= static_cast<double>(out.n);
  out.fde /= static_cast<double>(out.n);
  return out;
}

/**
 * @brief Map Information Effectiveness:
 *   (error_without - error_with) / sqrt(denominator)
 * where the denominator is error_without by default, or error_with when
 * configured. Positive values mean the model benefits from the map.
 */
inline double mie(double error_o, double error_w, const MetricConfig & cfg = {})
{
  if (!std::isfinite(error_o) || !std::isfinite(error_w) || error_o < 0.0 || error_w < 0.0) {
    throw Error(ErrorKind::kValidation, "errors must be finite and >= 0");
  }
  if (error_o == error_w) {
    return 0.0;  // no map effect, including the 0/0 case
  }
  const double denominator =
    cfg.mie_denominator == MieDenominator::kWithoutMap ? error_o : error_w;
  if (!(denominator > 0.0)) {
    throw Error(ErrorKind::kValidation, "MIE denominator must be > 0");
  }
  return (error_o - error_w) / std::sqrt(denominator);
}

namespace detail
{
inline std::optional<double> try_mie(double o, double w, const MetricConfig & cfg)
{
  try {
    return mie(o, w, cfg);
  } catch (const Error &) {
    return std::nullopt;
  }
}
}  // namespace detail

struct RowSpec
{
  std::optional<DensityLevel> rho;
  std::optional<GeometryType> tau;

  bool matches(const CellKey & cell) const
  {
    return (!rho || *rho == cell.rho) && (!tau || *tau == cell.tau);
  }
};

inline std::vector<RowSpec> rows_for(Grouping grouping)
{
  std::vector<RowSpec> rows;
  switch (grouping) {
    case Grouping::kOverall:
      rows.push_back({});
      break;
    case Grouping::kDensity:
      for (auto r : kAllDensities) rows.push_back({r, std::nullopt});
      break;
    case Grouping::kGeometry:
      for (auto t : kAllGeometries) rows.push_back({std::nullopt, t});
      break;
    case Grouping::kFull:
      for (auto r : kAllDensities) {
        for (auto t : kAllGeometries) rows.push_back({r, t});
      }
      break;
  }
  return rows;
}

/**
 * @brief Build Table-style rows for one grouping.
 *
 * Each non-empty row needs records under both conditions covering the same
 * (scene, agent) pairs; sample_size is that pair count. Rows without scenes
 * are emitted with sample_size 0 and no metrics.
 */
inline std::vector<StratumReport> stratified_report(
  const classify::Partition & partition, std::span<const MetricRecord> records, Grouping grouping,
  const MetricConfig & cfg = {})
{
  // Attach each record to its cell once.
  std::vector<std::pair<CellKey, const MetricRecord *>> located;
  located.reserve(records.size());
  for (const auto & r : records) {
    const auto * cls = partition.find(r.scene_id);
    if (cls == nullptr) {
      throw Error(
        ErrorKind::kValidation, "record for scene '" + r.scene_id + "' not in partition",
        "scene_id");
    }
    located.emplace_back(cls->cell(), &r);
  }

  std::vector<StratumReport> out;
  for (const auto & row : rows_for(grouping)) {
    StratumReport report{row.rho, row.tau, 0, std::nullopt};
    std::size_t scenes = 0;
    for (const auto & [cell, ids] : partition.cells) {
      if (row.matches(cell)) scenes += ids.size();
    }
    if (scenes == 0) {
      out.push_back(report);
      continue;
    }

    std::map<SemanticCondition, std::vector<MetricRecord>> by_condition;
    for (const auto & [cell, r] : located) {
      if (row.matches(cell)) by_condition[r->condition].push_back(*r);
    }
    for (auto c : kAllConditions) {
      if (by_condition[c].empty()) {
        throw Error(
          ErrorKind::kValidation,
          "no " + std::string(to_string(c)) + " records for non-empty stratum '" +
            report.label() + "'",
          std::string(to_string(c)));
      }
      std::sort(by_condition[c].begin(), by_condition[c].end(), record_less);
    }
    const auto & with = by_condition[SemanticCondition::kWithMap];
    const auto & without = by_condition[SemanticCondition::kWithoutMap];
    const bool same_agents = std::equal(
      with.begin(), with.end(), without.begin(), without.end(),
      [](const MetricRecord & a, const MetricRecord & b) {
        return a.scene_id == b.scene_id && a.agent_id == b.agent_id;
      });
    if (!same_agents) {
      throw Error(
        ErrorKind::kValidation,
        "with_map and without_map records cover different agents in stratum '" + report.label() +
          "'");
    }

    const auto agg_w = aggregate(with, cfg);
    const auto agg_o = aggregate(without, cfg);
    report.sample_size = with.size();
    StratumMetrics m;
    m.ade_o = agg_o.ade;
    m.ade_w = agg_w.ade;
    m.fde_o = agg_o.fde;
    m.fde_w = agg_w.fde;
    m.mie_a = detail::try_mie(m.ade_o, m.ade_w, cfg);
    m.mie_f = detail::try_mie(m.fde_o, m.fde_w, cfg);
    report.metrics = m;
    out.push_back(report);
  }
  return out;
}

}  // namespace metrics
}  // namespace predsafe

#endif  // PREDSAFE__METRICS_HPP_
