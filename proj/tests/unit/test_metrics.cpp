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

#include "predsafe/metrics.hpp"

#include "generators.hpp"
#include "reference_tables.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>

namespace predsafe::metrics
{
namespace
{

using predsafe::testing::Gen;

/// Independent reference: enumerate all samples with explicit loops.
DisplacementErrors brute_min_of_k(const std::vector<Trajectory> & samples, const Trajectory & truth)
{
  std::vector<double> ades;
  std::vector<double> fdes;
  for (const auto & s : samples) {
    double sum = 0.0;
    for (std::size_t t = 0; t < truth.size(); ++t) {
      const double dx = s[t].x - truth[t].x;
      const double dy = s[t].y - truth[t].y;
      sum += std::sqrt(dx * dx + dy * dy);
    }
    ades.push_back(sum / static_cast<double>(truth.size()));
    const double dx = s.back().x - truth.back().x;
    const double dy = s.back().y - truth.back().y;
    fdes.push_back(std::sqrt(dx * dx + dy * dy));
  }
  return {*std::min_element(ades.begin(), ades.end()), *std::min_element(fdes.begin(), fdes.end())};
}

bool rel_close(double a, double b, double rel)
{
  return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), 1e-300});
}

Trajectory random_track(Gen & g, std::size_t t)
{
  Trajectory out;
  for (std::size_t i = 0; i < t; ++i) out.push_back({g.real(-100, 100), g.real(-100, 100)});
  return out;
}

TEST(DisplacementErrors, IdentityIsZero)
{
  const Trajectory truth{{1, 2}, {3, 4}, {5, 6}};
  const std::vector<Trajectory> samples{truth};
  const auto e = displacement_errors(samples, truth);
  EXPECT_EQ(e.ade, 0.0);
  EXPECT_EQ(e.fde, 0.0);
}

TEST(DisplacementErrors, UnitOffset)
{
  const std::vector<Trajectory> samples{{{1, 1}, {2, 1}}};
  const auto e = displacement_errors(samples, {{1, 0}, {2, 0}});
  EXPECT_EQ(e.ade, 1.0);
  EXPECT_EQ(e.fde, 1.0);
}

TEST(DisplacementErrors, MinimaTakenIndependently)
{
  // Sample 0 is close on average, sample 1 lands closest at the end.
  const Trajectory truth{{0, 0}, {1, 0}, {2, 0}};
  const std::vector<Trajectory> samples{{{0, 0}, {1, 0}, {2, 1}}, {{0, 3}, {1, 3}, {2, 0.5}}};
  const auto e = displacement_errors(samples, truth);
  EXPECT_DOUBLE_EQ(e.ade, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(e.fde, 0.5);
}

TEST(DisplacementErrors, MeanOverK)
{
  const Trajectory truth{{0, 0}, {0, 0}};
  const std::vector<Trajectory> samples{{{1, 0}, {1, 0}}, {{3, 0}, {3, 0}}};
  MetricConfig cfg;
  cfg.k_aggregation = KAggregation::kMeanOverK;
  const auto e = displacement_errors(samples, truth, cfg);
  EXPECT_EQ(e.ade, 2.0);
  EXPECT_EQ(e.fde, 2.0);
}

TEST(DisplacementErrors, InvalidInputs)
{
  const Trajectory truth{{0, 0}, {0, 0}};
  EXPECT_THROW(displacement_errors({}, truth), Error);
  const std::vector<Trajectory> short_sample{{{0, 0}}};
  EXPECT_THROW(displacement_errors(short_sample, truth), Error);
  const std::vector<Trajectory> nan_sample{{{0, 0}, {std::nan(""), 0}}};
  EXPECT_THROW(displacement_errors(nan_sample, truth), Error);
}

TEST(DisplacementErrors, MatchesBruteForceEnumeration)
{
  Gen g(101);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t k = g.size(1, 5);
    const std::size_t t = g.size(1, 6);
    const auto truth = random_track(g, t);
    std::vector<Trajectory> samples;
    for (std::size_t s = 0; s < k; ++s) samples.push_back(random_track(g, t));
    const auto e = displacement_errors(samples, truth);
    const auto ref = brute_min_of_k(samples, truth);
    ASSERT_TRUE(rel_close(e.ade, ref.ade, 1e-12)) << e.ade << " vs " << ref.ade;
    ASSERT_TRUE(rel_close(e.fde, ref.fde, 1e-12)) << e.fde << " vs " << ref.fde;
  }
}

TEST(DisplacementErrors, SingleSampleFdeIsLastStepDistance)
{
  Gen g(102);
  for (int i = 0; i < 500; ++i) {
    const std::size_t t = g.size(1, 8);
    const auto truth = random_track(g, t);
    const std::vector<Trajectory> samples{random_track(g, t)};
    EXPECT_EQ(displacement_errors(samples, truth).fde, distance(samples[0].back(), truth.back()));
  }
}

TEST(DisplacementErrors, MonotoneNonIncreasingInK)
{
  Gen g(103);
  for (int i = 0; i < 300; ++i) {
    const std::size_t t = g.size(1, 6);
    const auto truth = random_track(g, t);
    std::vector<Trajectory> samples{random_track(g, t)};
    auto prev = displacement_errors(samples, truth);
    for (int k = 0; k < 10; ++k) {
      samples.push_back(random_track(g, t));
      const auto next = displacement_errors(samples, truth);
      ASSERT_LE(next.ade, prev.ade);
      ASSERT_LE(next.fde, prev.fde);
      prev = next;
    }
  }
}

TEST(DisplacementErrors, RigidMotionInvariant)
{
  Gen g(104);
  for (int i = 0; i < 500; ++i) {
    const std::size_t t = g.size(1, 6);
    const auto truth = random_track(g, t);
    std::vector<Trajectory> samples;
    for (std::size_t s = 0; s < g.size(1, 5); ++s) samples.push_back(random_track(g, t));
    const double yaw = g.real(-4, 4);
    const double tx = g.real(-500, 500);
    const double ty = g.real(-500, 500);
    auto move = [&](Trajectory tr) {
      for (auto & p : tr) p = {std::cos(yaw) * p.x - std::sin(yaw) * p.y + tx, std::sin(yaw) * p.x + std::cos(yaw) * p.y + ty};
      return tr;
    };
    std::vector<Trajectory> moved;
    for (const auto & s : samples) moved.push_back(move(s));
    const auto a = displacement_errors(samples, truth);
    const auto b = displacement_errors(moved, move(truth));
    ASSERT_NEAR(a.ade, b.ade, 1e-9);
    ASSERT_NEAR(a.fde, b.fde, 1e-9);
  }
}

Scene straight_scene(const std::string & id, std::size_t agents)
{
  Scene s;
  s.scene_id = id;
  for (std::size_t a = 0; a < agents; ++a) {
    AgentTrack tr{"a" + std::to_string(a), {}, {}};
    for (int i = 0; i < 4; ++i) tr.history.push_back({1.0 * i, 1.0 * a});
    for (int i = 4; i < 10; ++i) tr.future.push_back({1.0 * i, 1.0 * a});
    s.agents.push_back(tr);
  }
  return s;
}

TEST(SceneMetrics, OneRecordPerAgentAndHandComputedValues)
{
  const auto scene = straight_scene("s", 3);
  PredictionSet p{"s", "m", SemanticCondition::kWithoutMap, {}};
  for (std::size_t a = 0; a < 3; ++a) {
    Trajectory shifted = scene.agents[a].future;
    for (auto & q : shifted) q.y += static_cast<double>(a);  // offset a metres
    p.per_agent.push_back({scene.agents[a].agent_id, {shifted}});
  }
  const auto records = scene_metrics(scene, p);
  ASSERT_EQ(records.size(), 3u);
  for (std::size_t a = 0; a < 3; ++a) {
    EXPECT_EQ(records[a].agent_id, scene.agents[a].agent_id);
    EXPECT_EQ(records[a].condition, SemanticCondition::kWithoutMap);
    EXPECT_DOUBLE_EQ(records[a].ade, static_cast<double>(a));
    EXPECT_DOUBLE_EQ(records[a].fde, static_cast<double>(a));
  }
  p.per_agent[1].agent_id = "ghost";
  EXPECT_THROW(scene_metrics(scene, p), Error);
}

std::vector<MetricRecord> records_of(
  std::initializer_list<std::tuple<const char *, const char *, double>> rows,
  SemanticCondition c = SemanticCondition::kWithMap)
{
  std::vector<MetricRecord> out;
  for (const auto & [scene, agent, v] : rows) out.push_back({scene, agent, c, v, v});
  return out;
}

TEST(Aggregate, Examples)
{
  const auto r = records_of({{"A", "1", 1.0}, {"A", "2", 3.0}, {"B", "1", 2.0}});
  auto e = aggregate(r);
  EXPECT_EQ(e.ade, 2.0);
  EXPECT_EQ(e.n, 3u);
  MetricConfig scene_cfg;
  scene_cfg.weighting = Weighting::kScene;
  e = aggregate(r, scene_cfg);
  EXPECT_EQ(e.ade, 2.0);
  EXPECT_EQ(e.n, 2u);

  const auto r2 = records_of({{"A", "1", 1.0}, {"A", "2", 1.0}, {"B", "1", 4.0}});
  EXPECT_EQ(aggregate(r2).ade, 2.0);
  EXPECT_EQ(aggregate(r2, scene_cfg).ade, 2.5);
}

TEST(Aggregate, RejectsEmptyAndMixed)
{
  EXPECT_THROW(aggregate({}), Error);
  auto r = records_of({{"A", "1", 1.0}});
  r.push_back({"B", "1", SemanticCondition::kWithoutMap, 1.0, 1.0});
  EXPECT_THROW(aggregate(r), Error);
}

TEST(Aggregate, BitIdenticalUnderPermutation)
{
  Gen g(105);
  for (int round = 0; round < 50; ++round) {
    std::vector<MetricRecord> r;
    for (int i = 0; i < 200; ++i) {
      r.push_back({"s" + std::to_string(g.size(0, 30)), "a" + std::to_string(i), SemanticCondition::kWithMap,
                   g.real(0, 1e3) * std::pow(10.0, g.real(-8, 3)), g.real(0, 10)});
    }
    for (auto w : {Weighting::kAgent, Weighting::kScene}) {
      MetricConfig cfg;
      cfg.weighting = w;
      const auto a = aggregate(r, cfg);
      auto shuffled = r;
      std::shuffle(shuffled.begin(), shuffled.end(), g.engine());
      const auto b = aggregate(shuffled, cfg);
      ASSERT_EQ(std::memcmp(&a.ade, &b.ade, sizeof(double)), 0);
      ASSERT_EQ(std::memcmp(&a.fde, &b.fde, sizeof(double)), 0);
    }
  }
}

TEST(CorpusMetrics, SameOutputForAnyJobCount)
{
  Gen g(106);
  ingest::Corpus corpus;
  for (int i = 0; i < 40; ++i) corpus.scenes.push_back(straight_scene("s" + std::to_string(100 + i), g.size(1, 5)));
  for (auto c : kAllConditions) {
    for (const auto & s : corpus.scenes) {
      PredictionSet p{s.scene_id, "m", c, {}};
      for (const auto & a : s.agents) {
        AgentPrediction ap{a.agent_id, {}};
        for (int k = 0; k < 3; ++k) ap.samples.push_back(random_track(g, 6));
        p.per_agent.push_back(ap);
      }
      corpus.predictions[c].push_back(p);
    }
  }
  const auto base = corpus_metrics(corpus, {}, 1);
  EXPECT_TRUE(std::is_sorted(base.begin(), base.end(), record_less));
  for (std::size_t jobs : {2u, 4u, 16u}) EXPECT_EQ(corpus_metrics(corpus, {}, jobs), base);
}

TEST(Mie, Examples)
{
  EXPECT_EQ(mie(2.0, 2.0), 0.0);
  EXPECT_EQ(mie(0.0, 0.0), 0.0);
  MetricConfig with_map;
  with_map.mie_denominator = MieDenominator::kWithMap;
  EXPECT_NEAR(mie(1.9493, 1.8238, with_map), 0.0929, 5e-5);
  EXPECT_NEAR(mie(1.9754, 1.8558), 0.0851, 1e-4);
  EXPECT_GT(std::abs(mie(1.9754, 1.8558) - 0.0807), 1e-3);
}

TEST(Mie, DirectArithmetic)
{
  EXPECT_DOUBLE_EQ(mie(4.0, 2.0), 2.0 / 2.0);
  MetricConfig with_map;
  with_map.mie_denominator = MieDenominator::kWithMap;
  EXPECT_DOUBLE_EQ(mie(4.0, 1.0, with_map), 3.0);
}

TEST(Mie, InvalidInputs)
{
  EXPECT_THROW(mie(-1.0, 1.0), Error);
  EXPECT_THROW(mie(1.0, std::nan("")), Error);
  EXPECT_THROW(mie(0.0, 1.0), Error);  // without_map denominator is 0
  MetricConfig with_map;
  with_map.mie_denominator = MieDenominator::kWithMap;
  EXPECT_THROW(mie(1.0, 0.0, with_map), Error);
}

TEST(Mie, SignAndSwap)
{
  Gen g(107);
  for (int i = 0; i < 2000; ++i) {
    const double o = g.real(0.01, 10);
    const double w = g.coin(0.1) ? o : g.real(0.01, 10);
    for (auto d : {MieDenominator::kWithoutMap, MieDenominator::kWithMap}) {
      MetricConfig cfg;
      cfg.mie_denominator = d;
      const double m = mie(o, w, cfg);
      ASSERT_EQ(m > 0.0, o > w);
      ASSERT_EQ(m == 0.0, o == w);
      // Swapping the arguments flips the numerator; the denominator moves with it.
      MetricConfig other = cfg;
      other.mie_denominator = d == MieDenominator::kWithoutMap ? MieDenominator::kWithMap : MieDenominator::kWithoutMap;
      ASSERT_DOUBLE_EQ(mie(w, o, other), -m);
    }
  }
}

/// One scene per requested cell, one agent each, with fixed errors.
struct Fixture
{
  classify::Partition partition;
  std::vector<MetricRecord> records;

  void add(const std::string & id, CellKey cell, double ade_o, double ade_w, double fde_o, double fde_w)
  {
    classes.push_back({id, 1, cell.rho, cell.tau, 0.0});
    partition = classify::partition_from_classes(classes);
    records.push_back({id, "a", SemanticCondition::kWithoutMap, ade_o, fde_o});
    records.push_back({id, "a", SemanticCondition::kWithMap, ade_w, fde_w});
  }

  std::vector<classify::SceneClass> classes;
};

TEST(StratifiedReport, OverallRowCarriesCorpusErrors)
{
  Fixture f;
  const auto & row = predsafe::testing::kOverallRow;
  f.add("s", {DensityLevel::kFew, GeometryType::kStraight}, row.ade_o, row.ade_w, row.fde_o, row.fde_w);
  const auto report = stratified_report(f.partition, f.records, Grouping::kOverall);
  ASSERT_EQ(report.size(), 1u);
  EXPECT_EQ(report[0].label(), "overall");
  ASSERT_TRUE(report[0].metrics.has_value());
  EXPECT_EQ(report[0].metrics->ade_o, 1.9754);
  EXPECT_EQ(report[0].metrics->ade_w, 1.8558);
  EXPECT_EQ(report[0].metrics->fde_o, 4.2051);
  EXPECT_EQ(report[0].metrics->fde_w, 3.8892);
  EXPECT_EQ(report[0].sample_size, 1u);
}

TEST(StratifiedReport, DensityRowsReproducePrintedMieUnderWithMapDenominator)
{
  Fixture f;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto & r = predsafe::testing::kDensityRows[i];
    f.add(std::string(r.label), {kAllDensities[i], GeometryType::kStraight}, r.ade_o, r.ade_w, r.fde_o, r.fde_w);
  }
  MetricConfig cfg;
  cfg.mie_denominator = MieDenominator::kWithMap;
  const auto report = stratified_report(f.partition, f.records, Grouping::kDensity, cfg);
  ASSERT_EQ(report.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto & r = predsafe::testing::kDensityRows[i];
    EXPECT_EQ(report[i].label(), r.label);
    ASSERT_TRUE(report[i].metrics && report[i].metrics->mie_a && report[i].metrics->mie_f);
    EXPECT_NEAR(*report[i].metrics->mie_a, r.mie_a, 1e-3) << r.label;
    EXPECT_NEAR(*report[i].metrics->mie_f, r.mie_f, 1e-3) << r.label;
  }
}

TEST(StratifiedReport, EmptyCellHasNoMetrics)
{
  Fixture f;
  f.add("s", {DensityLevel::kSingle, GeometryType::kStraight}, 2, 1, 2, 1);
  const auto full = stratified_report(f.partition, f.records, Grouping::kFull);
  ASSERT_EQ(full.size(), 8u);
  const auto & many_curved = full.back();
  EXPECT_EQ(many_curved.label(), "many/curved");
  EXPECT_EQ(many_curved.sample_size, 0u);
  EXPECT_FALSE(many_curved.metrics.has_value());
  EXPECT_TRUE(full.front().metrics.has_value());
}

TEST(StratifiedReport, WeightingPropagates)
{
  Fixture f;
  f.add("s1", {DensityLevel::kSingle, GeometryType::kStraight}, 1, 1, 1, 1);
  f.add("s2", {DensityLevel::kSingle, GeometryType::kStraight}, 4, 4, 4, 4);
  f.records.push_back({"s1", "b", SemanticCondition::kWithoutMap, 1, 1});
  f.records.push_back({"s1", "b", SemanticCondition::kWithMap, 1, 1});
  MetricConfig scene_cfg;
  scene_cfg.weighting = Weighting::kScene;
  EXPECT_EQ(stratified_report(f.partition, f.records, Grouping::kOverall)[0].metrics->ade_o, 2.0);
  EXPECT_EQ(stratified_report(f.partition, f.records, Grouping::kOverall, scene_cfg)[0].metrics->ade_o, 2.5);
  EXPECT_EQ(stratified_report(f.partition, f.records, Grouping::kOverall)[0].sample_size, 3u);
}

TEST(StratifiedReport, MissingConditionNamesIt)
{
  Fixture f;
  f.add("s", {DensityLevel::kSingle, GeometryType::kCurved}, 2, 1, 2, 1);
  std::erase_if(f.records, [](const MetricRecord & r) { return r.condition == SemanticCondition::kWithoutMap; });
  try {
    stratified_report(f.partition, f.records, Grouping::kGeometry);
    FAIL();
  } catch (const Error & e) {
    EXPECT_EQ(e.kind(), ErrorKind::kValidation);
    EXPECT_NE(std::string(e.what()).find("without_map"), std::string::npos);
  }
}

TEST(StratifiedReport, MismatchedAgentsRejected)
{
  Fixture f;
  f.add("s", {DensityLevel::kSingle, GeometryType::kCurved}, 2, 1, 2, 1);
  f.records.push_back({"s", "extra", SemanticCondition::kWithMap, 1, 1});
  EXPECT_THROW(stratified_report(f.partition, f.records, Grouping::kOverall), Error);
}

TEST(StratifiedReport, ZeroDenominatorLeavesMieAbsent)
{
  Fixture f;
  f.add("s", {DensityLevel::kSingle, GeometryType::kCurved}, 2, 0, 3, 0);
  MetricConfig cfg;
  cfg.mie_denominator = MieDenominator::kWithMap;
  const auto row = stratified_report(f.partition, f.records, Grouping::kOverall, cfg)[0];
  ASSERT_TRUE(row.metrics.has_value());
  EXPECT_FALSE(row.metrics->mie_a.has_value());
  EXPECT_FALSE(row.metrics->mie_f.has_value());
}

}  // namespace
}  // namespace predsafe::metrics
