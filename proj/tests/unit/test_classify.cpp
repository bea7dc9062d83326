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

#include "predsafe/classify.hpp"

#include "generators.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

namespace predsafe::classify
{
namespace
{

using predsafe::testing::Gen;

constexpr double kDeg = 180.0 / std::numbers::pi;

Trajectory arc(double radius, double length, double step, double start = 0.0)
{
  Trajectory out;
  const auto n = static_cast<std::size_t>(std::llround(length / step));
  for (std::size_t i = 0; i <= n; ++i) {
    const double theta = (start + length * static_cast<double>(i) / static_cast<double>(n)) / radius;
    out.push_back({radius * std::sin(theta), radius * (1.0 - std::cos(theta))});
  }
  return out;
}

/// Random walk with bounded turns so rigid motions cannot flip a turn across +-pi.
Trajectory random_walk(Gen & g, std::size_t n)
{
  Trajectory out{{g.real(-50, 50), g.real(-50, 50)}};
  double heading = g.real(-3, 3);
  while (out.size() < n) {
    heading += g.real(-2.5, 2.5);
    const double step = g.real(0.5, 5.0);
    out.push_back({out.back().x + step * std::cos(heading), out.back().y + step * std::sin(heading)});
  }
  return out;
}

/// Quadratic reference: every contiguous segment run, turn angles summed directly.
double brute_heading_change_deg(const Trajectory & pts, double window)
{
  double best = 0.0;
  const std::size_t n_seg = pts.size() - 1;
  for (std::size_t i = 0; i < n_seg; ++i) {
    double length = 0.0;
    double turn = 0.0;
    for (std::size_t j = i; j < n_seg; ++j) {
      length += std::hypot(pts[j + 1].x - pts[j].x, pts[j + 1].y - pts[j].y);
      if (length > window + kWindowSlackM) break;
      if (j > i) {
        const double h0 = std::atan2(pts[j].y - pts[j - 1].y, pts[j].x - pts[j - 1].x);
        const double h1 = std::atan2(pts[j + 1].y - pts[j].y, pts[j + 1].x - pts[j].x);
        turn += std::remainder(h1 - h0, 2.0 * std::numbers::pi);
      }
      best = std::max(best, std::abs(turn));
    }
  }
  return best * kDeg;
}

Scene scene_with_agents(const std::string & id, std::size_t n, std::optional<SemanticMap> map = std::nullopt)
{
  Scene s;
  s.scene_id = id;
  for (std::size_t i = 0; i < n; ++i) {
    AgentTrack a{"a" + std::to_string(i), {}, {}};
    for (int t = 0; t < 4; ++t) a.history.push_back({5.0 * t, 3.0 * static_cast<double>(i)});
    for (int t = 4; t < 10; ++t) a.future.push_back({5.0 * t, 3.0 * static_cast<double>(i)});
    s.agents.push_back(a);
  }
  s.map = std::move(map);
  return s;
}

TEST(ClassifyDensity, BinBoundaries)
{
  EXPECT_EQ(classify_density(1), DensityLevel::kSingle);
  EXPECT_EQ(classify_density(2), DensityLevel::kFew);
  EXPECT_EQ(classify_density(3), DensityLevel::kFew);
  EXPECT_EQ(classify_density(4), DensityLevel::kMedium);
  EXPECT_EQ(classify_density(8), DensityLevel::kMedium);
  EXPECT_EQ(classify_density(9), DensityLevel::kMany);
  EXPECT_EQ(classify_density(1000), DensityLevel::kMany);
}

TEST(ClassifyDensity, MonotoneInAgentCount)
{
  for (std::size_t n = 1; n < 200; ++n) {
    EXPECT_LE(classify_density(n), classify_density(n + 1));
  }
  ClassifyConfig custom;
  custom.density_bins = {DensityBin{1, 3}, DensityBin{3, 5}, DensityBin{5, 20}, DensityBin{20, kUnbounded}};
  EXPECT_TRUE(validate_config(custom).empty());
  for (std::size_t n = 1; n < 200; ++n) EXPECT_LE(classify_density(n, custom), classify_density(n + 1, custom));
}

TEST(ClassifyConfig, ValidateRejectsGapsAndNonPositive)
{
  EXPECT_TRUE(validate_config(ClassifyConfig{}).empty());
  ClassifyConfig gap;
  gap.density_bins[1].hi = 5;
  EXPECT_FALSE(validate_config(gap).empty());
  ClassifyConfig neg;
  neg.curvature_threshold_deg = -1.0;
  EXPECT_FALSE(validate_config(neg).empty());
}

TEST(HeadingChange, Examples)
{
  EXPECT_NEAR(heading_change_deg({{0, 0}, {10, 0}, {20, 0}}, 20.0), 0.0, 1e-9);
  EXPECT_NEAR(heading_change_deg({{0, 0}, {10, 0}, {10, 10}}, 20.0), 90.0, 1e-9);
  EXPECT_NEAR(heading_change_deg(arc(50.0, 30.0, 0.001), 30.0), 0.6 * kDeg, 0.01);
}

TEST(HeadingChange, ArcAgreesWithAngleSubtended)
{
  // Chord sampling of n segments turns by theta * (n - 1) / n.
  for (std::size_t n : {3u, 10u, 100u}) {
    const double step = 30.0 / static_cast<double>(n);
    EXPECT_NEAR(
      heading_change_deg(arc(50.0, 30.0, step), 40.0),
      0.6 * kDeg * static_cast<double>(n - 1) / static_cast<double>(n), 1e-9);
  }
}

TEST(HeadingChange, WindowLimitsRuns)
{
  // The run containing the corner is 35 m long.
  const Trajectory z{{0, 0}, {5, 0}, {5, 30}, {10, 30}};
  EXPECT_NEAR(heading_change_deg(z, 34.0), 0.0, 1e-12);
  EXPECT_NEAR(heading_change_deg(z, 35.0), 90.0, 1e-9);
  // Both corners fit but cancel; the largest run is still one corner.
  EXPECT_NEAR(heading_change_deg(z, 1000.0), 90.0, 1e-9);
  const Trajectory u{{0, 0}, {10, 0}, {10, 10}, {0, 10}};
  EXPECT_NEAR(heading_change_deg(u, 30.0), 180.0, 1e-9);
  EXPECT_NEAR(heading_change_deg(u, 20.0), 90.0, 1e-9);
}

TEST(HeadingChange, DuplicatePointsMergedAndDegenerateRejected)
{
  EXPECT_NEAR(heading_change_deg({{0, 0}, {0, 0}, {10, 0}, {10, 0}, {10, 10}}, 20.0), 90.0, 1e-9);
  try {
    heading_change_deg({{1, 1}, {1, 1}}, 20.0);
    FAIL();
  } catch (const Error & e) {
    EXPECT_EQ(e.kind(), ErrorKind::kSemantic);
  }
}

TEST(HeadingChange, MatchesQuadraticReference)
{
  Gen g(5);
  for (int i = 0; i < 500; ++i) {
    const auto pts = random_walk(g, g.size(2, 40));
    const double window = g.real(1.0, 60.0);
    ASSERT_NEAR(heading_change_deg(pts, window), brute_heading_change_deg(pts, window), 1e-9);
  }
}

TEST(HeadingChange, RigidMotionInvariant)
{
  Gen g(6);
  for (int i = 0; i < 500; ++i) {
    const auto pts = random_walk(g, g.size(2, 30));
    const double window = g.real(1.0, 60.0);
    const double yaw = g.real(-4.0, 4.0);
    const double tx = g.real(-1000, 1000);
    const double ty = g.real(-1000, 1000);
    Trajectory moved;
    for (const auto & p : pts) {
      moved.push_back({std::cos(yaw) * p.x - std::sin(yaw) * p.y + tx, std::sin(yaw) * p.x + std::cos(yaw) * p.y + ty});
    }
    ASSERT_NEAR(heading_change_deg(moved, window), heading_change_deg(pts, window), 1e-9);
  }
}

TEST(HeadingChange, ScaleInvariantWithWindow)
{
  Gen g(7);
  for (int i = 0; i < 500; ++i) {
    const auto pts = random_walk(g, g.size(2, 30));
    const double scale = g.real(0.1, 10.0);
    Trajectory scaled;
    for (const auto & p : pts) scaled.push_back({p.x * scale, p.y * scale});
    // Whole-polyline window: only turn angles matter.
    ASSERT_NEAR(heading_change_deg(scaled, 1e9), heading_change_deg(pts, 1e9), 1e-9);
  }
}

TEST(ClassifyGeometry, StraightLaneInRoi)
{
  const auto s = scene_with_agents("s", 1, SemanticMap{{Lane{"l", {{-50, 0}, {0, 0}, {100, 0}}}}});
  const auto r = classify_geometry(s);
  EXPECT_EQ(r.type, GeometryType::kStraight);
  EXPECT_NEAR(r.heading_change_deg, 0.0, 1e-12);
  EXPECT_TRUE(r.from_map);
}

TEST(ClassifyGeometry, ArcLaneIsCurved)
{
  ClassifyConfig cfg;
  cfg.curvature_window_m = 30.0;
  auto s = scene_with_agents("s", 1, SemanticMap{{Lane{"arc", arc(50.0, 30.0, 0.001)}}});
  for (auto & p : s.agents[0].history) p = {0.0, 0.0};
  const auto r = classify_geometry(s, cfg);
  EXPECT_TRUE(r.from_map);
  EXPECT_EQ(r.type, GeometryType::kCurved);
  EXPECT_NEAR(r.heading_change_deg, 34.377, 0.01);
}

TEST(ClassifyGeometry, FallbackToAgentPathOnArc)
{
  ClassifyConfig cfg;
  cfg.curvature_window_m = 30.0;
  const auto path = arc(50.0, 30.0, 0.001);
  Scene s;
  s.scene_id = "s";
  AgentTrack a{"a", {path.begin(), path.begin() + 10}, {path.begin() + 10, path.end()}};
  s.agents.push_back(a);
  for (auto map : {std::optional<SemanticMap>{}, std::optional<SemanticMap>{SemanticMap{}},
                   std::optional<SemanticMap>{SemanticMap{{Lane{"far", {{900, 900}, {1000, 900}}}}}}}) {
    s.map = map;
    const auto r = classify_geometry(s, cfg);
    EXPECT_FALSE(r.from_map);
    EXPECT_EQ(r.type, GeometryType::kCurved);
    EXPECT_NEAR(r.heading_change_deg, 34.377, 0.01);
  }
}

TEST(ClassifyGeometry, StationaryAgentsContributeZero)
{
  auto s = scene_with_agents("s", 2);
  for (auto & p : s.agents[0].history) p = {1.0, 1.0};
  for (auto & p : s.agents[0].future) p = {1.0, 1.0};
  const auto r = classify_geometry(s);
  EXPECT_EQ(r.type, GeometryType::kStraight);
  EXPECT_NEAR(r.heading_change_deg, 0.0, 1e-12);
}

TEST(ClassifyGeometry, ThresholdTieIsStraight)
{
  const auto s = scene_with_agents("s", 1, SemanticMap{{Lane{"l", {{0, 0}, {10, 0}, {15, 4}}}}});
  ClassifyConfig cfg;
  cfg.curvature_threshold_deg = classify_geometry(s, cfg).heading_change_deg;
  EXPECT_EQ(classify_geometry(s, cfg).type, GeometryType::kStraight);
  cfg.curvature_threshold_deg = std::nextafter(cfg.curvature_threshold_deg, 0.0);
  EXPECT_EQ(classify_geometry(s, cfg).type, GeometryType::kCurved);
}

TEST(ClassifyGeometry, RaisingThresholdOnlyFlipsCurvedToStraight)
{
  Gen g(8);
  std::vector<Scene> scenes;
  for (int i = 0; i < 200; ++i) {
    Scene s;
    s.scene_id = "s" + std::to_string(i);
    const auto pts = random_walk(g, 10);
    s.agents.push_back({"a", {pts.begin(), pts.begin() + 4}, {pts.begin() + 4, pts.end()}});
    scenes.push_back(s);
  }
  std::set<std::string> previous_curved;
  for (const auto & s : scenes) previous_curved.insert(s.scene_id);
  for (double threshold = 1.0; threshold < 400.0; threshold *= 1.5) {
    ClassifyConfig cfg;
    cfg.curvature_threshold_deg = threshold;
    std::set<std::string> curved;
    for (const auto & s : scenes) {
      if (classify_geometry(s, cfg).type == GeometryType::kCurved) curved.insert(s.scene_id);
    }
    EXPECT_TRUE(std::includes(previous_curved.begin(), previous_curved.end(), curved.begin(), curved.end()));
    previous_curved = curved;
  }
}

TEST(Partition, FourStraightScenesOnePerDensity)
{
  std::vector<Scene> scenes;
  for (std::size_t n : {1u, 3u, 5u, 12u}) scenes.push_back(scene_with_agents("s" + std::to_string(n), n));
  const auto p = partition(scenes);
  EXPECT_EQ(p.cells.size(), 8u);
  for (auto rho : kAllDensities) {
    EXPECT_EQ(p.cells.at({rho, GeometryType::kStraight}).size(), 1u);
    EXPECT_TRUE(p.cells.at({rho, GeometryType::kCurved}).empty());
  }
}

TEST(Partition, EmptyCorpusHasEightEmptyCells)
{
  const auto p = partition({});
  EXPECT_EQ(p.cells.size(), 8u);
  EXPECT_EQ(p.total(), 0u);
}

TEST(Partition, DuplicateIdsRejected)
{
  std::vector<Scene> scenes{scene_with_agents("x", 1), scene_with_agents("x", 2)};
  try {
    partition(scenes);
    FAIL();
  } catch (const Error & e) {
    EXPECT_EQ(e.kind(), ErrorKind::kValidation);
  }
}

TEST(Partition, RandomCorporaAgreeWithReclassification)
{
  Gen g(9);
  for (int round = 0; round < 20; ++round) {
    std::vector<Scene> scenes;
    for (int i = 0; i < 100; ++i) {
      Scene s;
      s.scene_id = "r" + std::to_string(round) + "_" + std::to_string(i);
      const std::size_t n = g.size(1, 14);
      for (std::size_t a = 0; a < n; ++a) {
        const auto pts = random_walk(g, 10);
        s.agents.push_back({"a" + std::to_string(a), {pts.begin(), pts.begin() + 4}, {pts.begin() + 4, pts.end()}});
      }
      if (g.coin()) s.map = SemanticMap{{Lane{"l", random_walk(g, g.size(2, 12))}}};
      scenes.push_back(s);
    }
    const auto p = partition(scenes, ClassifyConfig{}, 1 + round % 4);
    EXPECT_EQ(p.total(), scenes.size());
    std::set<std::string> seen;
    for (const auto & [cell, ids] : p.cells) {
      for (const auto & id : ids) EXPECT_TRUE(seen.insert(id).second) << id;
    }
    EXPECT_EQ(seen.size(), scenes.size());
    for (const auto & s : scenes) {
      const CellKey expected{classify_density(s.agents.size()), classify_geometry(s).type};
      for (const auto & [cell, ids] : p.cells) {
        const bool member = std::find(ids.begin(), ids.end(), s.scene_id) != ids.end();
        EXPECT_EQ(member, cell == expected);
      }
    }
    auto reversed = scenes;
    std::reverse(reversed.begin(), reversed.end());
    const auto q = partition(reversed, ClassifyConfig{}, 3);
    EXPECT_EQ(q.cells, p.cells);
  }
}

TEST(ClassificationCsv, OneRowPerSceneSorted)
{
  std::vector<Scene> scenes{scene_with_agents("b", 2), scene_with_agents("a,1", 9)};
  const auto csv = classification_csv(partition(scenes));
  EXPECT_EQ(
    csv,
    "scene_id,agent_count,rho,tau,heading_change_deg\n"
    "\"a,1\",9,many,straight,0.000000\n"
    "b,2,few,straight,0.000000\n");
}

}  // namespace
}  // namespace predsafe::classify
