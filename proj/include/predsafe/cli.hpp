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

// Subcommands: evaluate, classify, synth, report.
//
// Exit codes: 0 success, 1 usage error, 2 data validation error,
// 3 internal error. Every subcommand computes all of its outputs in memory
// first and only then writes them (temp file + rename), so a failed run
// leaves no partial files behind.

#ifndef PREDSAFE__CLI_HPP_
#define PREDSAFE__CLI_HPP_

#include "predsafe/classify.hpp"
#include "predsafe/config.hpp"
#include "predsafe/ingest.hpp"
#include "predsafe/metrics.hpp"
#include "predsafe/report.hpp"
#include "predsafe/scene_model.hpp"
#include "predsafe/synth.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <system_error>
#include <vector>

namespace predsafe
{
namespace cli
{

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitInternal = 3,
};

inline int exit_code_for(ErrorKind kind)
{
  switch (kind) {
    case ErrorKind::kUsage: return kExitUsage;
    case ErrorKind::kInternal: return kExitInternal;
    default: return kExitData;
  }
}

struct OutputFile
{
  std::filesystem::path relative;
  std::string content;
};

/// Writes every file to a sibling temp path, then renames them into place.
/// On failure, temp files and any files already renamed are removed.
inline void commit_outputs(const std::filesystem::path & dir, const std::vector<OutputFile> & files)
{
  namespace fs = std::filesystem;
  std::vector<std::pair<fs::path, fs::path>> staged;
  std::vector<fs::path> committed;
  auto cleanup = [&]() {
    std::error_code ec;
    for (const auto & [tmp, final_path] : staged) fs::remove(tmp, ec);
    for (const auto & p : committed) fs::remove(p, ec);
  };
  try {
    for (const auto & f : files) {
      const fs::path final_path = dir / f.relative;
      fs::create_directories(final_path.parent_path());
      fs::path tmp = final_path;
      tmp += ".tmp-predsafe";
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      staged.emplace_back(tmp, final_path);
      out << f.content;
      out.close();
      if (!out) throw Error(ErrorKind::kInternal, "failed writing " + tmp.string());
    }
    for (const auto & [tmp, final_path] : staged) {
      fs::rename(tmp, final_path);
      committed.push_back(final_path);
    }
  } catch (const fs::filesystem_error & e) {
    cleanup();
    throw Error(ErrorKind::kInternal, e.what());
  } catch (...) {
    cleanup();
    throw;
  }
}

/// File-system safe name for a scene id.
inline std::string safe_name(std::string_view id)
{
  std::string out;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    out += ok ? c : '_';
  }
  return out;
}

inline std::string report_file(Grouping g, report::TableFormat f)
{
  return "report_" + std::string(to_string(g)) + "." + std::string(report::extension(f));
}

/// Tables and failures shared by evaluate and report.
inline void append_reports(
  const RunConfig & cfg, const classify::Partition & partition,
  const std::vector<MetricRecord> & records, std::vector<OutputFile> & files,
  std::vector<report::FailureCase> & failures, std::string & overall_markdown)
{
  for (auto g : cfg.groupings) {
    const auto rows = metrics::stratified_report(partition, records, g, cfg.metrics);
    files.push_back({report_file(g, cfg.format), report::render_table(rows, cfg.format)});
    if (g == Grouping::kOverall) {
      overall_markdown = report::render_table(rows, report::TableFormat::kMarkdown);
    }
  }
  failures = report::flag_failures(records, cfg.failures, &partition);
  files.push_back({"failures.csv", report::failures_csv(failures)});
}

struct RunResult
{
  std::vector<OutputFile> files;
  std::string summary;
};

inline void require_path(const std::filesystem::path & p, const char * what, const char * flag)
{
  if (p.empty()) {
    throw Error(
      ErrorKind::kUsage, std::string("missing ") + what + " (" + flag + ")",
      std::string(flag).substr(2));
  }
}

/**
 * @brief Full pipeline: ingest, classify, score, stratify, flag, export.
 */
inline RunResult run_evaluate(const RunConfig & cfg)
{
  require_path(cfg.scenes, "scene corpus", "--scenes");
  require_path(cfg.preds_with, "with_map predictions", "--preds-with");
  require_path(cfg.preds_without, "without_map predictions", "--preds-without");
  require_path(cfg.out, "output directory", "--out");

  ingest::CorpusManifest manifest;
  manifest.scene_files = {cfg.scenes};
  manifest.prediction_files[SemanticCondition::kWithMap] = {cfg.preds_with};
  manifest.prediction_files[SemanticCondition::kWithoutMap] = {cfg.preds_without};
  const auto corpus = ingest::load_corpus(manifest, cfg.horizon, cfg.jobs);
  for (auto c : kAllConditions) {
    const auto it = corpus.predictions.find(c);
    if (it == corpus.predictions.end() || it->second.empty()) {
      throw Error(
        ErrorKind::kValidation,
        "no " + std::string(to_string(c)) + " predictions in corpus", std::string(to_string(c)));
    }
  }

  const auto partition = classify::partition(corpus.scenes, cfg.classify, cfg.jobs);
  const auto records = metrics::corpus_metrics(corpus, cfg.metrics, cfg.jobs);

  RunResult result;
  std::vector<report::FailureCase> failures;
  std::string overall;
  append_reports(cfg, partition, records, result.files, failures, overall);
  result.files.push_back({"records.csv", report::records_csv(records, partition)});
  result.files.push_back({"classification.csv", classify::classification_csv(partition)});

  std::set<std::string> plot_scenes;
  if (cfg.plots == PlotSelection::kAll) {
    for (const auto & s : corpus.scenes) plot_scenes.insert(s.scene_id);
  } else if (cfg.plots == PlotSelection::kFailures) {
    for (const auto & f : failures) plot_scenes.insert(f.scene_id);
  }
  auto find_set = [&](SemanticCondition c, const std::string & id) -> const PredictionSet * {
    const auto & sets = corpus.predictions.at(c);
    auto it = std::lower_bound(sets.begin(), sets.end(), id, [](const PredictionSet & s, const std::string & v) {
      return s.scene_id < v;
    });
    return (it != sets.end() && it->scene_id == id) ? &*it : nullptr;
  };
  for (const auto & id : plot_scenes) {
    const auto * scene = corpus.find_scene(id);
    const auto bundle = report::export_plot_bundle(
      *scene, find_set(SemanticCondition::kWithMap, id),
      find_set(SemanticCondition::kWithoutMap, id), records);
    result.files.push_back(
      {std::filesystem::path("plots") / (safe_name(id) + ".plot.json"),
       report::write_plot_bundle(bundle)});
  }

  std::size_t with = 0;
  for (const auto & r : records) with += r.condition == SemanticCondition::kWithMap;
  result.summary = "model " + corpus.model_id + ": " + std::to_string(corpus.scenes.size()) +
                   " scenes, " + std::to_string(with) + " with_map / " +
                   std::to_string(records.size() - with) + " without_map agent records, " +
                   std::to_string(failures.size()) + " flagged failures\n" + overall;
  return result;
}

/// Rebuild tables and failures from a records.csv written by evaluate.
inline RunResult run_report(const RunConfig & cfg)
{
  require_path(cfg.records, "cached metric records", "--records");
  require_path(cfg.out, "output directory", "--out");
  std::ifstream in(cfg.records, std::ios::binary);
  if (!in) throw Error(ErrorKind::kUsage, "cannot open file", "", cfg.records.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const auto cached = report::parse_records_csv(ss.str(), cfg.records.string());

  RunResult result;
  std::vector<report::FailureCase> failures;
  std::string overall;
  append_reports(cfg, cached.partition, cached.records, result.files, failures, overall);
  result.summary = std::to_string(cached.records.size()) + " cached records, " +
                   std::to_string(failures.size()) + " flagged failures\n" + overall;
  return result;
}

inline RunResult run_classify(const RunConfig & cfg)
{
  require_path(cfg.scenes, "scene corpus", "--scenes");
  const auto scenes = ingest::load_scenes({cfg.scenes}, cfg.horizon, cfg.jobs);
  const auto partition = classify::partition(scenes, cfg.classify, cfg.jobs);
  RunResult result;
  result.files.push_back({"classification.csv", classify::classification_csv(partition)});
  for (const auto & [cell, ids] : partition.cells) {
    result.summary += std::string(to_string(cell.rho)) + "/" + std::string(to_string(cell.tau)) +
                      ": " + std::to_string(ids.size()) + "\n";
  }
  return result;
}

/**
 * @brief Generate a preset corpus plus reference predictions: the
 * constant-turn-rate predictor stands in for the with-map condition and the
 * constant-velocity baseline for the without-map condition.
 */
inline RunResult run_synth(const RunConfig & cfg)
{
  require_path(cfg.out, "output directory", "--out");
  auto specs = synth::preset(cfg.preset, cfg.seed);
  if (!specs) {
    std::string names;
    for (auto n : synth::preset_names()) names += (names.empty() ? "" : ", ") + std::string(n);
    throw Error(ErrorKind::kUsage, "unknown preset '" + cfg.preset + "' (known: " + names + ")", "preset");
  }
  for (auto & s : *specs) {
    s.history = cfg.horizon.history;
    s.future = cfg.horizon.future;
    s.dt = cfg.horizon.dt;
  }
  const std::size_t k = cfg.horizon.samples == 0 ? 20 : cfg.horizon.samples;
  const auto scenes = synth::gen_corpus(*specs, cfg.jobs);

  std::vector<std::string> scene_lines(scenes.size());
  std::vector<std::string> with_lines(scenes.size());
  std::vector<std::string> without_lines(scenes.size());
  parallel_for(scenes.size(), cfg.jobs, [&](std::size_t i) {
    scene_lines[i] = ingest::write_scene(scenes[i]);
    with_lines[i] = ingest::write_predictions(synth::predict_ctr(
      scenes[i], k, cfg.synth_noise_m, cfg.seed, SemanticCondition::kWithMap, cfg.model_id));
    without_lines[i] = ingest::write_predictions(synth::predict_cv(
      scenes[i], k, cfg.synth_noise_m, cfg.seed, SemanticCondition::kWithoutMap, cfg.model_id));
  });
  auto join = [](const std::vector<std::string> & lines) {
    std::string out;
    for (const auto & l : lines) out += l + "\n";
    return out;
  };
  RunResult result;
  result.files.push_back({cfg.preset + ".scenes.jsonl", join(scene_lines)});
  result.files.push_back({cfg.preset + ".with_map.preds.jsonl", join(with_lines)});
  result.files.push_back({cfg.preset + ".without_map.preds.jsonl", join(without_lines)});
  result.summary = "preset " + cfg.preset + " seed " + std::to_string(cfg.seed) + ": " +
                   std::to_string(scenes.size()) + " scenes, K=" + std::to_string(k) + "\n";
  return result;
}

/**
 * @brief Entry point shared by the executable and in-process tests.
 */
inline int run(int argc, const char * const * argv, std::ostream & out = std::cout, std::ostream & err = std::cerr)
{
  CLI::App app{"Stratified evaluation of trajectory predictors", "predsafe"};
  app.require_subcommand(1);

  struct Flags
  {
    std::string scenes, preds_with, preds_without, records, config, out, format, preset;
    std::string jobs, seed;
  } flags;

  auto add_common = [&](CLI::App * sub) {
    sub->add_option("--config", flags.config, "key = value config file (default: $PREDSAFE_CONFIG)");
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option("--jobs", flags.jobs, "worker threads (does not affect outputs)");
  };
  auto * evaluate = app.add_subcommand("evaluate", "score predictions and write stratified reports");
  add_common(evaluate);
  evaluate->add_option("--scenes", flags.scenes, "*.scenes.jsonl corpus");
  evaluate->add_option("--preds-with", flags.preds_with, "with_map *.preds.jsonl");
  evaluate->add_option("--preds-without", flags.preds_without, "without_map *.preds.jsonl");
  evaluate->add_option("--format", flags.format, "table format: csv or markdown");

  auto * classify_cmd = app.add_subcommand("classify", "write the per-scene density/geometry table");
  add_common(classify_cmd);
  classify_cmd->add_option("--scenes", flags.scenes, "*.scenes.jsonl corpus");

  auto * synth_cmd = app.add_subcommand("synth", "generate a synthetic corpus and reference predictions");
  add_common(synth_cmd);
  synth_cmd->add_option("--preset", flags.preset, "straight_sparse, curved_dense or mixed_grid");
  synth_cmd->add_option("--seed", flags.seed, "64-bit generator seed");

  auto * report_cmd = app.add_subcommand("report", "rebuild reports from cached records.csv");
  add_common(report_cmd);
  report_cmd->add_option("--records", flags.records, "records.csv written by evaluate");
  report_cmd->add_option("--format", flags.format, "table format: csv or markdown");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp & e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError & e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    RunConfig cfg;
    std::string config_path = flags.config;
    if (config_path.empty()) {
      if (const char * env = std::getenv("PREDSAFE_CONFIG"); env != nullptr) config_path = env;
    }
    if (!config_path.empty()) apply_config_file(cfg, config_path);

    const std::pair<const char *, std::string *> overrides[] = {
      {"scenes", &flags.scenes}, {"preds_with", &flags.preds_with},
      {"preds_without", &flags.preds_without}, {"records", &flags.records},
      {"out", &flags.out}, {"format", &flags.format}, {"preset", &flags.preset},
      {"jobs", &flags.jobs}, {"seed", &flags.seed}};
    for (const auto & [key, value] : overrides) {
      if (!value->empty()) apply_setting(cfg, key, *value);
    }
    validate_config(cfg);

    RunResult result;
    if (evaluate->parsed()) {
      result = run_evaluate(cfg);
    } else if (classify_cmd->parsed()) {
      result = run_classify(cfg);
      if (cfg.out.empty()) {
        out << result.files.front().content;
        return kExitOk;
      }
    } else if (synth_cmd->parsed()) {
      result = run_synth(cfg);
    } else {
      result = run_report(cfg);
    }
    commit_outputs(cfg.out, result.files);
    out << result.summary;
    return kExitOk;
  } catch (const Error & e) {
    err << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception & e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace cli
}  // namespace predsafe

#endif  // PREDSAFE__CLI_HPP_
