/*
 * Copyright 2026 The ccs-forge Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "active_learning.hpp"
#include "gpr.hpp"
#include "library_io.hpp"
#include "refsim.hpp"
#include "waveform.hpp"

// Config-driven commands: gen, characterize, eval, report. Every output of a
// run lands in <run.output_dir>/<config hash>/.
namespace ccsforge::pipeline {

struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output_root = "runs";
  double holdout_fraction = 0.2;
  int n = 32;

  refsim::SimConfig sim;
  std::vector<refsim::CellModel> cells;
  std::vector<refsim::Corner> corners;
  std::vector<double> slews;  // s
  std::vector<double> loads;  // F
  std::vector<std::pair<std::string, double>> process_codes;

  gpr::GpOptions gp;
  bool freeze_hyperparams = false;
  bool warm_start = false;
  al::AcquisitionConfig al;
  bool track_holdout = true;

  std::string canonical;  // sorted key = value text, output_dir excluded
  std::string hash;       // 16 hex digits of canonical

  waveform::EncodingSchema schema() const;
  std::filesystem::path run_dir() const { return output_root / hash; }
};

/// Parses and validates everything up front; unknown keys are a Config error.
RunConfig parse_config(const std::string& text, const std::string& source,
                       std::optional<std::uint64_t> seed_override = std::nullopt);
RunConfig load_config(const std::filesystem::path& path,
                      std::optional<std::uint64_t> seed_override = std::nullopt);

al::Electrical electrical_for(const RunConfig& cfg, const waveform::Condition& c);
al::ElectricalFn electrical_fn(const RunConfig& cfg);

/// Seeded holdout split of `rows` indices: (pool, holdout), both ascending.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_holdout(std::size_t rows,
                                                                            double fraction,
                                                                            std::uint64_t seed);

struct Paths {
  std::filesystem::path dir;
  std::filesystem::path pool() const { return dir / "pool.csv"; }
  std::filesystem::path holdout() const { return dir / "holdout.csv"; }
  std::filesystem::path gen_manifest() const { return dir / "gen.json"; }
  std::filesystem::path model(const std::string& cell) const { return dir / ("model_" + cell + ".ccsgpr"); }
  std::filesystem::path history(const std::string& cell) const { return dir / ("history_" + cell + ".csv"); }
  std::filesystem::path selected(const std::string& cell) const { return dir / ("selected_" + cell + ".txt"); }
  std::filesystem::path characterize_manifest() const { return dir / "characterize.json"; }
  std::filesystem::path library() const { return dir / "library_pred.lib"; }
  std::filesystem::path accuracy_csv() const { return dir / "accuracy.csv"; }
  std::filesystem::path accuracy_txt() const { return dir / "accuracy.txt"; }
  std::filesystem::path storage_csv() const { return dir / "storage.csv"; }
  std::filesystem::path storage_txt() const { return dir / "storage.txt"; }
  std::filesystem::path eval_manifest() const { return dir / "eval.json"; }
  std::filesystem::path trend_scores() const { return dir / "trend_scores.csv"; }
  std::filesystem::path trend_selected() const { return dir / "trend_selected.csv"; }
  std::filesystem::path runtime_csv() const { return dir / "runtime.csv"; }
  std::filesystem::path runtime_txt() const { return dir / "runtime.txt"; }
};

struct GenSummary {
  std::size_t rows = 0;
  std::size_t pool_rows = 0;
  std::size_t holdout_rows = 0;
  double simulate_seconds = 0.0;
};

struct CellRun {
  std::string cell;
  std::size_t pool_size = 0;
  std::size_t labeled = 0;
  int iterations = 0;
  al::Decision stop = al::Decision::Continue;
  std::size_t oracle_calls = 0;
  al::LoopTimings timings;
  std::vector<std::size_t> labeling_order;  // pool.csv row indices
};

struct CharacterizeSummary {
  std::vector<CellRun> cells;
  std::size_t holdout_rows = 0;
  bool aborted = false;
  std::string abort_message;
};

GenSummary cmd_gen(const RunConfig& cfg, std::ostream& log);
/// Throws OracleFailure (after writing the partial manifest) when a label
/// cannot be produced.
CharacterizeSummary cmd_characterize(const RunConfig& cfg, bool from_dataset, std::ostream& log);
library::AccuracyReport cmd_eval(const RunConfig& cfg, std::ostream& log);
void cmd_report(const RunConfig& cfg, std::ostream& log);

}  // namespace ccsforge::pipeline
