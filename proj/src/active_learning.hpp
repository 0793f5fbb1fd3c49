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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "gpr.hpp"
#include "waveform.hpp"

// Pool-based active learning: delta-method acquisition on the voltage RMSE
// loss and the select / label / retrain loop.
namespace ccsforge::al {

struct AcquisitionConfig {
  // Finite-difference steps relative to the predicted time span and peak
  // |current|; the absolute values take precedence when set.
  double delta_time_rel = 1e-4;
  double delta_current_rel = 1e-4;
  std::optional<double> delta_time;     // s
  std::optional<double> delta_current;  // A
  double batch_fraction = 0.01;
  double initial_fraction = 0.10;
  double score_threshold = 6.4e-5;  // V^2, (1% of a 0.8 V supply)^2
  int max_iterations = 19;
  bool latent_only = false;
  std::uint64_t seed = 0;

  /// Throws InvalidArgument when an invariant does not hold.
  void validate() const;
};

/// How a predicted current becomes a voltage for one condition.
struct Electrical {
  double load = 0.0;  // F, total
  waveform::Direction direction = waveform::Direction::Falling;
  double vdd = 0.0;
};

struct Steps {
  double time = 0.0;
  double current = 0.0;
};

Steps resolve_steps(const gpr::PredictedWaveform& p, const AcquisitionConfig& cfg);

/// Forward-difference |dL/dt_j| with L the RMSE against the prediction's own
/// voltage. `repaired` reports whether the shifted point had to be pushed
/// past a neighbour.
double grad_time(const gpr::PredictedWaveform& p, int j, double delta, const Electrical& el,
                 bool* repaired = nullptr);
double grad_time(const gpr::PredictedWaveform& p, int j, const AcquisitionConfig& cfg,
                 const Electrical& el, bool* repaired = nullptr);

double grad_current(const gpr::PredictedWaveform& p, int j, double delta, const Electrical& el);
double grad_current(const gpr::PredictedWaveform& p, int j, const AcquisitionConfig& cfg,
                    const Electrical& el);

struct Term {
  double grad2 = 0.0;
  double variance = 0.0;
  double contribution = 0.0;  // grad2 * variance
};

struct AcquisitionReport {
  std::size_t candidate = 0;
  double score = 0.0;  // sum of all contributions
  std::vector<Term> time_terms;
  std::vector<Term> current_terms;
  int degenerate_perturbations = 0;
};

AcquisitionReport acquisition_score(const gpr::PredictedWaveform& p, const AcquisitionConfig& cfg,
                                    const Electrical& el);
AcquisitionReport acquisition_score(const gpr::GprEnsemble& e, const waveform::Condition& c,
                                    const AcquisitionConfig& cfg, const Electrical& el);

struct Scored {
  std::size_t index = 0;
  double score = 0.0;
};

/// The ceil(batch_fraction * pool_size) highest scores, ties to the smaller
/// index, capped at the number of scores.
std::vector<std::size_t> select_batch(std::span<const Scored> scores, std::size_t pool_size,
                                      const AcquisitionConfig& cfg);

std::size_t batch_size(std::size_t pool_size, double fraction);

enum class Decision { Continue, MaxIterations, PoolExhausted, ScoreThreshold };

const char* to_string(Decision d);

struct HistoryRow {
  int iteration = 0;
  std::size_t selected_count = 0;
  double max_score = 0.0;
  double mean_score = 0.0;
  std::optional<double> holdout_rmse;
};

struct LoopState {
  std::vector<std::size_t> selected;    // ascending pool indices
  std::vector<std::size_t> candidates;  // ascending pool indices
  int iteration = 0;
  std::vector<HistoryRow> history;
};

Decision check_termination(const LoopState& state, std::span<const Scored> scores,
                           const AcquisitionConfig& cfg);

std::string format_history(std::span<const HistoryRow> history);

using Oracle = std::function<waveform::CurrentWaveform(const waveform::Condition&)>;
using ElectricalFn = std::function<Electrical(const waveform::Condition&)>;

struct LoopOptions {
  gpr::GpOptions gp;
  bool freeze_hyperparams = false;
  bool warm_start = false;
  const waveform::Dataset* holdout = nullptr;
};

struct LoopTimings {
  double simulate = 0.0;
  double fit = 0.0;
  double score = 0.0;
};

struct LoopResult {
  gpr::GprEnsemble ensemble;
  LoopState state;
  std::vector<std::size_t> labeling_order;  // pool indices, in oracle-call order
  waveform::Dataset labeled;                // ascending pool index order
  Decision stop = Decision::Continue;
  std::size_t oracle_calls = 0;
  int degenerate_perturbations = 0;
  LoopTimings timings;
  bool aborted = false;
  std::string abort_message;
  std::optional<waveform::Condition> failed_condition;
};

/// Mean over samples of the aligned voltage RMSE between the ensemble's mean
/// prediction and the stored waveform.
double holdout_rmse(const gpr::GprEnsemble& e, const waveform::Dataset& d, const ElectricalFn& el);

LoopResult run_loop(std::span<const waveform::Condition> pool, int n, const Oracle& oracle,
                    const ElectricalFn& electrical, const waveform::EncodingSchema& schema,
                    const AcquisitionConfig& cfg, const LoopOptions& opts);

}  // namespace ccsforge::al
