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
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "keyed_config.hpp"
#include "waveform.hpp"

// Synthetic transient simulator used as the labeling oracle.
//
// A smoothstep input ramp drives a smoothed alpha-power-law device that
// charges or discharges a lumped output capacitance (external load plus
// intrinsic capacitance scaled by drive strength). Integration is explicit
// Euler at a fixed step, so results are bit-reproducible. Currents are reported as the
// magnitude of the load current, positive for both output directions.
namespace ccsforge::refsim {

// Supply at which base_drive is specified.
inline constexpr double kNominalVdd = 0.8;

struct CellModel {
  std::string cell_type;
  double base_drive = 40e-6;    // A, unit strength, nominal PVT, full overdrive
  double vth_frac = 0.35;       // threshold as a fraction of the supply
  double alpha = 1.3;           // velocity-saturation exponent
  double intrinsic_cap = 2e-15; // F per unit strength
  double temp_coeff = -1.5e-3;  // 1/degC around 25 degC
  double rise_ratio = 0.8;      // pull-up / pull-down strength
  std::map<std::string, double> process_shift{{"SS", 0.85}, {"TT", 1.0}, {"FF", 1.15}};
  int arc_count = 2;
  std::vector<int> strengths{1};

  /// Throws InvalidArgument when a field invariant does not hold.
  void validate() const;
};

struct SimConfig {
  double time_step = 1e-13;
  double max_sim_time = 2e-8;
  double convergence_tol = 1e-3;
};

struct Corner {
  std::string process;
  double voltage = 0.8;
  double temperature = 25.0;
};

/// Output capacitance seen by the driver for this condition.
double total_load(const CellModel& cell, const waveform::Condition& c);

/// Input 50% crossing time, which anchors a CCS table's time axis.
double reference_time(const waveform::Condition& c);

waveform::CurrentWaveform simulate_arc(const CellModel& cell, const waveform::Condition& c,
                                       const SimConfig& cfg);
/// Process-wide count of simulate_arc calls.
std::uint64_t simulation_count();

/// Conditions of the full cross-product in deterministic order:
/// cell, strength, corner, arc, slew, load.
std::vector<waveform::Condition> grid_conditions(std::span<const CellModel> cells,
                                                 std::span<const Corner> corners,
                                                 std::span<const double> slews,
                                                 std::span<const double> loads);

waveform::Dataset generate_grid(std::span<const CellModel> cells, std::span<const Corner> corners,
                                std::span<const double> slews, std::span<const double> loads,
                                const SimConfig& cfg, int n);

/// Simulates and resamples one condition to n points.
waveform::Sample label(const CellModel& cell, const waveform::Condition& c, const SimConfig& cfg,
                       int n);

const CellModel& find_cell(std::span<const CellModel> cells, const std::string& cell_type);

/// Reads `cell.<NAME>.<field>` entries.
std::vector<CellModel> cells_from_config(const KeyedConfig& cfg);

}  // namespace ccsforge::refsim
