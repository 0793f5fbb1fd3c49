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

#include <compare>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace ccsforge::waveform {

/// One characterization point of a cell.
struct Condition {
  std::string cell_type;
  int drive_strength = 1;
  std::string process;
  double voltage = 0.0;      // V
  double temperature = 25;   // degC
  int arc_id = 0;
  double input_slew = 0.0;   // s
  double output_load = 0.0;  // F

  auto operator<=>(const Condition&) const = default;
  bool operator==(const Condition&) const = default;
};

/// Throws InvalidArgument when the positivity invariants do not hold.
void validate(const Condition& c);

std::string describe(const Condition& c);

enum class Direction { Rising, Falling };

/// Even arcs switch the output low (input rises), odd arcs switch it high.
Direction arc_direction(int arc_id);

/// Time-ordered current samples. Construction validates the invariants.
class CurrentWaveform {
 public:
  CurrentWaveform() = default;
  CurrentWaveform(std::vector<double> times, std::vector<double> currents);

  std::size_t size() const { return times_.size(); }
  const std::vector<double>& times() const { return times_; }
  const std::vector<double>& currents() const { return currents_; }

  bool operator==(const CurrentWaveform&) const = default;

 private:
  std::vector<double> times_;
  std::vector<double> currents_;
};

class VoltageWaveform {
 public:
  VoltageWaveform() = default;
  VoltageWaveform(std::vector<double> times, std::vector<double> volts, double vdd);

  std::size_t size() const { return times_.size(); }
  const std::vector<double>& times() const { return times_; }
  const std::vector<double>& volts() const { return volts_; }
  double vdd() const { return vdd_; }

  bool operator==(const VoltageWaveform&) const = default;

 private:
  std::vector<double> times_;
  std::vector<double> volts_;
  double vdd_ = 0.0;
};

using FeatureVector = std::vector<double>;

// Piecewise-linear evaluation of (times, values) at t, clamped to the ends.
double interpolate(std::span<const double> times, std::span<const double> values, double t);

CurrentWaveform resample_linear(const CurrentWaveform& w, int n);

VoltageWaveform current_to_voltage(const CurrentWaveform& w, double load, Direction direction,
                                   double vdd);

double rmse(const VoltageWaveform& a, const VoltageWaveform& b);

/// RMSE on the union of both grids restricted to their common time span.
double align_rmse(const VoltageWaveform& a, const VoltageWaveform& b);

/// Single threshold crossing of `threshold_frac * vdd`, linearly interpolated.
double crossing_time(const VoltageWaveform& v, double threshold_frac = 0.5);

double extract_delay(const VoltageWaveform& vin, const VoltageWaveform& vout,
                     double threshold_frac = 0.5);

/// Input stimulus progress in [0, 1]: a quintic smoothstep over
/// [0, input_slew] (zero first and second derivatives at both ends), with
/// its 50% point at input_slew / 2.
double input_fraction(const Condition& c, double t);

/// Input voltage for a condition, sampled at 65 points over the transition
/// and held until `t_end`. Rises for falling-output arcs and falls for
/// rising-output arcs.
VoltageWaveform input_ramp(const Condition& c, double t_end);

/// Enumerated categories and feature layout shared by every sample of a run.
///
/// Layout: cell-type one-hot, process code, voltage, temperature,
/// log2(drive strength), ln(input slew), ln(output load), arc one-hot.
struct EncodingSchema {
  std::vector<std::string> cell_types;
  std::vector<std::pair<std::string, double>> process_codes;
  int arc_count = 2;

  std::size_t feature_dim() const { return cell_types.size() + 6 + static_cast<std::size_t>(arc_count); }
  double process_code(const std::string& label) const;
  bool operator==(const EncodingSchema&) const = default;
};

FeatureVector encode_condition(const Condition& c, const EncodingSchema& schema);

Eigen::MatrixXd encode_all(std::span<const Condition> conditions, const EncodingSchema& schema);

/// Per-column z-score statistics (population divisor). Columns with no
/// spread keep std = 1, are flagged constant and pass through unchanged.
struct ColumnScaler {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;
  std::vector<bool> constant;

  static ColumnScaler fit(const Eigen::MatrixXd& data);

  Eigen::Index dims() const { return mean.size(); }
  Eigen::MatrixXd apply(const Eigen::MatrixXd& data) const;
  Eigen::MatrixXd invert(const Eigen::MatrixXd& data) const;
  Eigen::VectorXd apply_row(std::span<const double> row) const;
  bool operator==(const ColumnScaler&) const = default;
};

struct Normalizer {
  ColumnScaler features;
  ColumnScaler targets;
};

Normalizer fit_normalizer(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets);

}  // namespace ccsforge::waveform
