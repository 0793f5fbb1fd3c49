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

#include "waveform.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "error.hpp"

namespace ccsforge::waveform {

namespace {

void check_times(const std::vector<double>& times, const char* what) {
  if (times.size() < 2) {
    fail(ErrorKind::MalformedWaveform, std::string(what) + " needs at least 2 points");
  }
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!std::isfinite(times[k])) {
      fail(ErrorKind::MalformedWaveform, std::string(what) + " has a non-finite time");
    }
    if (k > 0 && !(times[k] > times[k - 1])) {
      std::ostringstream os;
      os << what << " times not strictly increasing at index " << k;
      fail(ErrorKind::MalformedWaveform, os.str());
    }
  }
}

}  // namespace

void validate(const Condition& c) {
  if (c.cell_type.empty()) fail(ErrorKind::InvalidArgument, "condition without cell type");
  if (c.drive_strength < 1) fail(ErrorKind::InvalidArgument, "drive_strength must be >= 1");
  if (!(c.voltage > 0.0)) fail(ErrorKind::InvalidArgument, "voltage must be > 0");
  if (!(c.input_slew > 0.0)) fail(ErrorKind::InvalidArgument, "input_slew must be > 0");
  if (!(c.output_load > 0.0)) fail(ErrorKind::InvalidArgument, "output_load must be > 0");
  if (c.arc_id < 0) fail(ErrorKind::InvalidArgument, "arc_id must be >= 0");
  if (!std::isfinite(c.temperature)) fail(ErrorKind::InvalidArgument, "temperature not finite");
}

std::string describe(const Condition& c) {
  std::ostringstream os;
  os.precision(6);
  os << c.cell_type << " X" << c.drive_strength << " " << c.process << " " << c.voltage << "V "
     << c.temperature << "C arc" << c.arc_id << " slew=" << c.input_slew
     << " load=" << c.output_load;
  return os.str();
}

Direction arc_direction(int arc_id) {
  return arc_id % 2 == 0 ? Direction::Falling : Direction::Rising;
}

CurrentWaveform::CurrentWaveform(std::vector<double> times, std::vector<double> currents)
    : times_(std::move(times)), currents_(std::move(currents)) {
  if (times_.size() != currents_.size()) {
    fail(ErrorKind::MalformedWaveform, "time and current counts differ");
  }
  check_times(times_, "current waveform");
  for (double i : currents_) {
    if (!std::isfinite(i)) fail(ErrorKind::MalformedWaveform, "non-finite current value");
  }
}

VoltageWaveform::VoltageWaveform(std::vector<double> times, std::vector<double> volts, double vdd)
    : times_(std::move(times)), volts_(std::move(volts)), vdd_(vdd) {
  if (!(vdd_ > 0.0) || !std::isfinite(vdd_)) {
    fail(ErrorKind::MalformedWaveform, "vdd must be positive");
  }
  if (times_.size() != volts_.size()) {
    fail(ErrorKind::MalformedWaveform, "time and voltage counts differ");
  }
  check_times(times_, "voltage waveform");
  for (double v : volts_) {
    if (!std::isfinite(v) || v < -0.1 * vdd_ || v > 1.1 * vdd_) {
      fail(ErrorKind::MalformedWaveform, "voltage outside [-0.1, 1.1] x vdd");
    }
  }
}

double interpolate(std::span<const double> times, std::span<const double> values, double t) {
  if (t <= times.front()) return values.front();
  if (t >= times.back()) return values.back();
  auto it = std::upper_bound(times.begin(), times.end(), t);
  auto hi = static_cast<std::size_t>(it - times.begin());
  std::size_t lo = hi - 1;
  if (times[lo] == t) return values[lo];
  double f = (t - times[lo]) / (times[hi] - times[lo]);
  double v = values[lo] + (values[hi] - values[lo]) * f;
  return std::clamp(v, std::min(values[lo], values[hi]), std::max(values[lo], values[hi]));
}

CurrentWaveform resample_linear(const CurrentWaveform& w, int n) {
  if (n < 2) fail(ErrorKind::InvalidArgument, "resample length must be >= 2");
  if (w.size() < 2) fail(ErrorKind::MalformedWaveform, "waveform needs at least 2 points");
  const auto& ts = w.times();
  const auto& is = w.currents();
  const double t0 = ts.front();
  const double span = ts.back() - t0;
  std::vector<double> times(static_cast<std::size_t>(n));
  std::vector<double> currents(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    double t = k == n - 1 ? ts.back() : t0 + span * static_cast<double>(k) / (n - 1);
    times[k] = t;
    currents[k] = interpolate(ts, is, t);
  }
  return CurrentWaveform(std::move(times), std::move(currents));
}

VoltageWaveform current_to_voltage(const CurrentWaveform& w, double load, Direction direction,
                                   double vdd) {
  if (!(load > 0.0) || !std::isfinite(load)) {
    fail(ErrorKind::InvalidLoad, "load must be a positive capacitance");
  }
  if (!(vdd > 0.0)) fail(ErrorKind::InvalidArgument, "vdd must be positive");
  const auto& ts = w.times();
  const auto& is = w.currents();
  const double v0 = direction == Direction::Rising ? 0.0 : vdd;
  const double sign = direction == Direction::Rising ? 1.0 : -1.0;
  std::vector<double> volts(ts.size());
  double charge = 0.0;
  volts[0] = v0;
  for (std::size_t k = 1; k < ts.size(); ++k) {
    charge += 0.5 * (is[k] + is[k - 1]) * (ts[k] - ts[k - 1]);
    volts[k] = std::clamp(v0 + sign * charge / load, 0.0, vdd);
  }
  return VoltageWaveform(ts, std::move(volts), vdd);
}

double rmse(const VoltageWaveform& a, const VoltageWaveform& b) {
  if (a.size() != b.size()) fail(ErrorKind::GridMismatch, "waveform lengths differ");
  if (a.times() != b.times()) fail(ErrorKind::GridMismatch, "waveform time grids differ");
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    double d = a.volts()[k] - b.volts()[k];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(a.size()));
}

double align_rmse(const VoltageWaveform& a, const VoltageWaveform& b) {
  const double lo = std::max(a.times().front(), b.times().front());
  const double hi = std::min(a.times().back(), b.times().back());
  if (!(hi > lo)) fail(ErrorKind::NoOverlap, "waveform time spans do not overlap");

  std::vector<double> grid;
  grid.reserve(a.size() + b.size() + 2);
  grid.push_back(lo);
  for (double t : a.times()) {
    if (t > lo && t < hi) grid.push_back(t);
  }
  for (double t : b.times()) {
    if (t > lo && t < hi) grid.push_back(t);
  }
  grid.push_back(hi);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  double acc = 0.0;
  for (double t : grid) {
    double d = interpolate(a.times(), a.volts(), t) - interpolate(b.times(), b.volts(), t);
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(grid.size()));
}

double crossing_time(const VoltageWaveform& v, double threshold_frac) {
  const double th = threshold_frac * v.vdd();
  const auto& ts = v.times();
  const auto& vs = v.volts();
  int crossings = 0;
  double when = 0.0;
  for (std::size_t k = 0; k + 1 < vs.size(); ++k) {
    bool above0 = vs[k] >= th;
    bool above1 = vs[k + 1] >= th;
    if (above0 == above1) continue;
    ++crossings;
    double f = (th - vs[k]) / (vs[k + 1] - vs[k]);
    when = ts[k] + f * (ts[k + 1] - ts[k]);
  }
  if (crossings != 1) {
    std::ostringstream os;
    os << "expected exactly one crossing of " << th << " V, found " << crossings;
    fail(ErrorKind::AmbiguousCrossing, os.str());
  }
  return when;
}

double extract_delay(const VoltageWaveform& vin, const VoltageWaveform& vout,
                     double threshold_frac) {
  return crossing_time(vout, threshold_frac) - crossing_time(vin, threshold_frac);
}

double input_fraction(const Condition& c, double t) {
  if (t <= 0.0) return 0.0;
  if (t >= c.input_slew) return 1.0;
  const double x = t / c.input_slew;
  return x * x * x * (10.0 + x * (6.0 * x - 15.0));
}

VoltageWaveform input_ramp(const Condition& c, double t_end) {
  const bool input_rises = arc_direction(c.arc_id) == Direction::Falling;
  constexpr int kSegments = 64;
  std::vector<double> ts;
  std::vector<double> vs;
  for (int k = 0; k <= kSegments; ++k) {
    const double t = c.input_slew * k / kSegments;
    const double f = input_fraction(c, t);
    ts.push_back(t);
    vs.push_back(c.voltage * (input_rises ? f : 1.0 - f));
  }
  if (t_end > c.input_slew) {
    ts.push_back(t_end);
    vs.push_back(vs.back());
  }
  return VoltageWaveform(std::move(ts), std::move(vs), c.voltage);
}

double EncodingSchema::process_code(const std::string& label) const {
  for (const auto& [name, code] : process_codes) {
    if (name == label) return code;
  }
  fail(ErrorKind::UnknownCategory, "process corner '" + label + "' not in schema");
}

FeatureVector encode_condition(const Condition& c, const EncodingSchema& schema) {
  validate(c);
  FeatureVector f;
  f.reserve(schema.feature_dim());
  bool found = false;
  for (const auto& name : schema.cell_types) {
    bool match = name == c.cell_type;
    found = found || match;
    f.push_back(match ? 1.0 : 0.0);
  }
  if (!found) fail(ErrorKind::UnknownCategory, "cell type '" + c.cell_type + "' not in schema");
  f.push_back(schema.process_code(c.process));
  f.push_back(c.voltage);
  f.push_back(c.temperature);
  f.push_back(std::log2(static_cast<double>(c.drive_strength)));
  f.push_back(std::log(c.input_slew));
  f.push_back(std::log(c.output_load));
  if (c.arc_id >= schema.arc_count) {
    fail(ErrorKind::UnknownCategory, "arc " + std::to_string(c.arc_id) + " not in schema");
  }
  for (int a = 0; a < schema.arc_count; ++a) f.push_back(a == c.arc_id ? 1.0 : 0.0);
  return f;
}

Eigen::MatrixXd encode_all(std::span<const Condition> conditions, const EncodingSchema& schema) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(conditions.size()),
                    static_cast<Eigen::Index>(schema.feature_dim()));
  for (std::size_t r = 0; r < conditions.size(); ++r) {
    auto f = encode_condition(conditions[r], schema);
    for (std::size_t d = 0; d < f.size(); ++d) {
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(d)) = f[d];
    }
  }
  return x;
}

ColumnScaler ColumnScaler::fit(const Eigen::MatrixXd& data) {
  if (data.rows() == 0 || data.cols() == 0) fail(ErrorKind::EmptyDataset, "no rows to normalize");
  if (data.rows() < 2) fail(ErrorKind::InsufficientData, "normalizer needs at least 2 rows");
  ColumnScaler s;
  const auto cols = data.cols();
  const auto rows = static_cast<double>(data.rows());
  s.mean.resize(cols);
  s.stddev.resize(cols);
  s.constant.assign(static_cast<std::size_t>(cols), false);
  for (Eigen::Index c = 0; c < cols; ++c) {
    auto col = data.col(c);
    double mu = col.sum() / rows;
    double var = (col.array() - mu).square().sum() / rows;
    s.mean(c) = mu;
    if (col.maxCoeff() == col.minCoeff() || !(var > 0.0)) {
      s.stddev(c) = 1.0;
      s.constant[static_cast<std::size_t>(c)] = true;
    } else {
      s.stddev(c) = std::sqrt(var);
    }
  }
  return s;
}

Eigen::MatrixXd ColumnScaler::apply(const Eigen::MatrixXd& data) const {
  if (data.cols() != dims()) fail(ErrorKind::Dimension, "column count differs from normalizer");
  Eigen::MatrixXd out = data;
  for (Eigen::Index c = 0; c < dims(); ++c) {
    if (constant[static_cast<std::size_t>(c)]) continue;
    out.col(c) = (data.col(c).array() - mean(c)) / stddev(c);
  }
  return out;
}

Eigen::MatrixXd ColumnScaler::invert(const Eigen::MatrixXd& data) const {
  if (data.cols() != dims()) fail(ErrorKind::Dimension, "column count differs from normalizer");
  Eigen::MatrixXd out = data;
  for (Eigen::Index c = 0; c < dims(); ++c) {
    if (constant[static_cast<std::size_t>(c)]) continue;
    out.col(c) = data.col(c).array() * stddev(c) + mean(c);
  }
  return out;
}

Eigen::VectorXd ColumnScaler::apply_row(std::span<const double> row) const {
  if (static_cast<Eigen::Index>(row.size()) != dims()) {
    fail(ErrorKind::Dimension, "feature length differs from normalizer");
  }
  Eigen::VectorXd out(dims());
  for (Eigen::Index c = 0; c < dims(); ++c) {
    double v = row[static_cast<std::size_t>(c)];
    out(c) = constant[static_cast<std::size_t>(c)] ? v : (v - mean(c)) / stddev(c);
  }
  return out;
}

Normalizer fit_normalizer(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets) {
  if (features.rows() != targets.rows()) {
    fail(ErrorKind::Dimension, "feature and target row counts differ");
  }
  return Normalizer{ColumnScaler::fit(features), ColumnScaler::fit(targets)};
}

}  // namespace ccsforge::waveform
