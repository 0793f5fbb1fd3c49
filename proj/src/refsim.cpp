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

#include "refsim.hpp"

#include <atomic>
#include <cmath>

#include "error.hpp"
#include "textio.hpp"

namespace ccsforge::refsim {

using waveform::Condition;
using waveform::CurrentWaveform;
using waveform::Direction;

void CellModel::validate() const {
  if (cell_type.empty()) fail(ErrorKind::InvalidArgument, "cell model without a name");
  auto bad = [&](const std::string& why) {
    fail(ErrorKind::InvalidArgument, "cell " + cell_type + ": " + why);
  };
  if (!(base_drive > 0.0)) bad("base_drive must be > 0");
  if (!(vth_frac > 0.0 && vth_frac < 1.0)) bad("vth_frac must be in (0, 1)");
  if (!(alpha >= 1.0 && alpha <= 2.0)) bad("alpha must be in [1, 2]");
  if (!(intrinsic_cap >= 0.0)) bad("intrinsic_cap must be >= 0");
  if (!(rise_ratio > 0.0)) bad("rise_ratio must be > 0");
  if (arc_count < 1) bad("arc_count must be >= 1");
  if (process_shift.empty()) bad("process_shift is empty");
  for (const auto& [label, shift] : process_shift) {
    if (!(shift > 0.0)) bad("process_shift for " + label + " must be > 0");
  }
  for (int s : strengths) {
    if (s < 1) bad("drive strengths must be >= 1");
  }
}

double total_load(const CellModel& cell, const Condition& c) {
  return c.output_load + cell.intrinsic_cap * c.drive_strength;
}

double reference_time(const Condition& c) { return 0.5 * c.input_slew; }

namespace {

std::atomic<std::uint64_t> g_simulations{0};

constexpr double kBoltzmannOverQ = 8.617333262e-5;  // V/K
constexpr double kSlopeFactor = 1.5;

// Drain current of an alpha-power-law device normalised to its saturation
// current at full nominal overdrive. The overdrive is softplus-smoothed over
// `smooth` volts and the triode region follows tanh, which keeps the current
// infinitely differentiable in both terminal voltages.
double device_current(double vgs, double vds, double vth, double vov_nominal, double alpha,
                      double smooth) {
  if (vds <= 0.0) return 0.0;
  const double x = (vgs - vth) / smooth;
  const double vov = smooth * (x > 30.0 ? x : std::log1p(std::exp(x)));
  const double isat = std::pow(vov / vov_nominal, alpha);
  const double vdsat = 0.5 * vov;
  return isat * std::tanh(2.0 * vds / vdsat);
}

}  // namespace

std::uint64_t simulation_count() { return g_simulations.load(std::memory_order_relaxed); }

CurrentWaveform simulate_arc(const CellModel& cell, const Condition& c, const SimConfig& cfg) {
  g_simulations.fetch_add(1, std::memory_order_relaxed);
  cell.validate();
  if (c.cell_type != cell.cell_type) {
    fail(ErrorKind::InvalidArgument, "condition cell " + c.cell_type + " != model " + cell.cell_type);
  }
  if (c.arc_id < 0 || c.arc_id >= cell.arc_count) {
    fail(ErrorKind::InvalidArgument, "arc " + std::to_string(c.arc_id) + " out of range");
  }
  const double cap = total_load(cell, c);
  if (!(cap > 0.0)) fail(ErrorKind::InvalidCircuit, "zero total load capacitance");
  waveform::validate(c);
  if (!(cfg.time_step > 0.0) || !(cfg.convergence_tol > 0.0)) {
    fail(ErrorKind::InvalidArgument, "time_step and convergence_tol must be > 0");
  }
  auto shift = cell.process_shift.find(c.process);
  if (shift == cell.process_shift.end()) {
    fail(ErrorKind::UnknownCategory, "cell " + cell.cell_type + " has no process " + c.process);
  }

  const Direction dir = waveform::arc_direction(c.arc_id);
  const bool rising = dir == Direction::Rising;
  const int pin = c.arc_id / 2;
  const double temp_factor = 1.0 + cell.temp_coeff * (c.temperature - 25.0);
  if (!(temp_factor > 0.0)) fail(ErrorKind::InvalidArgument, "temperature outside model range");
  const double drive = cell.base_drive * c.drive_strength * shift->second * temp_factor *
                       (rising ? cell.rise_ratio : 1.0) / (1.0 + 0.15 * pin);

  const double vdd = c.voltage;
  const double vth = cell.vth_frac * vdd;
  const double vov_nominal = (1.0 - cell.vth_frac) * kNominalVdd;
  const double rail = rising ? vdd : 0.0;
  const double smooth = kSlopeFactor * kBoltzmannOverQ * (c.temperature + 273.15);
  const double dt = cfg.time_step;

  std::vector<double> times;
  std::vector<double> currents;
  double vout = rising ? 0.0 : vdd;
  double prev_gap = std::abs(vout - rail);
  for (long long k = 0;; ++k) {
    const double t = static_cast<double>(k) * dt;
    if (t > cfg.max_sim_time) {
      fail(ErrorKind::NonConvergence, "output did not settle for " + waveform::describe(c));
    }
    // Rising output: input falls and the pull-up sees vgs = vdd - vin.
    const double vgs = waveform::input_fraction(c, t) * vdd;
    const double vds = rising ? vdd - vout : vout;
    const double i = drive * device_current(vgs, vds, vth, vov_nominal, cell.alpha, smooth);
    const double gap = std::abs(vout - rail);
    if (gap <= cfg.convergence_tol && k > 0) {
      // End exactly where the output enters the tolerance band so that the
      // waveform span does not jump by whole steps between conditions.
      const double frac = (prev_gap - cfg.convergence_tol) / (prev_gap - gap);
      const double t_end = times.back() + frac * dt;
      if (t_end > times.back()) {
        currents.push_back(currents.back() + frac * (i - currents.back()));
        times.push_back(t_end);
      }
      break;
    }
    times.push_back(t);
    currents.push_back(i);
    if (gap <= cfg.convergence_tol) break;
    vout += (rising ? i : -i) * dt / cap;
    prev_gap = gap;
  }
  return CurrentWaveform(std::move(times), std::move(currents));
}

std::vector<Condition> grid_conditions(std::span<const CellModel> cells,
                                       std::span<const Corner> corners,
                                       std::span<const double> slews,
                                       std::span<const double> loads) {
  std::vector<Condition> out;
  for (const auto& cell : cells) {
    for (int strength : cell.strengths) {
      for (const auto& corner : corners) {
        for (int arc = 0; arc < cell.arc_count; ++arc) {
          for (double slew : slews) {
            for (double load : loads) {
              out.push_back(Condition{cell.cell_type, strength, corner.process, corner.voltage,
                                      corner.temperature, arc, slew, load});
            }
          }
        }
      }
    }
  }
  return out;
}

waveform::Sample label(const CellModel& cell, const Condition& c, const SimConfig& cfg, int n) {
  try {
    return waveform::Sample{c, waveform::resample_linear(simulate_arc(cell, c, cfg), n)};
  } catch (const Error& e) {
    throw Error(e.kind(), std::string(e.what()) + " [condition: " + waveform::describe(c) + "]");
  }
}

waveform::Dataset generate_grid(std::span<const CellModel> cells, std::span<const Corner> corners,
                                std::span<const double> slews, std::span<const double> loads,
                                const SimConfig& cfg, int n) {
  if (cells.empty() || corners.empty() || slews.empty() || loads.empty()) {
    fail(ErrorKind::InvalidArgument, "grid axes must be non-empty");
  }
  for (const auto& cell : cells) {
    if (cell.strengths.empty()) fail(ErrorKind::InvalidArgument, "cell " + cell.cell_type + " has no strengths");
  }
  waveform::Dataset d;
  d.n = n;
  for (const auto& c : grid_conditions(cells, corners, slews, loads)) {
    d.samples.push_back(label(find_cell(cells, c.cell_type), c, cfg, n));
  }
  return d;
}

const CellModel& find_cell(std::span<const CellModel> cells, const std::string& cell_type) {
  for (const auto& cell : cells) {
    if (cell.cell_type == cell_type) return cell;
  }
  fail(ErrorKind::UnknownCategory, "no cell model named " + cell_type);
}

std::vector<CellModel> cells_from_config(const KeyedConfig& cfg) {
  std::vector<CellModel> cells;
  for (const auto& name : cfg.subsections("cell")) {
    const std::string p = "cell." + name + ".";
    CellModel m;
    m.cell_type = name;
    m.base_drive = cfg.get_double(p + "base_drive", m.base_drive);
    m.vth_frac = cfg.get_double(p + "vth_frac", m.vth_frac);
    m.alpha = cfg.get_double(p + "alpha", m.alpha);
    m.intrinsic_cap = cfg.get_double(p + "intrinsic_cap", m.intrinsic_cap);
    m.temp_coeff = cfg.get_double(p + "temp_coeff", m.temp_coeff);
    m.rise_ratio = cfg.get_double(p + "rise_ratio", m.rise_ratio);
    m.arc_count = static_cast<int>(cfg.get_int(p + "arc_count", m.arc_count));
    if (cfg.has(p + "process_shift")) {
      m.process_shift.clear();
      for (const auto& item : cfg.get_string_list(p + "process_shift")) {
        auto parts = textio::split(item, ':');
        auto v = parts.size() == 2 ? textio::parse_double(parts[1]) : std::nullopt;
        if (!v) fail(ErrorKind::Config, p + "process_shift item '" + item + "' is not LABEL:value");
        m.process_shift[std::string(textio::trim(parts[0]))] = *v;
      }
    }
    m.strengths.clear();
    for (long long s : cfg.get_int_list(p + "strengths")) m.strengths.push_back(static_cast<int>(s));
    try {
      m.validate();
    } catch (const Error& e) {
      fail(ErrorKind::Config, e.what());
    }
    if (m.strengths.empty()) fail(ErrorKind::Config, p + "strengths is empty");
    cells.push_back(std::move(m));
  }
  return cells;
}

}  // namespace ccsforge::refsim
