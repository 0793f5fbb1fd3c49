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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "oracles.hpp"
#include "refsim.hpp"

using namespace ccsforge;
using testing::kind_of;
using waveform::Condition;

namespace {

refsim::CellModel inv() {
  refsim::CellModel m;
  m.cell_type = "INV";
  m.strengths = {1, 2, 4};
  return m;
}

std::vector<refsim::Corner> nine_corners() {
  std::vector<refsim::Corner> out;
  for (const char* p : {"SS", "TT", "FF"}) {
    out.push_back({p, 0.72, 125});
    out.push_back({p, 0.8, 25});
    out.push_back({p, 0.88, -40});
  }
  return out;
}

const std::vector<double> kSlews{15e-12, 20e-12, 28e-12, 38e-12, 51e-12, 70e-12, 95e-12};
const std::vector<double> kLoads{3e-15, 4e-15, 5.5e-15, 7.5e-15, 10e-15, 14e-15, 19e-15};

double trapz(const waveform::CurrentWaveform& w) {
  double s = 0.0;
  for (std::size_t k = 1; k < w.size(); ++k) {
    s += 0.5 * (w.currents()[k] + w.currents()[k - 1]) * (w.times()[k] - w.times()[k - 1]);
  }
  return s;
}

}  // namespace

TEST_CASE("simulate_arc is bit-reproducible") {
  const auto cell = inv();
  Condition c{"INV", 2, "SS", 0.72, 125, 1, 33e-12, 7e-15};
  CHECK(refsim::simulate_arc(cell, c, {}) == refsim::simulate_arc(cell, c, {}));
}

TEST_CASE("charge delivered equals voltage swing times total load") {
  const auto cell = inv();
  for (int arc : {0, 1}) {
    for (double load : kLoads) {
      Condition c{"INV", 4, "TT", 0.8, 25, arc, 40e-12, load};
      const auto w = refsim::simulate_arc(cell, c, {});
      const double q = trapz(w);
      const double swing = c.voltage - refsim::SimConfig{}.convergence_tol;
      CHECK(oracle::rel_diff(q, swing * refsim::total_load(cell, c)) < 0.01);
    }
  }
}

TEST_CASE("doubling strength into a large load doubles current and halves settle time") {
  auto cell = inv();
  for (int arc : {0, 1}) {
    Condition a{"INV", 1, "TT", 0.8, 25, arc, 1e-12, 400e-15};
    Condition b = a;
    b.drive_strength = 2;
    const auto wa = refsim::simulate_arc(cell, a, {});
    const auto wb = refsim::simulate_arc(cell, b, {});
    const double pa = *std::max_element(wa.currents().begin(), wa.currents().end());
    const double pb = *std::max_element(wb.currents().begin(), wb.currents().end());
    CHECK(oracle::rel_diff(pb, 2 * pa) < 0.05);
    CHECK(oracle::rel_diff(wb.times().back(), 0.5 * wa.times().back()) < 0.05);
  }
}

TEST_CASE("halving the time step moves resampled currents by under 1% of peak") {
  const auto cell = inv();
  refsim::SimConfig fine;
  fine.time_step = 0.5 * refsim::SimConfig{}.time_step;
  for (const auto& c : refsim::grid_conditions(std::span(&cell, 1), std::vector<refsim::Corner>{{"SS", 0.72, 125}, {"FF", 0.88, -40}},
                                               std::vector<double>{15e-12, 95e-12}, std::vector<double>{3e-15, 19e-15})) {
    const auto coarse = refsim::label(cell, c, {}, 32).waveform;
    const auto half = refsim::label(cell, c, fine, 32).waveform;
    const double peak = *std::max_element(coarse.currents().begin(), coarse.currents().end());
    for (std::size_t k = 0; k < coarse.size(); ++k) {
      const double other = oracle::pwl(half.times(), half.currents(), coarse.times()[k]);
      CHECK(std::abs(other - coarse.currents()[k]) < 0.01 * peak);
    }
  }
}

TEST_CASE("grid sizes") {
  auto one = inv();
  one.strengths = {1};
  one.arc_count = 1;
  auto corners = nine_corners();
  CHECK(refsim::grid_conditions(std::span(&one, 1), corners, kSlews, kLoads).size() == 441);
  auto eleven = inv();
  eleven.strengths = {1, 2, 3, 4, 6, 8, 10, 12, 16, 20, 24};
  CHECK(refsim::grid_conditions(std::span(&eleven, 1), corners, kSlews, kLoads).size() == 9702);
  CHECK(kind_of([&] { refsim::generate_grid(std::span(&one, 1), corners, {}, kLoads, {}, 8); }) ==
        ErrorKind::InvalidArgument);
}

TEST_CASE("generated samples: sign, settling, round trip") {
  auto cell = inv();
  cell.strengths = {1, 8};
  const std::vector<double> slews{15e-12, 95e-12}, loads{3e-15, 19e-15};
  auto d = refsim::generate_grid(std::span(&cell, 1), nine_corners(), slews, loads, {}, 16);
  REQUIRE(d.samples.size() == 2 * 9 * 2 * 2 * 2);
  CHECK(waveform::parse_dataset(waveform::format_dataset(d)) == d);
  for (const auto& s : d.samples) {
    const auto raw = refsim::simulate_arc(cell, s.condition, {});
    for (double i : raw.currents()) CHECK(i >= 0.0);
    const auto dir = waveform::arc_direction(s.condition.arc_id);
    const double load = refsim::total_load(cell, s.condition);
    // Integrate the raw current with the simulator's own left-endpoint rule.
    double v = dir == waveform::Direction::Rising ? 0.0 : s.condition.voltage;
    for (std::size_t k = 0; k + 1 < raw.size(); ++k) {
      const double dq = raw.currents()[k] * (raw.times()[k + 1] - raw.times()[k]) / load;
      v += dir == waveform::Direction::Rising ? dq : -dq;
    }
    const double rail = dir == waveform::Direction::Rising ? s.condition.voltage : 0.0;
    CHECK(std::abs(v - rail) <= refsim::SimConfig{}.convergence_tol * 1.001);
  }
}

TEST_CASE("waveforms vary continuously with load and slew") {
  const auto cell = inv();
  auto rel_l2 = [](const std::vector<double>& a, const std::vector<double>& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      num += (a[k] - b[k]) * (a[k] - b[k]);
      den += a[k] * a[k];
    }
    return std::sqrt(num / den);
  };
  for (int arc : {0, 1}) {
    for (double load : kLoads) {
      Condition a{"INV", 2, "TT", 0.8, 25, arc, 30e-12, load};
      Condition b = a;
      b.output_load *= 1.0099;
      Condition s = a;
      s.input_slew *= 1.0099;
      const auto wa = refsim::label(cell, a, {}, 32).waveform;
      CHECK(rel_l2(wa.currents(), refsim::label(cell, b, {}, 32).waveform.currents()) < 0.05);
      CHECK(rel_l2(wa.currents(), refsim::label(cell, s, {}, 32).waveform.currents()) < 0.05);
    }
  }
}

TEST_CASE("input validation") {
  auto cell = inv();
  Condition c{"INV", 1, "TT", 0.8, 25, 0, 20e-12, 5e-15};
  Condition bad = c;
  bad.arc_id = 2;
  CHECK(kind_of([&] { refsim::simulate_arc(cell, bad, {}); }) == ErrorKind::InvalidArgument);
  bad = c;
  bad.process = "XX";
  CHECK(kind_of([&] { refsim::simulate_arc(cell, bad, {}); }) == ErrorKind::UnknownCategory);
  refsim::SimConfig short_run;
  short_run.max_sim_time = 1e-12;
  CHECK(kind_of([&] { refsim::simulate_arc(cell, c, short_run); }) == ErrorKind::NonConvergence);
  auto broken = cell;
  broken.alpha = 2.5;
  CHECK(kind_of([&] { refsim::simulate_arc(broken, c, {}); }) == ErrorKind::InvalidArgument);
  broken = cell;
  broken.intrinsic_cap = 0.0;
  bad = c;
  bad.output_load = 0.0;
  CHECK(kind_of([&] { refsim::simulate_arc(broken, bad, {}); }).has_value());
}

TEST_CASE("cells_from_config") {
  auto kc = KeyedConfig::parse(
      "cell.INV.strengths = 1, 2\ncell.ND2.strengths = 4\ncell.ND2.arc_count = 4\n"
      "cell.ND2.process_shift = SS:0.9, TT:1\n");
  auto cells = refsim::cells_from_config(kc);
  REQUIRE(cells.size() == 2);
  CHECK(cells[0].cell_type == "INV");
  CHECK(cells[1].arc_count == 4);
  CHECK(cells[1].process_shift.size() == 2);
  CHECK(kind_of([] { refsim::cells_from_config(KeyedConfig::parse("cell.X.strengths = 1\ncell.X.alpha = 3\n")); }) ==
        ErrorKind::Config);
  CHECK(kind_of([] { refsim::cells_from_config(KeyedConfig::parse("cell.X.process_shift = SS\n")); }) ==
        ErrorKind::Config);
}
