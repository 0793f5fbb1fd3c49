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
#include <random>

#include "fixtures.hpp"
#include "helpers.hpp"
#include "library_io.hpp"
#include "refsim.hpp"
#include "textio.hpp"

using namespace ccsforge;
using library::CcsTable;
using testing::kind_of;

namespace fs = std::filesystem;

namespace {

std::vector<CcsTable> random_tables(std::mt19937_64& rng, std::size_t count, int n) {
  auto d = fixtures::random_dataset(rng, n, count);
  std::vector<CcsTable> out;
  for (const auto& s : d.samples) {
    out.push_back(CcsTable{s.condition, refsim::reference_time(s.condition), s.waveform.times(),
                           s.waveform.currents()});
  }
  return out;
}

std::vector<CcsTable> grid_tables(std::vector<int> strengths, int n = 32) {
  refsim::CellModel cell;
  cell.cell_type = "INV";
  cell.strengths = std::move(strengths);
  std::vector<refsim::Corner> corners{{"TT", 0.8, 25}};
  std::vector<double> slews{15e-12, 40e-12}, loads{3e-15, 19e-15};
  auto d = refsim::generate_grid(std::span(&cell, 1), corners, slews, loads, {}, n);
  std::vector<CcsTable> out;
  for (const auto& s : d.samples) {
    out.push_back({s.condition, refsim::reference_time(s.condition), s.waveform.times(), s.waveform.currents()});
  }
  return out;
}

const char* kHandWritten = R"(# minimal library
ccs_library v1 {
  n = 3;
}
cell (INV) {
  arc {
    drive_strength = 2; process = FF; voltage = 0.88; temperature = -40;
    arc_id = 1; slew = 2.5e-11; load = 4e-15; reference_time = 1.25e-11;
    index_1 (0, 1e-11, 3.5e-11);
    values (0, 0.00012, 3e-06);
  }
}
)";

}  // namespace

TEST_CASE("hand-written library") {
  auto t = library::parse_ccs_library(kHandWritten);
  REQUIRE(t.size() == 1);
  const auto& c = t[0].condition;
  CHECK(c.cell_type == "INV");
  CHECK(c.drive_strength == 2);
  CHECK(c.process == "FF");
  CHECK(c.voltage == 0.88);
  CHECK(c.temperature == -40.0);
  CHECK(c.arc_id == 1);
  CHECK(c.input_slew == 2.5e-11);
  CHECK(c.output_load == 4e-15);
  CHECK(t[0].reference_time == 1.25e-11);
  CHECK(t[0].times == std::vector<double>{0.0, 1e-11, 3.5e-11});
  CHECK(t[0].currents == std::vector<double>{0.0, 0.00012, 3e-06});
}

TEST_CASE("round trip (100 randomized fixtures)") {
  std::mt19937_64 rng(31);
  auto dir = testing::scratch_dir("lib_rt");
  for (int k = 0; k < 100; ++k) {
    const int n = 2 + static_cast<int>(rng() % 33);
    auto tables = random_tables(rng, 1 + rng() % 12, n);
    library::export_ccs_library(tables, dir / "a.lib");
    auto back = library::import_ccs_library(dir / "a.lib");
    CHECK(back == library::library_order(tables));
    CHECK(library::format_ccs_library(back) == textio::read_file(dir / "a.lib"));
  }
}

TEST_CASE("49 arc groups for one 7x7 grid") {
  refsim::CellModel cell;
  cell.cell_type = "INV";
  cell.arc_count = 1;
  std::vector<refsim::Corner> corners{{"TT", 0.8, 25}};
  std::vector<double> slews{15e-12, 20e-12, 28e-12, 38e-12, 51e-12, 70e-12, 95e-12};
  std::vector<double> loads{3e-15, 4e-15, 5.5e-15, 7.5e-15, 10e-15, 14e-15, 19e-15};
  auto d = refsim::generate_grid(std::span(&cell, 1), corners, slews, loads, {}, 8);
  std::vector<CcsTable> tables;
  for (const auto& s : d.samples) {
    tables.push_back({s.condition, refsim::reference_time(s.condition), s.waveform.times(), s.waveform.currents()});
  }
  auto text = library::format_ccs_library(tables);
  std::size_t arcs = 0;
  for (std::size_t pos = 0; (pos = text.find("arc {", pos)) != std::string::npos; ++pos) ++arcs;
  CHECK(arcs == 49);
}

TEST_CASE("library size is affine in the table count") {
  // Same waveform under different loads: per-table text differs only in
  // the load and reference time fields.
  CcsTable base{{"INV", 1, "TT", 0.8, 25, 0, 20e-12, 0}, 10e-12, {0.0, 1.5e-11, 4e-11}, {1e-5, 2e-4, 3e-6}};
  auto size_of = [&](int k) {
    std::vector<CcsTable> t;
    for (int i = 0; i < k; ++i) {
      auto c = base;
      c.condition.output_load = 1e-15 * (1.0 + 0.25 * i);
      t.push_back(c);
    }
    return static_cast<double>(library::format_ccs_library(t).size());
  };
  // Zero tables: one-table text minus its arc group.
  std::vector<CcsTable> one{base};
  one[0].condition.output_load = 1e-15;
  const auto text1 = library::format_ccs_library(one);
  const auto arc_begin = text1.find("  arc {");
  const auto arc_end = text1.rfind("  }\n") + 4;
  const double empty = static_cast<double>(text1.size() - (arc_end - arc_begin));
  const double s1 = size_of(1), s10 = size_of(10), s100 = size_of(100);
  // Least-squares line through the three points.
  const double xs[] = {1, 10, 100}, ys[] = {s1, s10, s100};
  double mx = 37, my = (s1 + s10 + s100) / 3, sxx = 0, sxy = 0;
  for (int i = 0; i < 3; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  const double slope = sxy / sxx, icpt = my - slope * mx;
  for (int i = 0; i < 3; ++i) CHECK(std::abs(ys[i] - (icpt + slope * xs[i])) < 0.02 * slope);
  CHECK(std::abs(icpt - empty) < 0.1 * slope);
}

TEST_CASE("parse errors") {
  const std::string text = kHandWritten;
  SUBCASE("truncated") {
    auto cut = text.substr(0, text.find("values"));
    auto msg = testing::message_of([&] { library::parse_ccs_library(cut); });
    CHECK(kind_of([&] { library::parse_ccs_library(cut); }) == ErrorKind::Parse);
    CHECK(msg.find("line 10") != std::string::npos);
  }
  SUBCASE("unknown key") {
    auto bad = text;
    bad.replace(bad.find("process"), 7, "procezz");
    auto msg = testing::message_of([&] { library::parse_ccs_library(bad); });
    CHECK(kind_of([&] { library::parse_ccs_library(bad); }) == ErrorKind::Parse);
    INFO(msg);
    CHECK(msg.find("line 7, column 25") != std::string::npos);
    CHECK(msg.find("procezz") != std::string::npos);
  }
  SUBCASE("duplicate arc") {
    auto arc_begin = text.find("  arc {");
    auto arc_end = text.find("  }\n", text.find("values")) + 4;
    auto dup = text;
    dup.insert(arc_end, text.substr(arc_begin, arc_end - arc_begin));
    CHECK(kind_of([&] { library::parse_ccs_library(dup); }) == ErrorKind::Duplicate);
  }
  SUBCASE("non-increasing index") {
    auto bad = text;
    bad.replace(bad.find("3.5e-11"), 7, "0.5e-11");
    CHECK(kind_of([&] { library::parse_ccs_library(bad); }) == ErrorKind::Schema);
  }
  SUBCASE("wrong length") {
    auto bad = text;
    bad.replace(bad.find("n = 3"), 5, "n = 4");
    CHECK(kind_of([&] { library::parse_ccs_library(bad); }) == ErrorKind::Schema);
  }
}

TEST_CASE("export validation") {
  auto dir = testing::scratch_dir("lib_export");
  std::vector<CcsTable> t = library::parse_ccs_library(kHandWritten);
  auto bad = t;
  bad[0].times = {0.0, 2e-11, 1e-11};
  CHECK(kind_of([&] { library::export_ccs_library(bad, dir / "x.lib"); }) == ErrorKind::Schema);
  CHECK_FALSE(fs::exists(dir / "x.lib"));
  auto dup = t;
  dup.push_back(t[0]);
  CHECK(kind_of([&] { library::export_ccs_library(dup, dir / "x.lib"); }) == ErrorKind::Duplicate);
  CHECK(kind_of([&] { library::export_ccs_library(t, dir / "missing" / "x.lib"); }) == ErrorKind::Io);
}

TEST_CASE("storage report") {
  auto dir = testing::scratch_dir("lib_storage");
  textio::write_file_atomic(dir / "m.ccsgpr", std::string(1000, 'x'));
  const std::vector<std::pair<std::string, fs::path>> models{{"INV", dir / "m.ccsgpr"}};

  auto small = grid_tables({1, 2});
  auto big = grid_tables({1, 2, 4, 8});
  library::export_ccs_library(small, dir / "small.lib");
  library::export_ccs_library(big, dir / "big.lib");
  auto a = library::storage_report(dir / "small.lib", models);
  auto b = library::storage_report(dir / "big.lib", models);
  CHECK(a.lut_bytes == fs::file_size(dir / "small.lib"));
  CHECK(a.model_bytes == 1000);
  CHECK(a.ratio == doctest::Approx(static_cast<double>(a.lut_bytes) / 1000.0));
  CHECK(b.ratio > a.ratio);
  std::size_t lut = 0, model = 0;
  for (const auto& r : b.rows) {
    lut += r.lut_bytes;
    model += r.model_bytes;
  }
  CHECK(lut == b.lut_bytes);
  CHECK(model == b.model_bytes);
  CHECK(b.rows.back().name == "(other)");
  CHECK(library::format_storage(b).find("LUT baseline") != std::string::npos);
  CHECK(library::format_storage(library::storage_report(dir / "big.lib", models)) == library::format_storage(b));
  CHECK(kind_of([&] { library::storage_report(dir / "none.lib", models); }) == ErrorKind::Io);
}

namespace {

// Hand-built falling-output samples: constant discharge current whose 50%
// crossing lands `delay` after the input's.
waveform::Sample ramp_sample(double delay, double load, int n) {
  waveform::Condition c{"INV", 1, "TT", 0.8, 25, 0, 20e-12, load};
  const double cross = 10e-12 + delay;
  const double i = 0.8 * load / (2.0 * cross);
  std::vector<double> t, cur;
  for (int k = 0; k < n; ++k) {
    t.push_back(2.0 * cross * k / (n - 1));
    cur.push_back(i);
  }
  return {c, waveform::CurrentWaveform(t, cur)};
}

al::ElectricalFn plain_electrical() {
  return [](const waveform::Condition& c) {
    return al::Electrical{c.output_load, waveform::arc_direction(c.arc_id), c.voltage};
  };
}

}  // namespace

TEST_CASE("accuracy report") {
  waveform::EncodingSchema schema{{"INV"}, {{"SS", -1}, {"TT", 0}, {"FF", 1}}, 2};
  gpr::GpOptions opts;
  opts.restarts = 1;
  opts.max_evals = 60;

  SUBCASE("MAPE floor") {
    waveform::Dataset d;
    d.n = 6;
    const double delays[] = {0.5e-12, 2e-12, 3e-12, 4e-12, 5e-12, 6e-12};
    for (int k = 0; k < 6; ++k) d.samples.push_back(ramp_sample(delays[k], 2e-15 * (k + 1), 6));
    auto e = gpr::fit_ensemble(waveform::encode_all(d.conditions(), schema), d.targets(), schema, opts);
    auto r = library::accuracy_report(e, d, plain_electrical(), true);
    REQUIRE(r.rows.size() == 2);
    CHECK(r.rows[0].samples == 6);
    CHECK(r.rows[0].delay_samples == 6);
    CHECK(r.rows[0].mape_samples == 5);
    CHECK(r.rows[0].delay_mae < 0.1e-12);
    CHECK(kind_of([&] { library::accuracy_report(e, d, plain_electrical()); }) == ErrorKind::Leakage);
  }
  SUBCASE("support reproduction, permutation invariance") {
    refsim::CellModel cell;
    cell.cell_type = "INV";
    cell.strengths = {1, 4};
    std::vector<refsim::Corner> corners{{"TT", 0.8, 25}, {"SS", 0.72, 125}};
    std::vector<double> slews{15e-12, 40e-12, 95e-12}, loads{3e-15, 8e-15, 19e-15};
    auto d = refsim::generate_grid(std::span(&cell, 1), corners, slews, loads, {}, 32);
    auto searched = gpr::fit_ensemble(waveform::encode_all(d.conditions(), schema), d.targets(), schema, opts);
    // Refit with the searched kernels but near-zero noise.
    for (auto& m : searched.models) m.kernel.noise_variance = 1e-8;
    auto e = gpr::fit_ensemble(waveform::encode_all(d.conditions(), schema), d.targets(), schema, opts, &searched,
                               true);
    al::ElectricalFn el = [&](const waveform::Condition& c) {
      return al::Electrical{refsim::total_load(cell, c), waveform::arc_direction(c.arc_id), c.voltage};
    };
    auto r = library::accuracy_report(e, d, el, true);
    CHECK(r.rows.back().cell_type == "all");
    CHECK(r.rows.back().failures == 0);
    CHECK(r.rows.back().delay_mae < 0.1e-12);
    auto shuffled = d;
    std::mt19937_64 rng(2);
    std::shuffle(shuffled.samples.begin(), shuffled.samples.end(), rng);
    auto r2 = library::accuracy_report(e, shuffled, el, true);
    CHECK(library::format_accuracy_csv(r2) == library::format_accuracy_csv(r));
    auto merged = library::merge_accuracy(std::vector<library::AccuracyReport>{r});
    CHECK(library::format_accuracy_csv(merged) == library::format_accuracy_csv(r));
    CHECK(library::format_accuracy_summary(r).find("MAPE") != std::string::npos);
  }
}
