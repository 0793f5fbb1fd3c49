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

#include "dataset.hpp"

#include "error.hpp"
#include "textio.hpp"

namespace ccsforge::waveform {

namespace {

constexpr const char* kConditionColumns[] = {"cell_type", "drive_strength", "process",
                                             "voltage",   "temperature",    "arc_id",
                                             "input_slew", "output_load"};
constexpr int kConditionCount = 8;

[[noreturn]] void row_error(std::size_t line, const std::string& what) {
  fail(ErrorKind::Parse, "dataset line " + std::to_string(line) + ": " + what);
}

}  // namespace

std::vector<Condition> Dataset::conditions() const {
  std::vector<Condition> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.condition);
  return out;
}

Eigen::MatrixXd Dataset::targets() const {
  Eigen::MatrixXd y(static_cast<Eigen::Index>(samples.size()), 2 * n);
  for (std::size_t r = 0; r < samples.size(); ++r) {
    const auto& w = samples[r].waveform;
    if (static_cast<int>(w.size()) != n) {
      fail(ErrorKind::Schema, "sample " + std::to_string(r) + " is not resampled to n points");
    }
    for (int j = 0; j < n; ++j) {
      y(static_cast<Eigen::Index>(r), j) = w.times()[j];
      y(static_cast<Eigen::Index>(r), n + j) = w.currents()[j];
    }
  }
  return y;
}

std::string dataset_header(int n) {
  std::string h;
  for (int c = 0; c < kConditionCount; ++c) {
    if (c) h += ',';
    h += kConditionColumns[c];
  }
  for (int j = 0; j < n; ++j) h += ",t" + std::to_string(j);
  for (int j = 0; j < n; ++j) h += ",i" + std::to_string(j);
  return h;
}

std::string format_dataset(const Dataset& d) {
  using textio::format_double;
  std::string out = dataset_header(d.n);
  out += '\n';
  for (const auto& s : d.samples) {
    const auto& c = s.condition;
    if (static_cast<int>(s.waveform.size()) != d.n) {
      fail(ErrorKind::Schema, "sample length differs from dataset n");
    }
    out += c.cell_type + ',' + std::to_string(c.drive_strength) + ',' + c.process + ',' +
           format_double(c.voltage) + ',' + format_double(c.temperature) + ',' +
           std::to_string(c.arc_id) + ',' + format_double(c.input_slew) + ',' +
           format_double(c.output_load);
    for (double t : s.waveform.times()) out += ',' + format_double(t);
    for (double i : s.waveform.currents()) out += ',' + format_double(i);
    out += '\n';
  }
  return out;
}

Dataset parse_dataset(const std::string& text) {
  auto lines = textio::split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) fail(ErrorKind::Parse, "dataset is empty (missing header)");

  auto header = textio::split(lines[0], ',');
  if (header.size() < static_cast<std::size_t>(kConditionCount) + 4 ||
      (header.size() - kConditionCount) % 2 != 0) {
    row_error(1, "unexpected column count in header");
  }
  Dataset d;
  d.n = static_cast<int>((header.size() - kConditionCount) / 2);
  if (textio::trim(lines[0]) != dataset_header(d.n)) row_error(1, "unexpected header");

  for (std::size_t li = 1; li < lines.size(); ++li) {
    auto f = textio::split(lines[li], ',');
    if (f.size() != header.size()) row_error(li + 1, "wrong field count");
    auto num = [&](std::size_t k) {
      auto v = textio::parse_double(f[k]);
      if (!v) row_error(li + 1, "bad number in column " + std::string(header[k]));
      return *v;
    };
    auto integer = [&](std::size_t k) {
      auto v = textio::parse_int(f[k]);
      if (!v) row_error(li + 1, "bad integer in column " + std::string(header[k]));
      return static_cast<int>(*v);
    };
    Condition c;
    c.cell_type = std::string(textio::trim(f[0]));
    c.drive_strength = integer(1);
    c.process = std::string(textio::trim(f[2]));
    c.voltage = num(3);
    c.temperature = num(4);
    c.arc_id = integer(5);
    c.input_slew = num(6);
    c.output_load = num(7);
    std::vector<double> ts(static_cast<std::size_t>(d.n));
    std::vector<double> is(static_cast<std::size_t>(d.n));
    for (int j = 0; j < d.n; ++j) {
      ts[j] = num(kConditionCount + j);
      is[j] = num(kConditionCount + d.n + j);
    }
    try {
      d.samples.push_back(Sample{std::move(c), CurrentWaveform(std::move(ts), std::move(is))});
    } catch (const Error& e) {
      row_error(li + 1, e.what());
    }
  }
  return d;
}

void write_dataset(const std::filesystem::path& path, const Dataset& d) {
  textio::write_file_atomic(path, format_dataset(d));
}

Dataset read_dataset(const std::filesystem::path& path) {
  return parse_dataset(textio::read_file(path));
}

CurrentWaveform waveform_from_targets(std::span<const double> row, int n) {
  if (row.size() != static_cast<std::size_t>(2 * n)) {
    fail(ErrorKind::Dimension, "target row must hold 2n values");
  }
  return CurrentWaveform(std::vector<double>(row.begin(), row.begin() + n),
                         std::vector<double>(row.begin() + n, row.end()));
}

}  // namespace ccsforge::waveform
