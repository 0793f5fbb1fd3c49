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

#include <filesystem>
#include <string>
#include <vector>

#include "waveform.hpp"

// Comma-separated dataset: header row, then one row per sample holding the
// condition fields followed by n resampled times (s) and n currents (A).
namespace ccsforge::waveform {

struct Sample {
  Condition condition;
  CurrentWaveform waveform;
  bool operator==(const Sample&) const = default;
};

struct Dataset {
  int n = 0;
  std::vector<Sample> samples;

  std::vector<Condition> conditions() const;
  /// (rows x 2n) matrix, times first then currents.
  Eigen::MatrixXd targets() const;
  bool operator==(const Dataset&) const = default;
};

std::string dataset_header(int n);
std::string format_dataset(const Dataset& d);
Dataset parse_dataset(const std::string& text);

void write_dataset(const std::filesystem::path& path, const Dataset& d);
Dataset read_dataset(const std::filesystem::path& path);

/// Builds a waveform from one 2n-wide target row.
CurrentWaveform waveform_from_targets(std::span<const double> row, int n);

}  // namespace ccsforge::waveform
