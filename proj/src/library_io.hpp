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
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "active_learning.hpp"
#include "dataset.hpp"
#include "gpr.hpp"
#include "waveform.hpp"

// CCS driver tables in a small Liberty-like text format, plus the storage
// and accuracy reports built on top of them.
//
//   ccs_library v1 {
//     n = 3;
//   }
//   cell (INV) {
//     arc {
//       drive_strength = 1; process = TT; voltage = 0.8; temperature = 25;
//       arc_id = 0; slew = 1e-11; load = 2e-15; reference_time = 5e-12;
//       index_1 (0, 1e-11, 2e-11);
//       values (0, 1e-05, 2e-06);
//     }
//   }
//
// Whitespace is free-form; `#` starts a comment running to end of line.
namespace ccsforge::library {

struct CcsTable {
  waveform::Condition condition;
  double reference_time = 0.0;
  std::vector<double> times;     // s
  std::vector<double> currents;  // A

  bool operator==(const CcsTable&) const = default;
};

/// Byte span of each cell block in a library text; bytes outside any block
/// (header, separators) are reported under `other_bytes`.
struct LibraryLayout {
  std::vector<std::pair<std::string, std::size_t>> cell_bytes;  // file order, merged by name
  std::size_t other_bytes = 0;
};

/// Tables grouped by cell type in order of first appearance, stable within a
/// cell. Throws Schema on inconsistent n or non-increasing time indices.
std::string format_ccs_library(std::span<const CcsTable> tables);
std::vector<CcsTable> parse_ccs_library(const std::string& text, LibraryLayout* layout = nullptr);

void export_ccs_library(std::span<const CcsTable> tables, const std::filesystem::path& path);
std::vector<CcsTable> import_ccs_library(const std::filesystem::path& path);

/// Tables in the order format_ccs_library writes them.
std::vector<CcsTable> library_order(std::span<const CcsTable> tables);

struct StorageRow {
  std::string name;
  std::size_t lut_bytes = 0;
  std::size_t model_bytes = 0;
};

struct StorageReport {
  std::size_t lut_bytes = 0;
  std::size_t model_bytes = 0;
  double ratio = 0.0;
  std::vector<StorageRow> rows;  // cells, then "(other)"; sums equal the totals
};

/// `models` pairs a cell type with its model file.
StorageReport storage_report(const std::filesystem::path& lut_path,
                             std::span<const std::pair<std::string, std::filesystem::path>> models);

std::string format_storage(const StorageReport& r);

inline constexpr double kMapeFloor = 1e-12;  // s

struct AccuracyRow {
  std::string cell_type;  // "all" for the aggregate
  std::size_t samples = 0;
  std::size_t delay_samples = 0;  // both delays extracted
  std::size_t mape_samples = 0;   // reference delay >= kMapeFloor
  std::size_t failures = 0;       // no single 50% crossing in the prediction
  double delay_mae = 0.0;         // s
  double delay_mape = 0.0;        // fraction
  double voltage_rmse = 0.0;      // V, mean over samples
};

struct AccuracyReport {
  std::vector<AccuracyRow> rows;  // per cell type in first-appearance order, then "all"
};

/// Throws Leakage when a holdout condition is also a training row of `e`,
/// unless `allow_overlap`.
AccuracyReport accuracy_report(const gpr::GprEnsemble& e, const waveform::Dataset& holdout,
                               const al::ElectricalFn& electrical, bool allow_overlap = false);

/// Merges per-cell reports into one (rows concatenated, "all" recomputed).
AccuracyReport merge_accuracy(std::span<const AccuracyReport> parts);

std::string format_accuracy_csv(const AccuracyReport& r);
std::string format_accuracy_summary(const AccuracyReport& r);

}  // namespace ccsforge::library
