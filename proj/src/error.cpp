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

#include "error.hpp"

namespace ccsforge {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedWaveform: return "malformed waveform";
    case ErrorKind::InvalidLoad: return "invalid load";
    case ErrorKind::GridMismatch: return "grid mismatch";
    case ErrorKind::NoOverlap: return "no overlap";
    case ErrorKind::AmbiguousCrossing: return "ambiguous crossing";
    case ErrorKind::UnknownCategory: return "unknown category";
    case ErrorKind::EmptyDataset: return "empty dataset";
    case ErrorKind::Dimension: return "dimension mismatch";
    case ErrorKind::NonPsd: return "non-PSD kernel matrix";
    case ErrorKind::InsufficientData: return "insufficient data";
    case ErrorKind::Format: return "format error";
    case ErrorKind::CorruptFile: return "corrupt file";
    case ErrorKind::NonConvergence: return "non-convergence";
    case ErrorKind::InvalidCircuit: return "invalid circuit";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Duplicate: return "duplicate";
    case ErrorKind::Schema: return "schema error";
    case ErrorKind::Io: return "I/O error";
    case ErrorKind::Leakage: return "leakage";
    case ErrorKind::EmptyPool: return "empty pool";
    case ErrorKind::Config: return "config error";
    case ErrorKind::OracleFailure: return "oracle failure";
    case ErrorKind::InvalidArgument: return "invalid argument";
  }
  return "error";
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::InvalidArgument:
      return 1;
    case ErrorKind::NonPsd:
    case ErrorKind::NonConvergence:
    case ErrorKind::InvalidCircuit:
      return 3;
    default:
      return 2;
  }
}

}  // namespace ccsforge
