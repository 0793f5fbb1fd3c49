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

// Randomized fixtures shared by the unit tests and the acceptance harness.

#include <cmath>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "waveform.hpp"

namespace fixtures {

using ccsforge::waveform::Condition;
using ccsforge::waveform::CurrentWaveform;

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Values with awkward decimal expansions so text round trips are exercised.
inline double awkward(std::mt19937_64& rng, double scale) {
  return scale * std::ldexp(uniform(rng, 0.5, 1.0), static_cast<int>(rng() % 7) - 3);
}

inline Condition random_condition(std::mt19937_64& rng) {
  static const char* cells[] = {"INV", "ND2", "NR2"};
  static const char* procs[] = {"SS", "TT", "FF"};
  Condition c;
  c.cell_type = cells[rng() % 3];
  c.drive_strength = 1 << (rng() % 5);
  c.process = procs[rng() % 3];
  c.voltage = awkward(rng, 0.8);
  c.temperature = uniform(rng, -40.0, 125.0);
  c.arc_id = static_cast<int>(rng() % 4);
  c.input_slew = awkward(rng, 40e-12);
  c.output_load = awkward(rng, 6e-15);
  return c;
}

inline CurrentWaveform random_waveform(std::mt19937_64& rng, int n) {
  std::vector<double> t(static_cast<std::size_t>(n)), i(static_cast<std::size_t>(n));
  double x = uniform(rng, -1e-11, 1e-11);
  for (int k = 0; k < n; ++k) {
    x += awkward(rng, 5e-12);
    t[k] = x;
    i[k] = uniform(rng, -1e-5, 4e-4);
  }
  return CurrentWaveform(std::move(t), std::move(i));
}

// Dataset with distinct conditions.
inline ccsforge::waveform::Dataset random_dataset(std::mt19937_64& rng, int n, std::size_t rows) {
  ccsforge::waveform::Dataset d;
  d.n = n;
  std::set<Condition> seen;
  while (d.samples.size() < rows) {
    auto c = random_condition(rng);
    if (!seen.insert(c).second) continue;
    d.samples.push_back({c, random_waveform(rng, n)});
  }
  return d;
}

}  // namespace fixtures
