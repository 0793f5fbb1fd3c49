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

#include "active_learning.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "error.hpp"
#include "textio.hpp"

namespace ccsforge::al {

using waveform::Condition;
using waveform::CurrentWaveform;
using waveform::VoltageWaveform;

void AcquisitionConfig::validate() const {
  auto positive = [](std::optional<double> v) { return !v || (*v > 0.0 && std::isfinite(*v)); };
  if (!(delta_time_rel > 0.0) || !(delta_current_rel > 0.0) || !positive(delta_time) ||
      !positive(delta_current)) {
    fail(ErrorKind::InvalidArgument, "finite-difference steps must be > 0");
  }
  if (!(batch_fraction > 0.0 && batch_fraction <= 1.0)) {
    fail(ErrorKind::InvalidArgument, "batch_fraction must be in (0, 1]");
  }
  if (!(initial_fraction > 0.0 && initial_fraction < 1.0)) {
    fail(ErrorKind::InvalidArgument, "initial_fraction must be in (0, 1)");
  }
  if (max_iterations < 1) fail(ErrorKind::InvalidArgument, "max_iterations must be >= 1");
  if (!(score_threshold >= 0.0)) fail(ErrorKind::InvalidArgument, "score_threshold must be >= 0");
}

Steps resolve_steps(const gpr::PredictedWaveform& p, const AcquisitionConfig& cfg) {
  Steps s;
  if (cfg.delta_time) {
    s.time = *cfg.delta_time;
  } else {
    s.time = cfg.delta_time_rel * (p.time_means.back() - p.time_means.front());
  }
  if (cfg.delta_current) {
    s.current = *cfg.delta_current;
  } else {
    double peak = 0.0;
    for (double i : p.current_means) peak = std::max(peak, std::abs(i));
    s.current = cfg.delta_current_rel * (peak > 0.0 ? peak : 1e-12);
  }
  if (!(s.time > 0.0) || !(s.current > 0.0)) {
    fail(ErrorKind::InvalidArgument, "prediction gives a non-positive finite-difference step");
  }
  return s;
}

namespace {

void check_index(const gpr::PredictedWaveform& p, int j) {
  if (j < 0 || j >= p.n()) fail(ErrorKind::InvalidArgument, "coordinate index out of range");
}

VoltageWaveform mean_voltage(const gpr::PredictedWaveform& p, const Electrical& el) {
  return waveform::current_to_voltage(p.mean_waveform(), el.load, el.direction, el.vdd);
}

double time_quotient(const gpr::PredictedWaveform& p, const VoltageWaveform& base, int j, double delta,
                     const Electrical& el, bool* repaired) {
  std::vector<double> times = p.time_means;
  times[j] += delta;
  bool fixed = gpr::repair_times(times);
  if (repaired) *repaired = fixed;
  auto v = waveform::current_to_voltage(CurrentWaveform(std::move(times), p.current_means), el.load,
                                        el.direction, el.vdd);
  return waveform::align_rmse(v, base) / delta;
}

double current_quotient(const gpr::PredictedWaveform& p, const VoltageWaveform& base, int j,
                        double delta, const Electrical& el) {
  std::vector<double> currents = p.current_means;
  currents[j] += delta;
  auto v = waveform::current_to_voltage(CurrentWaveform(p.time_means, std::move(currents)), el.load,
                                        el.direction, el.vdd);
  return waveform::rmse(v, base) / delta;
}

}  // namespace

double grad_time(const gpr::PredictedWaveform& p, int j, double delta, const Electrical& el,
                 bool* repaired) {
  check_index(p, j);
  if (!(delta > 0.0)) fail(ErrorKind::InvalidArgument, "delta_time must be > 0");
  return time_quotient(p, mean_voltage(p, el), j, delta, el, repaired);
}

double grad_time(const gpr::PredictedWaveform& p, int j, const AcquisitionConfig& cfg,
                 const Electrical& el, bool* repaired) {
  return grad_time(p, j, resolve_steps(p, cfg).time, el, repaired);
}

double grad_current(const gpr::PredictedWaveform& p, int j, double delta, const Electrical& el) {
  check_index(p, j);
  if (!(delta > 0.0)) fail(ErrorKind::InvalidArgument, "delta_current must be > 0");
  return current_quotient(p, mean_voltage(p, el), j, delta, el);
}

double grad_current(const gpr::PredictedWaveform& p, int j, const AcquisitionConfig& cfg,
                    const Electrical& el) {
  return grad_current(p, j, resolve_steps(p, cfg).current, el);
}

AcquisitionReport acquisition_score(const gpr::PredictedWaveform& p, const AcquisitionConfig& cfg,
                                    const Electrical& el) {
  const Steps steps = resolve_steps(p, cfg);
  const VoltageWaveform base = mean_voltage(p, el);
  AcquisitionReport r;
  const int n = p.n();
  r.time_terms.resize(n);
  r.current_terms.resize(n);
  for (int j = 0; j < n; ++j) {
    bool repaired = false;
    double g = time_quotient(p, base, j, steps.time, el, &repaired);
    if (repaired) ++r.degenerate_perturbations;
    double v = std::max(0.0, p.time_vars[j]);
    r.time_terms[j] = Term{g * g, v, g * g * v};
  }
  for (int j = 0; j < n; ++j) {
    double g = current_quotient(p, base, j, steps.current, el);
    double v = std::max(0.0, p.current_vars[j]);
    r.current_terms[j] = Term{g * g, v, g * g * v};
  }
  for (const auto& t : r.time_terms) r.score += t.contribution;
  for (const auto& t : r.current_terms) r.score += t.contribution;
  return r;
}

AcquisitionReport acquisition_score(const gpr::GprEnsemble& e, const Condition& c,
                                    const AcquisitionConfig& cfg, const Electrical& el) {
  return acquisition_score(gpr::predict_waveform(e, c, !cfg.latent_only), cfg, el);
}

std::size_t batch_size(std::size_t pool_size, double fraction) {
  // The small offset keeps products such as 0.01 * 300 from rounding up.
  double k = std::ceil(fraction * static_cast<double>(pool_size) - 1e-9);
  return std::max<std::size_t>(1, static_cast<std::size_t>(k));
}

std::vector<std::size_t> select_batch(std::span<const Scored> scores, std::size_t pool_size,
                                      const AcquisitionConfig& cfg) {
  if (scores.empty()) fail(ErrorKind::EmptyPool, "no candidates to select from");
  for (const auto& s : scores) {
    if (std::isnan(s.score)) fail(ErrorKind::InvalidArgument, "NaN acquisition score");
  }
  std::vector<Scored> order(scores.begin(), scores.end());
  const std::size_t k = std::min(batch_size(pool_size, cfg.batch_fraction), order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [](const Scored& a, const Scored& b) {
                      if (a.score != b.score) return a.score > b.score;
                      return a.index < b.index;
                    });
  std::vector<std::size_t> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(order[i].index);
  return out;
}

const char* to_string(Decision d) {
  switch (d) {
    case Decision::Continue: return "continue";
    case Decision::MaxIterations: return "max_iterations";
    case Decision::PoolExhausted: return "pool_exhausted";
    case Decision::ScoreThreshold: return "score_threshold";
  }
  return "unknown";
}

Decision check_termination(const LoopState& state, std::span<const Scored> scores,
                           const AcquisitionConfig& cfg) {
  if (state.iteration >= cfg.max_iterations) return Decision::MaxIterations;
  if (state.candidates.empty() || scores.empty()) return Decision::PoolExhausted;
  double best = scores.front().score;
  for (const auto& s : scores) best = std::max(best, s.score);
  if (best < cfg.score_threshold) return Decision::ScoreThreshold;
  return Decision::Continue;
}

std::string format_history(std::span<const HistoryRow> history) {
  std::string out = "iteration,selected_count,max_score,mean_score,holdout_rmse\n";
  for (const auto& h : history) {
    out += std::to_string(h.iteration) + "," + std::to_string(h.selected_count) + "," +
           textio::format_double(h.max_score) + "," + textio::format_double(h.mean_score) + "," +
           (h.holdout_rmse ? textio::format_double(*h.holdout_rmse) : std::string()) + "\n";
  }
  return out;
}

double holdout_rmse(const gpr::GprEnsemble& e, const waveform::Dataset& d, const ElectricalFn& el) {
  if (d.samples.empty()) fail(ErrorKind::EmptyDataset, "holdout set is empty");
  auto conditions = d.conditions();
  auto preds = gpr::predict_waveforms(e, conditions);
  double total = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    Electrical x = el(conditions[i]);
    auto vp = waveform::current_to_voltage(preds[i].mean_waveform(), x.load, x.direction, x.vdd);
    auto vt = waveform::current_to_voltage(d.samples[i].waveform, x.load, x.direction, x.vdd);
    total += waveform::align_rmse(vp, vt);
  }
  return total / static_cast<double>(preds.size());
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

LoopResult run_loop(std::span<const Condition> pool, int n, const Oracle& oracle,
                    const ElectricalFn& electrical, const waveform::EncodingSchema& schema,
                    const AcquisitionConfig& cfg, const LoopOptions& opts) {
  cfg.validate();
  const std::size_t pool_size = pool.size();
  if (pool_size < 10) fail(ErrorKind::InsufficientData, "pool needs at least 10 conditions");
  if (n < 2) fail(ErrorKind::InvalidArgument, "n must be >= 2");

  LoopResult res;
  res.labeled.n = n;
  std::vector<std::optional<CurrentWaveform>> labels(pool_size);

  // Returns false once the oracle has failed; the loop then stops.
  auto label_all = [&](const std::vector<std::size_t>& idx) {
    auto t0 = Clock::now();
    for (auto i : idx) {
      try {
        CurrentWaveform w = oracle(pool[i]);
        if (static_cast<int>(w.size()) != n) {
          fail(ErrorKind::OracleFailure, "oracle returned " + std::to_string(w.size()) + " points");
        }
        labels[i] = std::move(w);
        res.labeling_order.push_back(i);
        ++res.oracle_calls;
      } catch (const Error& e) {
        res.aborted = true;
        res.abort_message = e.what();
        res.failed_condition = pool[i];
        res.timings.simulate += seconds_since(t0);
        return false;
      }
    }
    res.timings.simulate += seconds_since(t0);
    return true;
  };

  std::vector<std::size_t> order(pool_size);
  for (std::size_t i = 0; i < pool_size; ++i) order[i] = i;
  std::mt19937_64 rng(cfg.seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t initial = static_cast<std::size_t>(std::floor(cfg.initial_fraction * static_cast<double>(pool_size)));
  initial = std::clamp<std::size_t>(initial, 2, pool_size);
  std::vector<std::size_t> first(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(initial));

  LoopState& st = res.state;
  if (!label_all(first)) return res;
  std::vector<bool> chosen(pool_size, false);
  for (auto i : first) chosen[i] = true;

  const gpr::GprEnsemble* previous = nullptr;
  gpr::GprEnsemble current;
  gpr::GprEnsemble last_fit;
  for (;;) {
    st.selected.clear();
    st.candidates.clear();
    for (std::size_t i = 0; i < pool_size; ++i) (chosen[i] ? st.selected : st.candidates).push_back(i);

    std::vector<Condition> train_conditions;
    Eigen::MatrixXd targets(static_cast<Eigen::Index>(st.selected.size()), 2 * n);
    for (std::size_t r = 0; r < st.selected.size(); ++r) {
      const auto i = st.selected[r];
      train_conditions.push_back(pool[i]);
      const auto& w = *labels[i];
      for (int j = 0; j < n; ++j) {
        targets(static_cast<Eigen::Index>(r), j) = w.times()[j];
        targets(static_cast<Eigen::Index>(r), n + j) = w.currents()[j];
      }
    }

    auto t_fit = Clock::now();
    const bool reuse = st.iteration > 0 && (opts.freeze_hyperparams || opts.warm_start);
    current = gpr::fit_ensemble(waveform::encode_all(train_conditions, schema), targets, schema, opts.gp,
                                reuse ? previous : nullptr, opts.freeze_hyperparams);
    res.timings.fit += seconds_since(t_fit);

    HistoryRow row;
    row.iteration = st.iteration;
    row.selected_count = st.selected.size();
    if (opts.holdout) row.holdout_rmse = holdout_rmse(current, *opts.holdout, electrical);

    auto t_score = Clock::now();
    std::vector<Scored> scores;
    scores.reserve(st.candidates.size());
    constexpr std::size_t kChunk = 1024;
    for (std::size_t start = 0; start < st.candidates.size(); start += kChunk) {
      const std::size_t stop = std::min(st.candidates.size(), start + kChunk);
      std::vector<Condition> chunk;
      for (std::size_t k = start; k < stop; ++k) chunk.push_back(pool[st.candidates[k]]);
      auto preds = gpr::predict_waveforms(current, chunk, !cfg.latent_only);
      for (std::size_t k = 0; k < preds.size(); ++k) {
        auto rep = acquisition_score(preds[k], cfg, electrical(chunk[k]));
        res.degenerate_perturbations += rep.degenerate_perturbations;
        scores.push_back(Scored{st.candidates[start + k], rep.score});
      }
    }
    res.timings.score += seconds_since(t_score);

    if (!scores.empty()) {
      double sum = 0.0;
      row.max_score = scores.front().score;
      for (const auto& s : scores) {
        row.max_score = std::max(row.max_score, s.score);
        sum += s.score;
      }
      row.mean_score = sum / static_cast<double>(scores.size());
    }
    st.history.push_back(row);

    res.stop = check_termination(st, scores, cfg);
    if (res.stop != Decision::Continue) break;

    auto batch = select_batch(scores, pool_size, cfg);
    for (auto i : batch) chosen[i] = true;
    if (!label_all(batch)) break;
    last_fit = std::move(current);
    previous = &last_fit;
    ++st.iteration;
  }

  res.ensemble = std::move(current);
  for (auto i : st.selected) {
    if (labels[i]) res.labeled.samples.push_back(waveform::Sample{pool[i], *labels[i]});
  }
  return res;
}

}  // namespace ccsforge::al
