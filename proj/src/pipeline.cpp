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

#include "pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dataset.hpp"
#include "error.hpp"
#include "keyed_config.hpp"
#include "textio.hpp"

namespace ccsforge::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using waveform::Condition;
using waveform::Dataset;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string utc_now() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

[[noreturn]] void config_error(const std::string& msg) { fail(ErrorKind::Config, msg); }

void require_positive(const std::vector<double>& v, const std::string& key) {
  if (v.empty()) config_error(key + " is empty");
  for (double x : v) {
    if (!(x > 0.0) || !std::isfinite(x)) config_error(key + " values must be finite and > 0");
  }
  std::set<double> uniq(v.begin(), v.end());
  if (uniq.size() != v.size()) config_error(key + " has repeated values");
}

std::vector<refsim::Corner> parse_corners(const KeyedConfig& kc) {
  std::vector<refsim::Corner> out;
  for (const auto& item : kc.get_string_list("grid.corners")) {
    auto parts = textio::split(item, ':');
    std::optional<double> v, t;
    if (parts.size() == 3) {
      v = textio::parse_double(textio::trim(parts[1]));
      t = textio::parse_double(textio::trim(parts[2]));
    }
    if (!v || !t || textio::trim(parts[0]).empty()) {
      config_error("grid.corners item '" + item + "' is not PROCESS:volts:degC");
    }
    if (!(*v > 0.0)) config_error("grid.corners item '" + item + "' has a non-positive voltage");
    out.push_back(refsim::Corner{std::string(textio::trim(parts[0])), *v, *t});
  }
  if (out.empty()) config_error("grid.corners is empty");
  return out;
}

void write_json(const fs::path& p, const json& j) { textio::write_file_atomic(p, j.dump(2) + "\n"); }

json read_json(const fs::path& p) {
  try {
    return json::parse(textio::read_file(p));
  } catch (const json::exception& e) {
    fail(ErrorKind::CorruptFile, p.string() + ": " + e.what());
  }
}

json timings_json(const al::LoopTimings& t) {
  return json{{"simulate", t.simulate}, {"train", t.fit}, {"score", t.score}};
}

Dataset subset(const Dataset& d, const std::vector<std::size_t>& rows) {
  Dataset out;
  out.n = d.n;
  for (auto r : rows) out.samples.push_back(d.samples[r]);
  return out;
}

std::vector<std::size_t> rows_of_cell(const Dataset& d, const std::string& cell) {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < d.samples.size(); ++r) {
    if (d.samples[r].condition.cell_type == cell) out.push_back(r);
  }
  return out;
}

// Per-cell seeds stay independent of the order of the other cells.
std::uint64_t cell_seed(std::uint64_t seed, const std::string& cell) {
  return seed ^ textio::fnv1a(cell);
}

}  // namespace

waveform::EncodingSchema RunConfig::schema() const {
  waveform::EncodingSchema s;
  for (const auto& c : cells) s.cell_types.push_back(c.cell_type);
  s.process_codes = process_codes;
  int arcs = 1;
  for (const auto& c : cells) arcs = std::max(arcs, c.arc_count);
  s.arc_count = arcs;
  return s;
}

RunConfig parse_config(const std::string& text, const std::string& source,
                       std::optional<std::uint64_t> seed_override) {
  KeyedConfig kc = KeyedConfig::parse(text, source);
  if (seed_override) kc.set("run.seed", std::to_string(*seed_override));

  RunConfig c;
  if (!kc.has("run.seed")) config_error(source + ": run.seed is required");
  const long long seed = kc.get_int("run.seed");
  if (seed < 0) config_error("run.seed must be >= 0");
  c.seed = static_cast<std::uint64_t>(seed);
  if (auto dir = kc.find("run.output_dir")) c.output_root = *dir;
  c.holdout_fraction = kc.get_double("run.holdout_fraction", c.holdout_fraction);
  if (!(c.holdout_fraction > 0.0 && c.holdout_fraction < 1.0)) {
    config_error("run.holdout_fraction must be in (0, 1)");
  }
  c.n = static_cast<int>(kc.get_int("run.n", c.n));
  if (c.n < 2 || c.n > 4096) config_error("run.n must be in [2, 4096]");

  c.sim.time_step = kc.get_double("sim.time_step", c.sim.time_step);
  c.sim.max_sim_time = kc.get_double("sim.max_sim_time", c.sim.max_sim_time);
  c.sim.convergence_tol = kc.get_double("sim.convergence_tol", c.sim.convergence_tol);
  if (!(c.sim.time_step > 0.0) || !(c.sim.max_sim_time > c.sim.time_step) ||
      !(c.sim.convergence_tol > 0.0)) {
    config_error("sim.* values must be positive with max_sim_time > time_step");
  }

  c.cells = refsim::cells_from_config(kc);
  if (c.cells.empty()) config_error(source + ": no cell.<NAME>.* sections");
  c.corners = parse_corners(kc);
  c.slews = kc.get_double_list("grid.slews");
  c.loads = kc.get_double_list("grid.loads");
  require_positive(c.slews, "grid.slews");
  require_positive(c.loads, "grid.loads");

  std::vector<std::string> labels;
  for (const auto& k : c.corners) {
    if (std::find(labels.begin(), labels.end(), k.process) == labels.end()) labels.push_back(k.process);
    for (const auto& cell : c.cells) {
      if (!cell.process_shift.count(k.process)) {
        config_error("cell." + cell.cell_type + " has no process_shift for corner process " + k.process);
      }
    }
  }
  if (kc.has("grid.process_codes")) {
    for (const auto& item : kc.get_string_list("grid.process_codes")) {
      auto parts = textio::split(item, ':');
      auto v = parts.size() == 2 ? textio::parse_double(textio::trim(parts[1])) : std::nullopt;
      if (!v) config_error("grid.process_codes item '" + item + "' is not LABEL:value");
      c.process_codes.emplace_back(std::string(textio::trim(parts[0])), *v);
    }
    for (const auto& l : labels) {
      bool found = false;
      for (const auto& [label, code] : c.process_codes) found = found || label == l;
      if (!found) config_error("grid.process_codes has no code for " + l);
    }
  } else {
    const std::map<std::string, double> defaults{{"SS", -1.0}, {"TT", 0.0}, {"FF", 1.0}};
    for (const auto& l : labels) {
      auto it = defaults.find(l);
      if (it == defaults.end()) config_error("grid.process_codes is required for process " + l);
      c.process_codes.emplace_back(l, it->second);
    }
  }

  c.gp.restarts = static_cast<int>(kc.get_int("gp.restarts", c.gp.restarts));
  c.gp.max_evals = static_cast<int>(kc.get_int("gp.max_evals", c.gp.max_evals));
  c.gp.hyperopt_rows = static_cast<int>(kc.get_int("gp.hyperopt_rows", c.gp.hyperopt_rows));
  c.freeze_hyperparams = kc.get_bool("gp.freeze_hyperparams", false);
  c.warm_start = kc.get_bool("gp.warm_start", false);
  if (c.gp.restarts < 0 || c.gp.max_evals < 1 || c.gp.hyperopt_rows < 0) {
    config_error("gp.restarts >= 0, gp.max_evals >= 1 and gp.hyperopt_rows >= 0 are required");
  }

  auto& a = c.al;
  a.initial_fraction = kc.get_double("al.initial_fraction", a.initial_fraction);
  a.batch_fraction = kc.get_double("al.batch_fraction", a.batch_fraction);
  a.delta_time_rel = kc.get_double("al.delta_time_rel", a.delta_time_rel);
  a.delta_current_rel = kc.get_double("al.delta_current_rel", a.delta_current_rel);
  if (kc.has("al.delta_time")) a.delta_time = kc.get_double("al.delta_time");
  if (kc.has("al.delta_current")) a.delta_current = kc.get_double("al.delta_current");
  // Default stop when the largest expected loss variance falls below
  // (1% of the lowest corner supply)^2.
  double vmin = c.corners.front().voltage;
  for (const auto& k : c.corners) vmin = std::min(vmin, k.voltage);
  a.score_threshold = kc.get_double("al.score_threshold", (0.01 * vmin) * (0.01 * vmin));
  a.max_iterations = static_cast<int>(kc.get_int("al.max_iterations", a.max_iterations));
  a.latent_only = kc.get_bool("al.latent_only", a.latent_only);
  c.track_holdout = kc.get_bool("al.track_holdout", c.track_holdout);
  a.seed = c.seed;
  c.gp.seed = c.seed;
  try {
    a.validate();
  } catch (const Error& e) {
    config_error(e.what());
  }

  kc.reject_unused();

  const std::string full = kc.canonical();
  std::string canon;
  for (auto line : textio::split(full, '\n')) {
    if (line.empty() || line.starts_with("run.output_dir ")) continue;
    canon += line;
    canon += '\n';
  }
  c.canonical = canon;
  c.hash = textio::hex64(textio::fnv1a(canon));
  return c;
}

RunConfig load_config(const fs::path& path, std::optional<std::uint64_t> seed_override) {
  std::string text;
  try {
    text = textio::read_file(path);
  } catch (const Error& e) {
    config_error(std::string("cannot read config: ") + e.what());
  }
  return parse_config(text, path.string(), seed_override);
}

al::Electrical electrical_for(const RunConfig& cfg, const Condition& c) {
  const auto& cell = refsim::find_cell(cfg.cells, c.cell_type);
  return al::Electrical{refsim::total_load(cell, c), waveform::arc_direction(c.arc_id), c.voltage};
}

al::ElectricalFn electrical_fn(const RunConfig& cfg) {
  return [&cfg](const Condition& c) { return electrical_for(cfg, c); };
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_holdout(std::size_t rows,
                                                                            double fraction,
                                                                            std::uint64_t seed) {
  std::vector<std::size_t> order(rows);
  for (std::size_t i = 0; i < rows; ++i) order[i] = i;
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::shuffle(order.begin(), order.end(), rng);
  const auto h = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(rows)));
  std::vector<std::size_t> holdout(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(h));
  std::vector<std::size_t> pool(order.begin() + static_cast<std::ptrdiff_t>(h), order.end());
  std::sort(holdout.begin(), holdout.end());
  std::sort(pool.begin(), pool.end());
  return {pool, holdout};
}

// ---- gen ---------------------------------------------------------------

GenSummary cmd_gen(const RunConfig& cfg, std::ostream& log) {
  const Paths paths{cfg.run_dir()};
  fs::create_directories(paths.dir);
  const auto started = utc_now();

  auto t0 = Clock::now();
  Dataset all = refsim::generate_grid(cfg.cells, cfg.corners, cfg.slews, cfg.loads, cfg.sim, cfg.n);
  GenSummary s;
  s.simulate_seconds = seconds_since(t0);
  s.rows = all.samples.size();
  auto [pool_rows, holdout_rows] = split_holdout(s.rows, cfg.holdout_fraction, cfg.seed);
  if (pool_rows.empty() || holdout_rows.empty()) {
    fail(ErrorKind::InsufficientData, "grid of " + std::to_string(s.rows) +
                                          " rows leaves an empty pool or holdout");
  }
  s.pool_rows = pool_rows.size();
  s.holdout_rows = holdout_rows.size();
  waveform::write_dataset(paths.pool(), subset(all, pool_rows));
  waveform::write_dataset(paths.holdout(), subset(all, holdout_rows));

  json m;
  m["command"] = "gen";
  m["config_hash"] = cfg.hash;
  m["seed"] = cfg.seed;
  m["started_utc"] = started;
  m["finished_utc"] = utc_now();
  m["rows"] = s.rows;
  m["pool_rows"] = s.pool_rows;
  m["holdout_rows"] = s.holdout_rows;
  m["oracle_calls"] = s.rows;
  m["seconds"] = {{"simulate", s.simulate_seconds}};
  m["artifacts"] = {{"pool", paths.pool().filename().string()},
                    {"holdout", paths.holdout().filename().string()}};
  write_json(paths.gen_manifest(), m);
  textio::write_file_atomic(paths.dir / "config.canonical", cfg.canonical);

  log << "run " << cfg.hash << ": " << s.rows << " rows simulated in " << s.simulate_seconds
      << " s; pool " << s.pool_rows << ", holdout " << s.holdout_rows << "\n";
  return s;
}

// ---- characterize --------------------------------------------------------

CharacterizeSummary cmd_characterize(const RunConfig& cfg, bool from_dataset, std::ostream& log) {
  const Paths paths{cfg.run_dir()};
  if (!fs::exists(paths.pool())) {
    fail(ErrorKind::Io, "missing " + paths.pool().string() + " (run gen first)");
  }
  const Dataset pool = waveform::read_dataset(paths.pool());
  const Dataset holdout = waveform::read_dataset(paths.holdout());
  if (pool.n != cfg.n || holdout.n != cfg.n) fail(ErrorKind::Dimension, "dataset n differs from run.n");
  const auto schema = cfg.schema();
  const auto electrical = electrical_fn(cfg);
  const auto started = utc_now();

  CharacterizeSummary summary;
  summary.holdout_rows = holdout.samples.size();
  json cells = json::array();
  al::LoopTimings total;

  for (const auto& cell : cfg.cells) {
    const auto rows = rows_of_cell(pool, cell.cell_type);
    if (rows.empty()) continue;
    std::vector<Condition> conds;
    std::map<Condition, std::size_t> local;
    for (auto r : rows) {
      local.emplace(pool.samples[r].condition, conds.size());
      conds.push_back(pool.samples[r].condition);
    }

    al::Oracle oracle;
    if (from_dataset) {
      oracle = [&](const Condition& c) {
        auto it = local.find(c);
        if (it == local.end()) fail(ErrorKind::OracleFailure, "no stored label for " + waveform::describe(c));
        return pool.samples[rows[it->second]].waveform;
      };
    } else {
      oracle = [&](const Condition& c) {
        try {
          return refsim::label(cell, c, cfg.sim, cfg.n).waveform;
        } catch (const Error& e) {
          fail(ErrorKind::OracleFailure, e.what());
        }
      };
    }

    al::AcquisitionConfig acfg = cfg.al;
    acfg.seed = cell_seed(cfg.seed, cell.cell_type);
    al::LoopOptions opts;
    opts.gp = cfg.gp;
    opts.gp.seed = acfg.seed;
    opts.freeze_hyperparams = cfg.freeze_hyperparams;
    opts.warm_start = cfg.warm_start;
    const Dataset cell_holdout = subset(holdout, rows_of_cell(holdout, cell.cell_type));
    if (cfg.track_holdout && !cell_holdout.samples.empty()) opts.holdout = &cell_holdout;

    log << "characterize " << cell.cell_type << ": pool " << conds.size() << "\n";
    auto res = al::run_loop(conds, cfg.n, oracle, electrical, schema, acfg, opts);

    CellRun run;
    run.cell = cell.cell_type;
    run.pool_size = conds.size();
    run.labeled = res.labeled.samples.size();
    run.iterations = res.state.iteration + 1;
    run.stop = res.stop;
    run.oracle_calls = res.oracle_calls;
    run.timings = res.timings;
    for (auto i : res.labeling_order) run.labeling_order.push_back(rows[i]);
    total.simulate += res.timings.simulate;
    total.fit += res.timings.fit;
    total.score += res.timings.score;

    std::string order_text;
    for (auto i : run.labeling_order) order_text += std::to_string(i) + "\n";
    textio::write_file_atomic(paths.selected(cell.cell_type), order_text);
    textio::write_file_atomic(paths.history(cell.cell_type), al::format_history(res.state.history));
    if (res.ensemble.inputs) gpr::save_ensemble(paths.model(cell.cell_type), res.ensemble);

    json cj;
    cj["cell"] = run.cell;
    cj["pool_size"] = run.pool_size;
    cj["labeled"] = run.labeled;
    cj["labeled_fraction"] = static_cast<double>(run.labeled) / static_cast<double>(run.pool_size);
    cj["iterations"] = run.iterations;
    cj["stop"] = res.aborted ? "aborted" : al::to_string(res.stop);
    cj["oracle_calls"] = run.oracle_calls;
    cj["degenerate_perturbations"] = res.degenerate_perturbations;
    cj["seconds"] = timings_json(res.timings);
    cj["artifacts"] = {{"model", paths.model(cell.cell_type).filename().string()},
                       {"history", paths.history(cell.cell_type).filename().string()},
                       {"selected", paths.selected(cell.cell_type).filename().string()}};
    cells.push_back(cj);
    log << "  " << run.labeled << " labeled (" << 100.0 * cj["labeled_fraction"].get<double>()
        << "%), " << run.iterations << " iterations, stop: " << cj["stop"].get<std::string>()
        << "\n";

    summary.cells.push_back(std::move(run));
    if (res.aborted) {
      summary.aborted = true;
      summary.abort_message = res.abort_message;
      if (res.failed_condition) summary.abort_message += " [" + waveform::describe(*res.failed_condition) + "]";
      break;
    }
  }

  std::size_t selected = 0;
  for (const auto& r : summary.cells) selected += r.labeled;
  json m;
  m["command"] = "characterize";
  m["config_hash"] = cfg.hash;
  m["seed"] = cfg.seed;
  m["from_dataset"] = from_dataset;
  m["started_utc"] = started;
  m["finished_utc"] = utc_now();
  m["status"] = summary.aborted ? "aborted" : "ok";
  if (summary.aborted) m["error"] = summary.abort_message;
  m["selected"] = selected;
  m["holdout_rows"] = summary.holdout_rows;
  m["oracle_calls"] = selected + summary.holdout_rows;
  m["seconds"] = timings_json(total);
  m["cells"] = cells;
  write_json(paths.characterize_manifest(), m);

  if (summary.aborted) fail(ErrorKind::OracleFailure, summary.abort_message);
  return summary;
}

// ---- eval ----------------------------------------------------------------

library::AccuracyReport cmd_eval(const RunConfig& cfg, std::ostream& log) {
  const Paths paths{cfg.run_dir()};
  const Dataset holdout = waveform::read_dataset(paths.holdout());
  const auto electrical = electrical_fn(cfg);

  std::vector<library::AccuracyReport> parts;
  std::vector<std::pair<std::string, fs::path>> model_files;
  std::vector<library::CcsTable> tables;
  const auto grid = refsim::grid_conditions(cfg.cells, cfg.corners, cfg.slews, cfg.loads);
  for (const auto& cell : cfg.cells) {
    const auto path = paths.model(cell.cell_type);
    if (!fs::exists(path)) fail(ErrorKind::Io, "missing " + path.string() + " (run characterize first)");
    const auto e = gpr::load_ensemble(path);
    model_files.emplace_back(cell.cell_type, path);

    const Dataset h = subset(holdout, rows_of_cell(holdout, cell.cell_type));
    if (!h.samples.empty()) parts.push_back(library::accuracy_report(e, h, electrical));

    std::vector<Condition> conds;
    for (const auto& c : grid) {
      if (c.cell_type == cell.cell_type) conds.push_back(c);
    }
    const auto preds = gpr::predict_waveforms(e, conds, false);
    for (std::size_t k = 0; k < conds.size(); ++k) {
      library::CcsTable t;
      t.condition = conds[k];
      t.reference_time = refsim::reference_time(conds[k]);
      t.times = preds[k].time_means;
      t.currents = preds[k].current_means;
      tables.push_back(std::move(t));
    }
  }
  const auto acc = library::merge_accuracy(parts);
  library::export_ccs_library(tables, paths.library());
  const auto storage = library::storage_report(paths.library(), model_files);

  textio::write_file_atomic(paths.accuracy_csv(), library::format_accuracy_csv(acc));
  textio::write_file_atomic(paths.accuracy_txt(), library::format_accuracy_summary(acc));
  std::string scsv = "name,lut_bytes,model_bytes\n";
  for (const auto& r : storage.rows) {
    scsv += r.name + "," + std::to_string(r.lut_bytes) + "," + std::to_string(r.model_bytes) + "\n";
  }
  scsv += "total," + std::to_string(storage.lut_bytes) + "," + std::to_string(storage.model_bytes) + "\n";
  textio::write_file_atomic(paths.storage_csv(), scsv);
  textio::write_file_atomic(paths.storage_txt(), library::format_storage(storage));

  json m;
  m["command"] = "eval";
  m["config_hash"] = cfg.hash;
  m["seed"] = cfg.seed;
  m["holdout_rows"] = holdout.samples.size();
  m["library_tables"] = tables.size();
  m["lut_bytes"] = storage.lut_bytes;
  m["model_bytes"] = storage.model_bytes;
  m["storage_ratio"] = storage.ratio;
  m["delay_mae_s"] = acc.rows.back().delay_mae;
  m["delay_mape"] = acc.rows.back().delay_mape;
  m["voltage_rmse_v"] = acc.rows.back().voltage_rmse;
  m["artifacts"] = {{"library", paths.library().filename().string()},
                    {"accuracy", paths.accuracy_csv().filename().string()},
                    {"storage", paths.storage_csv().filename().string()}};
  write_json(paths.eval_manifest(), m);

  log << library::format_accuracy_summary(acc) << library::format_storage(storage);
  return acc;
}

// ---- report --------------------------------------------------------------

void cmd_report(const RunConfig& cfg, std::ostream& log) {
  const Paths paths{cfg.run_dir()};
  for (const auto& p : {paths.characterize_manifest(), paths.gen_manifest()}) {
    if (!fs::exists(p)) fail(ErrorKind::Io, "missing " + p.string());
  }
  const json cm = read_json(paths.characterize_manifest());
  const json gm = read_json(paths.gen_manifest());

  std::string scores = "cell,iteration,max_score,mean_score\n";
  std::string selected = "cell,iteration,selected_count\n";
  for (const auto& cj : cm.at("cells")) {
    const std::string cell = cj.at("cell").get<std::string>();
    const auto hp = paths.history(cell);
    if (!fs::exists(hp)) fail(ErrorKind::Io, "missing history " + hp.string());
    const std::string history_text = textio::read_file(hp);
    auto lines = textio::split(history_text, '\n');
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (textio::trim(lines[i]).empty()) continue;
      auto f = textio::split(lines[i], ',');
      if (f.size() != 5) fail(ErrorKind::CorruptFile, hp.string() + ": bad row " + std::to_string(i + 1));
      scores += cell + "," + std::string(f[0]) + "," + std::string(f[2]) + "," + std::string(f[3]) + "\n";
      selected += cell + "," + std::string(f[0]) + "," + std::string(f[1]) + "\n";
    }
  }
  textio::write_file_atomic(paths.trend_scores(), scores);
  textio::write_file_atomic(paths.trend_selected(), selected);

  const double baseline = gm.at("seconds").at("simulate").get<double>();
  const auto& s = cm.at("seconds");
  const double sim = s.at("simulate").get<double>();
  const double train = s.at("train").get<double>() + s.at("score").get<double>();
  auto pct = [&](double x) { return baseline > 0.0 ? 100.0 * x / baseline : 0.0; };

  std::string csv = "phase,seconds,percent_of_full_grid_simulation\n";
  auto add = [&](const char* name, double v) {
    csv += std::string(name) + "," + textio::format_double(v) + "," + textio::format_double(pct(v)) + "\n";
  };
  add("simulate", sim);
  add("train", train);
  add("total", sim + train);
  textio::write_file_atomic(paths.runtime_csv(), csv);

  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "full-grid simulation baseline: %.3f s (%zu rows)\n", baseline,
                gm.at("rows").get<std::size_t>());
  os << buf;
  std::snprintf(buf, sizeof buf, "%-10s %12s %10s\n", "phase", "seconds", "percent");
  os << buf;
  for (auto [name, v] : {std::pair{"simulate", sim}, {"train", train}, {"total", sim + train}}) {
    std::snprintf(buf, sizeof buf, "%-10s %12.3f %9.2f%%\n", name, v, pct(v));
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "train includes %.3f s of acquisition scoring\n",
                s.at("score").get<double>());
  os << buf;
  std::snprintf(buf, sizeof buf, "oracle calls: %zu selected + %zu holdout = %zu\n",
                cm.at("selected").get<std::size_t>(), cm.at("holdout_rows").get<std::size_t>(),
                cm.at("oracle_calls").get<std::size_t>());
  os << buf;
  if (cm.at("from_dataset").get<bool>()) os << "labels were read from the pool file\n";
  textio::write_file_atomic(paths.runtime_txt(), os.str());
  log << os.str();
}

}  // namespace ccsforge::pipeline
