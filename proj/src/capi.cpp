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

#include "ccsforge.h"

#include <new>
#include <optional>
#include <sstream>
#include <string>

#include "error.hpp"
#include "gpr.hpp"
#include "pipeline.hpp"

struct ccsf_config {
  ccsforge::pipeline::RunConfig cfg;
  std::string run_dir;
  ccsf_log_fn log = nullptr;
  void* user = nullptr;
};

struct ccsf_model {
  ccsforge::gpr::GprEnsemble ensemble;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_kind;

ccsf_status record(ccsf_status s, const std::string& kind, const std::string& msg) {
  g_kind = kind;
  g_error = msg;
  return s;
}

template <class F>
ccsf_status guarded(F&& f) {
  g_error.clear();
  g_kind.clear();
  try {
    f();
    return CCSF_OK;
  } catch (const ccsforge::Error& e) {
    return record(static_cast<ccsf_status>(ccsforge::exit_code_for(e.kind())), to_string(e.kind()),
                  e.what());
  } catch (const std::bad_alloc&) {
    return record(CCSF_ERR_INTERNAL, "out of memory", "out of memory");
  } catch (const std::exception& e) {
    return record(CCSF_ERR_INTERNAL, "internal", e.what());
  }
}

ccsf_status null_arg(const char* what) {
  return record(CCSF_ERR_CONFIG, "invalid argument", std::string("null ") + what);
}

// Flushes captured progress text to the handle's logger.
struct LogSink {
  explicit LogSink(const ccsf_config* c) : c_(c) {}
  ~LogSink() {
    if (c_->log && !os.str().empty()) c_->log(os.str().c_str(), c_->user);
  }
  std::ostringstream os;

 private:
  const ccsf_config* c_;
};

ccsf_status make_config(ccsforge::pipeline::RunConfig cfg, ccsf_config** out) {
  auto* h = new (std::nothrow) ccsf_config{};
  if (!h) return record(CCSF_ERR_INTERNAL, "out of memory", "out of memory");
  h->cfg = std::move(cfg);
  h->run_dir = h->cfg.run_dir().string();
  *out = h;
  return CCSF_OK;
}

}  // namespace

extern "C" {

const char* ccsf_version(void) { return "0.1.0"; }

const char* ccsf_last_error(void) { return g_error.c_str(); }

const char* ccsf_last_error_kind(void) { return g_kind.c_str(); }

ccsf_status ccsf_config_load(const char* path, int has_seed, uint64_t seed, ccsf_config** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  *out = nullptr;
  std::optional<ccsforge::pipeline::RunConfig> cfg;
  auto s = guarded([&] {
    cfg = ccsforge::pipeline::load_config(path, has_seed ? std::optional<std::uint64_t>(seed) : std::nullopt);
  });
  return s == CCSF_OK ? make_config(std::move(*cfg), out) : s;
}

ccsf_status ccsf_config_parse(const char* text, int has_seed, uint64_t seed, ccsf_config** out) {
  if (!text) return null_arg("text");
  if (!out) return null_arg("out");
  *out = nullptr;
  std::optional<ccsforge::pipeline::RunConfig> cfg;
  auto s = guarded([&] {
    cfg = ccsforge::pipeline::parse_config(text, "<text>",
                                           has_seed ? std::optional<std::uint64_t>(seed) : std::nullopt);
  });
  return s == CCSF_OK ? make_config(std::move(*cfg), out) : s;
}

void ccsf_config_free(ccsf_config* cfg) { delete cfg; }

const char* ccsf_config_hash(const ccsf_config* cfg) { return cfg ? cfg->cfg.hash.c_str() : ""; }

const char* ccsf_config_run_dir(const ccsf_config* cfg) { return cfg ? cfg->run_dir.c_str() : ""; }

void ccsf_config_set_logger(ccsf_config* cfg, ccsf_log_fn fn, void* user) {
  if (!cfg) return;
  cfg->log = fn;
  cfg->user = user;
}

ccsf_status ccsf_gen(ccsf_config* cfg) {
  if (!cfg) return null_arg("config");
  LogSink sink(cfg);
  return guarded([&] { ccsforge::pipeline::cmd_gen(cfg->cfg, sink.os); });
}

ccsf_status ccsf_characterize(ccsf_config* cfg, int from_dataset) {
  if (!cfg) return null_arg("config");
  LogSink sink(cfg);
  return guarded([&] { ccsforge::pipeline::cmd_characterize(cfg->cfg, from_dataset != 0, sink.os); });
}

ccsf_status ccsf_eval(ccsf_config* cfg) {
  if (!cfg) return null_arg("config");
  LogSink sink(cfg);
  return guarded([&] { ccsforge::pipeline::cmd_eval(cfg->cfg, sink.os); });
}

ccsf_status ccsf_report(ccsf_config* cfg) {
  if (!cfg) return null_arg("config");
  LogSink sink(cfg);
  return guarded([&] { ccsforge::pipeline::cmd_report(cfg->cfg, sink.os); });
}

ccsf_status ccsf_model_load(const char* path, ccsf_model** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  *out = nullptr;
  ccsf_model* m = nullptr;
  auto s = guarded([&] {
    auto e = ccsforge::gpr::load_ensemble(path);
    m = new ccsf_model{std::move(e)};
  });
  if (s == CCSF_OK) *out = m;
  return s;
}

void ccsf_model_free(ccsf_model* model) { delete model; }

int ccsf_model_points(const ccsf_model* model) { return model ? model->ensemble.n : 0; }

ccsf_status ccsf_model_predict(const ccsf_model* model, const ccsf_condition* c, double* times,
                               double* currents, double* time_vars, double* current_vars) {
  if (!model) return null_arg("model");
  if (!c || !c->cell_type || !c->process) return null_arg("condition");
  if (!times || !currents) return null_arg("output array");
  return guarded([&] {
    ccsforge::waveform::Condition cond{c->cell_type, c->drive_strength, c->process, c->voltage,
                                       c->temperature, c->arc_id, c->input_slew, c->output_load};
    ccsforge::waveform::validate(cond);
    auto p = ccsforge::gpr::predict_waveform(model->ensemble, cond);
    for (int j = 0; j < p.n(); ++j) {
      times[j] = p.time_means[static_cast<std::size_t>(j)];
      currents[j] = p.current_means[static_cast<std::size_t>(j)];
      if (time_vars) time_vars[j] = p.time_vars[static_cast<std::size_t>(j)];
      if (current_vars) current_vars[j] = p.current_vars[static_cast<std::size_t>(j)];
    }
  });
}

}  // extern "C"
