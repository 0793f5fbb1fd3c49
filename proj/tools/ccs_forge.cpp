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

// ccs-forge gen|characterize|eval|report --config <path> [--from-dataset] [--seed <int>]

#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "ccsforge.h"

namespace {

void print_log(const char* text, void*) { std::fputs(text, stdout); }

int fail_with(ccsf_status s) {
  std::fprintf(stderr, "ccs-forge: %s\n", ccsf_last_error());
  return static_cast<int>(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active-learning CCS driver-model characterization"};
  app.set_version_flag("--version", std::string(ccsf_version()));
  app.require_subcommand(1, 1);

  std::string config_path;
  bool from_dataset = false;
  std::int64_t seed = -1;
  for (const char* name : {"gen", "characterize", "eval", "report"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "run configuration file")->required();
    sub->add_flag("--from-dataset", from_dataset, "read labels from the pool file instead of simulating");
    sub->add_option("--seed", seed, "overrides run.seed")->check(CLI::NonNegativeNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();

  ccsf_config* cfg = nullptr;
  ccsf_status s = ccsf_config_load(config_path.c_str(), seed >= 0, static_cast<std::uint64_t>(seed < 0 ? 0 : seed), &cfg);
  if (s != CCSF_OK) return fail_with(s);
  ccsf_config_set_logger(cfg, print_log, nullptr);

  if (cmd == "gen") {
    s = ccsf_gen(cfg);
  } else if (cmd == "characterize") {
    s = ccsf_characterize(cfg, from_dataset ? 1 : 0);
  } else if (cmd == "eval") {
    s = ccsf_eval(cfg);
  } else {
    s = ccsf_report(cfg);
  }
  if (s == CCSF_OK) std::printf("outputs in %s\n", ccsf_config_run_dir(cfg));
  ccsf_config_free(cfg);
  return s == CCSF_OK ? 0 : fail_with(s);
}
