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

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "ccsforge.h"
#include "helpers.hpp"

namespace fs = std::filesystem;

namespace {

std::string config_text(const fs::path& out) {
  return "run.seed = 11\n"
         "run.output_dir = " + out.string() + "\n"
         "run.n = 8\n"
         "cell.INV.strengths = 1, 2\n"
         "grid.corners = TT:0.8:25\n"
         "grid.slews = 1.5e-11, 4e-11, 9.5e-11\n"
         "grid.loads = 3e-15, 8e-15, 1.9e-14\n"
         "gp.restarts = 1\n"
         "gp.max_evals = 30\n"
         "al.batch_fraction = 0.1\n"
         "al.max_iterations = 2\n";
}

void collect(const char* text, void* user) { static_cast<std::string*>(user)->append(text); }

}  // namespace

TEST_CASE("version and error reporting") {
  CHECK(std::string(ccsf_version()).size() > 0);
  ccsf_config* cfg = nullptr;
  const auto text = config_text("/tmp/unused") + "bogus.key = 2\n";
  CHECK(ccsf_config_parse(text.c_str(), 0, 0, &cfg) == CCSF_ERR_CONFIG);
  CHECK(cfg == nullptr);
  CHECK(std::string(ccsf_last_error()).find("bogus.key") != std::string::npos);
  CHECK(std::string(ccsf_last_error_kind()) == "config error");
  CHECK(ccsf_config_load("/nonexistent/run.cfg", 0, 0, &cfg) == CCSF_ERR_CONFIG);
  CHECK(ccsf_config_parse(nullptr, 0, 0, &cfg) == CCSF_ERR_CONFIG);
  CHECK(ccsf_model_load("/nonexistent/model.ccsgpr", nullptr) != CCSF_OK);
}

TEST_CASE("full run through the C API") {
  const auto out = testing::scratch_dir("capi");
  ccsf_config* cfg = nullptr;
  REQUIRE(ccsf_config_parse(config_text(out).c_str(), 1, 12, &cfg) == CCSF_OK);
  ccsf_config* other = nullptr;
  REQUIRE(ccsf_config_parse(config_text(out).c_str(), 0, 0, &other) == CCSF_OK);
  CHECK(std::string(ccsf_config_hash(cfg)) != ccsf_config_hash(other));
  ccsf_config_free(other);
  CHECK(fs::path(ccsf_config_run_dir(cfg)) == out / ccsf_config_hash(cfg));

  std::string log;
  ccsf_config_set_logger(cfg, collect, &log);
  CHECK(ccsf_characterize(cfg, 1) == CCSF_ERR_DATA);
  REQUIRE(ccsf_gen(cfg) == CCSF_OK);
  CHECK(log.find("rows simulated") != std::string::npos);
  REQUIRE(ccsf_characterize(cfg, 1) == CCSF_OK);
  REQUIRE(ccsf_eval(cfg) == CCSF_OK);
  REQUIRE(ccsf_report(cfg) == CCSF_OK);

  ccsf_model* model = nullptr;
  const auto path = fs::path(ccsf_config_run_dir(cfg)) / "model_INV.ccsgpr";
  REQUIRE(ccsf_model_load(path.string().c_str(), &model) == CCSF_OK);
  const int n = ccsf_model_points(model);
  CHECK(n == 8);
  std::vector<double> t(n), i(n), vt(n), vi(n);
  ccsf_condition c{"INV", 2, "TT", 0.8, 25.0, 1, 3e-11, 5e-15};
  REQUIRE(ccsf_model_predict(model, &c, t.data(), i.data(), vt.data(), vi.data()) == CCSF_OK);
  CHECK(t[0] == 0.0);
  for (int k = 1; k < n; ++k) CHECK(t[k] > t[k - 1]);
  for (int k = 0; k < n; ++k) {
    CHECK(std::isfinite(i[k]));
    CHECK(vi[k] >= 0.0);
  }
  REQUIRE(ccsf_model_predict(model, &c, t.data(), i.data(), nullptr, nullptr) == CCSF_OK);
  ccsf_condition bad = c;
  bad.cell_type = "XOR";
  CHECK(ccsf_model_predict(model, &bad, t.data(), i.data(), nullptr, nullptr) == CCSF_ERR_DATA);
  bad = c;
  bad.input_slew = -1.0;
  CHECK(ccsf_model_predict(model, &bad, t.data(), i.data(), nullptr, nullptr) != CCSF_OK);
  ccsf_model_free(model);
  ccsf_config_free(cfg);
}
