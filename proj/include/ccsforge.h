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

#ifndef CCSFORGE_H
#define CCSFORGE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CCSF_API __declspec(dllexport)
#else
#define CCSF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as process exit codes. */
typedef enum ccsf_status {
  CCSF_OK = 0,
  CCSF_ERR_CONFIG = 1,    /* usage or configuration */
  CCSF_ERR_DATA = 2,      /* files, schemas, labels, leakage */
  CCSF_ERR_NUMERICAL = 3, /* non-PSD kernels, non-convergence */
  CCSF_ERR_INTERNAL = 4
} ccsf_status;

typedef struct ccsf_config ccsf_config;
typedef struct ccsf_model ccsf_model;

typedef void (*ccsf_log_fn)(const char* text, void* user);

typedef struct ccsf_condition {
  const char* cell_type;
  int drive_strength;
  const char* process;
  double voltage;     /* V */
  double temperature; /* degC */
  int arc_id;
  double input_slew;  /* s */
  double output_load; /* F */
} ccsf_condition;

CCSF_API const char* ccsf_version(void);

/* Message and error-kind name of the last failure on this thread. */
CCSF_API const char* ccsf_last_error(void);
CCSF_API const char* ccsf_last_error_kind(void);

/* `seed` overrides run.seed when `has_seed` is non-zero. */
CCSF_API ccsf_status ccsf_config_load(const char* path, int has_seed, uint64_t seed, ccsf_config** out);
CCSF_API ccsf_status ccsf_config_parse(const char* text, int has_seed, uint64_t seed, ccsf_config** out);
CCSF_API void ccsf_config_free(ccsf_config* cfg);
CCSF_API const char* ccsf_config_hash(const ccsf_config* cfg);
/* Run directory path; valid until the handle is freed. */
CCSF_API const char* ccsf_config_run_dir(const ccsf_config* cfg);
/* Progress text goes to `fn`; NULL silences it. */
CCSF_API void ccsf_config_set_logger(ccsf_config* cfg, ccsf_log_fn fn, void* user);

CCSF_API ccsf_status ccsf_gen(ccsf_config* cfg);
CCSF_API ccsf_status ccsf_characterize(ccsf_config* cfg, int from_dataset);
CCSF_API ccsf_status ccsf_eval(ccsf_config* cfg);
CCSF_API ccsf_status ccsf_report(ccsf_config* cfg);

CCSF_API ccsf_status ccsf_model_load(const char* path, ccsf_model** out);
CCSF_API void ccsf_model_free(ccsf_model* model);
CCSF_API int ccsf_model_points(const ccsf_model* model);
/* Mean waveform for one condition. Each output array holds
   ccsf_model_points() values; the variance arrays may be NULL. */
CCSF_API ccsf_status ccsf_model_predict(const ccsf_model* model, const ccsf_condition* c,
                                        double* times, double* currents, double* time_vars,
                                        double* current_vars);

#ifdef __cplusplus
}
#endif

#endif /* CCSFORGE_H */
