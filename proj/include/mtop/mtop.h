// Copyright 2026 The mtop Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/* C interface to the mtop library. Every function returns an mtop_status;
 * on failure mtop_last_error() describes the error raised on the calling
 * thread. Handles are opaque and owned by the caller. */
#ifndef MTOP_MTOP_H_
#define MTOP_MTOP_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(MTOP_BUILDING_LIBRARY)
#define MTOP_API __declspec(dllexport)
#else
#define MTOP_API __declspec(dllimport)
#endif
#else
#define MTOP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values double as CLI exit codes. */
typedef enum mtop_status {
  MTOP_OK = 0,
  MTOP_ERR_USAGE = 1,
  MTOP_ERR_CONFIG = 2,
  MTOP_ERR_IO = 3,
  MTOP_ERR_NUMERIC = 4,
  MTOP_ERR_REFINEMENT = 5,
  MTOP_ERR_CONTRACT = 6,
  MTOP_ERR_DIMENSION = 7,
  MTOP_ERR_DOMAIN = 8,
  MTOP_ERR_INTERNAL = 9
} mtop_status;

typedef enum mtop_routing {
  MTOP_ROUTE_ORIGINAL = 0,
  MTOP_ROUTE_RANDOM = 1,
  MTOP_ROUTE_REVERSAL = 2
} mtop_routing;

typedef enum mtop_phase { MTOP_PHASE_MOVE = 0, MTOP_PHASE_OPERATE = 1 } mtop_phase;

typedef struct mtop_config mtop_config;
typedef struct mtop_model mtop_model;

typedef struct mtop_label_summary {
  size_t trajectories;
  size_t labelled;
  size_t failed;
  size_t backend_calls;
  double agreement;
} mtop_label_summary;

typedef struct mtop_train_summary {
  uint64_t start_step;
  uint64_t end_step;
  size_t examples;
  double first_action_loss;
  double last_action_loss;
  double last_router_loss;
  double last_total_loss;
  double heldout_router_accuracy; /* NaN for monolithic models */
} mtop_train_summary;

/* Success rates for Press, PickPlace and their pooled average. */
typedef struct mtop_eval_summary {
  double press;
  double pick_place;
  double average;
  size_t trials_per_family;
} mtop_eval_summary;

typedef struct mtop_model_info {
  int dual_expert;
  size_t instruction_dim;
  size_t observation_dim;
  size_t proprio_dim;
  size_t horizon;
  size_t action_dim;
  size_t param_count;
  double lambda;
} mtop_model_info;

MTOP_API const char* mtop_last_error(void);
MTOP_API const char* mtop_status_name(mtop_status status);
MTOP_API const char* mtop_version(void);

MTOP_API mtop_status mtop_config_create(mtop_config** out);
MTOP_API void mtop_config_destroy(mtop_config* cfg);
MTOP_API mtop_status mtop_config_set(mtop_config* cfg, const char* key, const char* value);
MTOP_API mtop_status mtop_config_load(mtop_config* cfg, const char* path);
/* Copies the value (NUL-terminated) into buf when it fits; *needed receives
 * the full length including the terminator. buf may be NULL to query. */
MTOP_API mtop_status mtop_config_get(const mtop_config* cfg, const char* key, char* buf,
                                     size_t cap, size_t* needed);
MTOP_API mtop_status mtop_config_dump(const mtop_config* cfg, char* buf, size_t cap,
                                      size_t* needed);

MTOP_API mtop_status mtop_gen_data(const mtop_config* cfg);
/* MTOP_ERR_REFINEMENT if any trajectory failed; outputs and the summary are
 * still written. summary may be NULL. */
MTOP_API mtop_status mtop_label(const mtop_config* cfg, mtop_label_summary* summary);
MTOP_API mtop_status mtop_train(const mtop_config* cfg, mtop_train_summary* summary);
/* Uses the routing_mode key. */
MTOP_API mtop_status mtop_eval(const mtop_config* cfg, mtop_eval_summary* summary);
/* out receives Original, Random, Reversal in that order; may be NULL. */
MTOP_API mtop_status mtop_ablate(const mtop_config* cfg, mtop_eval_summary out[3]);
MTOP_API mtop_status mtop_report(const mtop_config* cfg);

MTOP_API mtop_status mtop_model_load(const char* path, mtop_model** out);
MTOP_API void mtop_model_destroy(mtop_model* model);
MTOP_API mtop_status mtop_model_get_info(const mtop_model* model, mtop_model_info* info);
/* One action chunk for a single context. token_mask holds 3 entries
 * (instruction, observation, proprio). actions receives horizon*action_dim
 * values row-major; phase receives the expert used. */
MTOP_API mtop_status mtop_model_infer(const mtop_model* model, const double* instruction,
                                      size_t n_instruction, const double* observation,
                                      size_t n_observation, const double* proprio,
                                      size_t n_proprio, const int* token_mask, uint64_t seed,
                                      mtop_routing routing, int ode_steps, double* actions,
                                      size_t actions_cap, mtop_phase* phase);

/* Validates a schedule given as JSON text. *valid is 1 or 0; the error list
 * (one "Code[subtask n]: message" per line) is copied like mtop_config_get. */
MTOP_API mtop_status mtop_validate_schedule(const char* json_text, size_t total_frames,
                                            int* valid, char* errors, size_t cap,
                                            size_t* needed);

#ifdef __cplusplus
}
#endif

#endif /* MTOP_MTOP_H_ */
