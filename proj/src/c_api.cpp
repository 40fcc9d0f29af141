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

#include "mtop/mtop.h"

#include <cmath>
#include <cstring>
#include <exception>
#include <limits>
#include <new>
#include <string>

#include <json.hpp>

#include "mtop/commands.hpp"
#include "mtop/error.hpp"

struct mtop_config {
  mtop::RunConfig cfg;
};

struct mtop_model {
  mtop::PolicyModel model;
};

namespace {

thread_local std::string g_last_error;

mtop_status to_status(mtop::ErrorKind k) {
  switch (k) {
    case mtop::ErrorKind::kUsage: return MTOP_ERR_USAGE;
    case mtop::ErrorKind::kConfig: return MTOP_ERR_CONFIG;
    case mtop::ErrorKind::kIo: return MTOP_ERR_IO;
    case mtop::ErrorKind::kNumeric: return MTOP_ERR_NUMERIC;
    case mtop::ErrorKind::kRefinement: return MTOP_ERR_REFINEMENT;
    case mtop::ErrorKind::kContract: return MTOP_ERR_CONTRACT;
    case mtop::ErrorKind::kDimension: return MTOP_ERR_DIMENSION;
    case mtop::ErrorKind::kDomain: return MTOP_ERR_DOMAIN;
  }
  return MTOP_ERR_INTERNAL;
}

template <class F>
mtop_status guard(F&& f) {
  try {
    g_last_error.clear();
    f();
    return MTOP_OK;
  } catch (const mtop::Error& e) {
    g_last_error = e.what();
    return to_status(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return MTOP_ERR_INTERNAL;
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw mtop::UsageError(std::string(what) + " is NULL");
}

void copy_out(const std::string& s, char* buf, size_t cap, size_t* needed) {
  if (needed) *needed = s.size() + 1;
  if (buf == nullptr) return;
  if (cap < s.size() + 1) throw mtop::UsageError("output buffer too small");
  std::memcpy(buf, s.c_str(), s.size() + 1);
}

mtop_eval_summary summarize(const std::vector<mtop::ReportRow>& rows, size_t first) {
  mtop_eval_summary s{};
  s.press = rows[first].success_rate;
  s.pick_place = rows[first + 1].success_rate;
  s.average = rows[first + 2].success_rate;
  s.trials_per_family = rows[first].trials;
  return s;
}

}  // namespace

extern "C" {

const char* mtop_last_error(void) { return g_last_error.c_str(); }

const char* mtop_status_name(mtop_status status) {
  switch (status) {
    case MTOP_OK: return "ok";
    case MTOP_ERR_USAGE: return "usage";
    case MTOP_ERR_CONFIG: return "config";
    case MTOP_ERR_IO: return "io";
    case MTOP_ERR_NUMERIC: return "numeric";
    case MTOP_ERR_REFINEMENT: return "refinement";
    case MTOP_ERR_CONTRACT: return "contract";
    case MTOP_ERR_DIMENSION: return "dimension";
    case MTOP_ERR_DOMAIN: return "domain";
    case MTOP_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* mtop_version(void) { return "1.0.0"; }

mtop_status mtop_config_create(mtop_config** out) {
  return guard([&] {
    require(out, "out");
    *out = new mtop_config;
  });
}

void mtop_config_destroy(mtop_config* cfg) { delete cfg; }

mtop_status mtop_config_set(mtop_config* cfg, const char* key, const char* value) {
  return guard([&] {
    require(cfg, "cfg");
    require(key, "key");
    require(value, "value");
    cfg->cfg.set(key, value);
  });
}

mtop_status mtop_config_load(mtop_config* cfg, const char* path) {
  return guard([&] {
    require(cfg, "cfg");
    require(path, "path");
    cfg->cfg.merge_file(path);
  });
}

mtop_status mtop_config_get(const mtop_config* cfg, const char* key, char* buf, size_t cap,
                            size_t* needed) {
  return guard([&] {
    require(cfg, "cfg");
    require(key, "key");
    copy_out(cfg->cfg.get(key), buf, cap, needed);
  });
}

mtop_status mtop_config_dump(const mtop_config* cfg, char* buf, size_t cap, size_t* needed) {
  return guard([&] {
    require(cfg, "cfg");
    copy_out(cfg->cfg.serialize(), buf, cap, needed);
  });
}

mtop_status mtop_gen_data(const mtop_config* cfg) {
  return guard([&] {
    require(cfg, "cfg");
    const mtop::Dataset ds = mtop::generate_dataset(cfg->cfg);
    mtop::write_dataset(ds, cfg->cfg, cfg->cfg.path("dataset_path"));
  });
}

mtop_status mtop_label(const mtop_config* cfg, mtop_label_summary* summary) {
  return guard([&] {
    require(cfg, "cfg");
    mtop::LabelSummary s;
    struct Fill {
      mtop::LabelSummary& s;
      mtop_label_summary* out;
      ~Fill() {
        if (out) *out = {s.trajectories, s.labelled, s.failed, s.backend_calls, s.agreement};
      }
    } fill{s, summary};
    mtop::cmd_label(cfg->cfg, &s);
  });
}

mtop_status mtop_train(const mtop_config* cfg, mtop_train_summary* summary) {
  return guard([&] {
    require(cfg, "cfg");
    const mtop::TrainSummary s = mtop::cmd_train(cfg->cfg);
    if (summary)
      *summary = {s.start_step,    s.end_step,     s.examples,
                  s.first.action,  s.last.action,  s.last.router,
                  s.last.total,    s.heldout_router_accuracy};
  });
}

mtop_status mtop_eval(const mtop_config* cfg, mtop_eval_summary* summary) {
  return guard([&] {
    require(cfg, "cfg");
    const auto rows = mtop::cmd_eval(cfg->cfg);
    if (summary) *summary = summarize(rows, 0);
  });
}

mtop_status mtop_ablate(const mtop_config* cfg, mtop_eval_summary out[3]) {
  return guard([&] {
    require(cfg, "cfg");
    const auto rows = mtop::cmd_ablate(cfg->cfg);
    if (out)
      for (size_t m = 0; m < 3; ++m) out[m] = summarize(rows, 3 * m);
  });
}

mtop_status mtop_report(const mtop_config* cfg) {
  return guard([&] {
    require(cfg, "cfg");
    mtop::cmd_report(cfg->cfg);
  });
}

mtop_status mtop_model_load(const char* path, mtop_model** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new mtop_model{mtop::load_model_checkpoint(path)};
  });
}

void mtop_model_destroy(mtop_model* model) { delete model; }

mtop_status mtop_model_get_info(const mtop_model* model, mtop_model_info* info) {
  return guard([&] {
    require(model, "model");
    require(info, "info");
    const auto& d = model->model.dims;
    *info = {model->model.routed() ? 1 : 0, d.instruction, d.observation, d.proprio,
             d.horizon, d.action_dim, model->model.param_count(), model->model.lambda};
  });
}

mtop_status mtop_model_infer(const mtop_model* model, const double* instruction,
                             size_t n_instruction, const double* observation,
                             size_t n_observation, const double* proprio, size_t n_proprio,
                             const int* token_mask, uint64_t seed, mtop_routing routing,
                             int ode_steps, double* actions, size_t actions_cap,
                             mtop_phase* phase) {
  return guard([&] {
    require(model, "model");
    require(instruction, "instruction");
    require(observation, "observation");
    require(proprio, "proprio");
    require(actions, "actions");
    if (ode_steps < 1) throw mtop::UsageError("ode_steps must be positive");
    if (routing < MTOP_ROUTE_ORIGINAL || routing > MTOP_ROUTE_REVERSAL)
      throw mtop::UsageError("unknown routing mode");
    const auto& d = model->model.dims;
    if (actions_cap < d.chunk_width()) throw mtop::UsageError("actions buffer too small");
    mtop::ContextFrame c;
    c.instruction.assign(instruction, instruction + n_instruction);
    c.observation.assign(observation, observation + n_observation);
    c.proprio.assign(proprio, proprio + n_proprio);
    if (token_mask)
      for (size_t s = 0; s < mtop::kNumTokenSlots; ++s) c.token_mask[s] = token_mask[s] != 0;
    mtop::Rng rng(seed);
    const mtop::InferResult r = mtop::infer_action(model->model, c, rng, mtop::OdeConfig{ode_steps},
                                                   static_cast<mtop::RoutingMode>(routing));
    const auto flat = r.chunk.actions.data();
    std::copy(flat.begin(), flat.end(), actions);
    if (phase) *phase = static_cast<mtop_phase>(r.phase);
  });
}

mtop_status mtop_validate_schedule(const char* json_text, size_t total_frames, int* valid,
                                   char* errors, size_t cap, size_t* needed) {
  return guard([&] {
    require(json_text, "json_text");
    require(valid, "valid");
    const auto j = nlohmann::json::parse(json_text, nullptr, false);
    if (j.is_discarded()) throw mtop::IoError("schedule is not valid JSON");
    const auto errs = mtop::validate(mtop::schedule_from_json(j, total_frames));
    *valid = errs.empty() ? 1 : 0;
    std::string text;
    for (const auto& e : errs) text += mtop::format_errors(std::span(&e, 1)) + "\n";
    copy_out(text, errors, cap, needed);
  });
}

}  // extern "C"
