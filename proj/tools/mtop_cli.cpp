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

// mtop command-line front end. Links only the C interface.

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mtop/mtop.h"

namespace {

struct Common {
  std::vector<std::string> config_files;
  std::vector<std::string> sets;
  std::vector<std::pair<std::string, std::string>> flags;  // applied last
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("-c,--config", c.config_files, "key = value config file (repeatable)");
  sub->add_option("-s,--set", c.sets, "override one key, KEY=VALUE (repeatable)");
}

// A flag that maps straight onto a config key.
void add_key_flag(CLI::App* sub, Common& c, const std::string& name, const std::string& key,
                  const std::string& help) {
  sub->add_option_function<std::string>(
      name, [&c, key](const std::string& v) { c.flags.emplace_back(key, v); }, help);
}

int fail(mtop_status st) {
  std::fprintf(stderr, "mtop: %s error: %s\n", mtop_status_name(st), mtop_last_error());
  return static_cast<int>(st);
}

mtop_status build_config(const Common& c, mtop_config** out) {
  mtop_status st = mtop_config_create(out);
  if (st != MTOP_OK) return st;
  for (const auto& f : c.config_files)
    if ((st = mtop_config_load(*out, f.c_str())) != MTOP_OK) return st;
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "mtop: --set expects KEY=VALUE, got '%s'\n", s.c_str());
      return MTOP_ERR_USAGE;
    }
    if ((st = mtop_config_set(*out, s.substr(0, eq).c_str(), s.substr(eq + 1).c_str())) != MTOP_OK)
      return st;
  }
  for (const auto& [k, v] : c.flags)
    if ((st = mtop_config_set(*out, k.c_str(), v.c_str())) != MTOP_OK) return st;
  return MTOP_OK;
}

std::string get(const mtop_config* cfg, const char* key) {
  size_t n = 0;
  if (mtop_config_get(cfg, key, nullptr, 0, &n) != MTOP_OK) return "";
  std::string s(n, '\0');
  mtop_config_get(cfg, key, s.data(), n, &n);
  s.resize(n - 1);
  return s;
}

void print_eval(const char* mode, const mtop_eval_summary& s) {
  std::printf("%-9s Press %6.2f%%  PickPlace %6.2f%%  Average %6.2f%%  (%zu trials/family)\n", mode,
              100.0 * s.press, 100.0 * s.pick_place, 100.0 * s.average, s.trials_per_family);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mtop: move-then-operate dual-expert policy toolkit"};
  app.require_subcommand(1);
  Common c;

  auto* gen = app.add_subcommand("gen-data", "generate scripted demonstrations");
  auto* label = app.add_subcommand("label", "segment demonstrations into move/operate labels");
  auto* train = app.add_subcommand("train", "train a DualExpert or Monolithic policy");
  auto* eval = app.add_subcommand("eval", "closed-loop success rates for one routing mode");
  auto* ablate = app.add_subcommand("ablate", "Original/Random/Reversal routing ablation");
  auto* report = app.add_subcommand("report", "markdown summary and loss plot");
  for (auto* sub : {gen, label, train, eval, ablate, report}) {
    add_common(sub, c);
    add_key_flag(sub, c, "--seed", "seed", "base seed");
    add_key_flag(sub, c, "-o,--out-dir", "out_dir", "artifact directory");
  }
  add_key_flag(gen, c, "--tasks", "num_tasks", "number of tasks");
  add_key_flag(gen, c, "--demos", "demos_per_task", "demonstrations per task");
  add_key_flag(label, c, "--backend", "segmenter",
               "VelocityHeuristic, FaultInjectingMock or ReplayFile");
  add_key_flag(label, c, "--budget", "refine_budget", "backend calls per trajectory");
  add_key_flag(label, c, "--replay-file", "replay_file", "schedule JSON for ReplayFile");
  add_key_flag(train, c, "--arch", "arch", "DualExpert or Monolithic");
  add_key_flag(train, c, "--steps", "train_steps", "optimizer steps");
  add_key_flag(train, c, "--stop-at", "stop_at", "stop early at this step");
  add_key_flag(train, c, "--resume", "resume_from", "continue from a training checkpoint");
  for (auto* sub : {train, eval, ablate})
    add_key_flag(sub, c, "--checkpoint", "checkpoint_path", "model checkpoint path");
  add_key_flag(eval, c, "--mode", "routing_mode", "Original, Random or Reversal");
  for (auto* sub : {eval, ablate}) {
    add_key_flag(sub, c, "--trials", "eval_trials", "rollouts per task family");
    add_key_flag(sub, c, "--threads", "threads", "worker threads (0 = all cores)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(MTOP_ERR_USAGE);
  }

  mtop_config* cfg = nullptr;
  mtop_status st = build_config(c, &cfg);
  if (st != MTOP_OK) {
    const int rc = st == MTOP_ERR_USAGE && *mtop_last_error() == '\0' ? 1 : fail(st);
    mtop_config_destroy(cfg);
    return rc;
  }

  if (gen->parsed()) {
    st = mtop_gen_data(cfg);
    if (st == MTOP_OK) std::printf("dataset written under %s\n", get(cfg, "out_dir").c_str());
  } else if (label->parsed()) {
    mtop_label_summary s{};
    st = mtop_label(cfg, &s);
    std::printf("labelled %zu/%zu trajectories (%zu failed, %zu backend calls), frame agreement %.4f\n",
                s.labelled, s.trajectories, s.failed, s.backend_calls, s.agreement);
  } else if (train->parsed()) {
    mtop_train_summary s{};
    st = mtop_train(cfg, &s);
    if (st == MTOP_OK) {
      std::printf("trained steps %llu..%llu on %zu examples\n",
                  static_cast<unsigned long long>(s.start_step),
                  static_cast<unsigned long long>(s.end_step), s.examples);
      std::printf("action loss %.5f -> %.5f, router loss %.5f, total %.5f\n", s.first_action_loss,
                  s.last_action_loss, s.last_router_loss, s.last_total_loss);
      if (!std::isnan(s.heldout_router_accuracy))
        std::printf("held-out router accuracy %.4f\n", s.heldout_router_accuracy);
    }
  } else if (eval->parsed()) {
    mtop_eval_summary s{};
    st = mtop_eval(cfg, &s);
    if (st == MTOP_OK) print_eval(get(cfg, "routing_mode").c_str(), s);
  } else if (ablate->parsed()) {
    mtop_eval_summary s[3]{};
    st = mtop_ablate(cfg, s);
    if (st == MTOP_OK) {
      print_eval("Original", s[0]);
      print_eval("Random", s[1]);
      print_eval("Reversal", s[2]);
    }
  } else if (report->parsed()) {
    st = mtop_report(cfg);
    if (st == MTOP_OK) std::printf("report written\n");
  }
  mtop_config_destroy(cfg);
  return st == MTOP_OK ? 0 : fail(st);
}
