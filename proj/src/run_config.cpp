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

#include "mtop/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mtop/error.hpp"

namespace mtop {
namespace {

using T = RunConfig::Type;

const std::vector<RunConfig::Key> kSchema = {
    {"seed", T::kCount, "0", {}, "base seed for every random stream"},
    {"experiment", T::kText, "", {}, "experiment id in reports (default <arch>-s<seed>)"},
    {"out_dir", T::kText, "out", {}, "directory for artifacts"},
    {"dataset_path", T::kText, "", {}, "dataset file (default out_dir/dataset.jsonl)"},
    {"labels_path", T::kText, "", {}, "label file (default out_dir/labels.csv)"},
    {"refine_log_path", T::kText, "", {}, "refinement log (default out_dir/refine_log.csv)"},
    {"checkpoint_path", T::kText, "", {}, "model checkpoint (default out_dir/model.ckpt)"},
    {"loss_path", T::kText, "", {}, "loss log (default out_dir/loss.csv)"},
    {"eval_path", T::kText, "", {}, "eval report (default out_dir/eval.csv)"},
    {"ablate_path", T::kText, "", {}, "ablation report (default out_dir/ablate.csv)"},
    {"report_path", T::kText, "", {}, "markdown report (default out_dir/report.md)"},
    {"resume_from", T::kText, "", {}, "training checkpoint to continue from"},
    {"num_tasks", T::kPositive, "200", {}, "tasks in the dataset (families alternate)"},
    {"demos_per_task", T::kPositive, "1", {}, "demonstrations per task"},
    {"demo_noise", T::kNonNegReal, "0.1", {}, "demonstrator noise scale"},
    {"obs_noise", T::kNonNegReal, "0", {}, "observation noise std during rollouts"},
    {"vicinity_radius", T::kPosReal, "0.15", {}, "move/operate handoff radius"},
    {"success_tolerance", T::kPosReal, "0.02", {}, "success radius"},
    {"horizon", T::kPositive, "8", {}, "action chunk length H"},
    {"exec_steps", T::kPositive, "4", {}, "chunk rows executed per inference"},
    {"token_dim", T::kPositive, "64", {}, "encoder feature width D"},
    {"encoder_hidden", T::kPositive, "128", {}, "encoder hidden width"},
    {"router_hidden", T::kPositive, "32", {}, "router hidden width"},
    {"expert_hidden", T::kPositive, "128", {}, "expert hidden width"},
    {"expert_layers", T::kPositive, "2", {}, "expert hidden layers"},
    {"arch", T::kChoice, "DualExpert", {"DualExpert", "Monolithic"}, "policy architecture"},
    {"lambda", T::kNonNegReal, "1", {}, "router loss weight"},
    {"mask_eps", T::kPosReal, "1e-08", {}, "action loss denominator epsilon"},
    {"ode_steps", T::kPositive, "10", {}, "Euler steps per chunk"},
    {"train_steps", T::kPositive, "30000", {}, "optimizer steps (sets the lr schedule length)"},
    {"stop_at", T::kCount, "0", {}, "stop after this many steps (0 = train_steps)"},
    {"batch_size", T::kPositive, "64", {}, "examples per step"},
    {"learning_rate", T::kPosReal, "0.003", {}, "peak Adam learning rate"},
    {"lr_schedule", T::kChoice, "cosine", {"cosine", "constant"}, "learning-rate schedule"},
    {"adam_beta1", T::kUnitReal, "0.9", {}, "Adam beta1"},
    {"adam_beta2", T::kUnitReal, "0.999", {}, "Adam beta2"},
    {"adam_eps", T::kPosReal, "1e-08", {}, "Adam epsilon"},
    {"balanced_sampling", T::kBool, "true", {}, "equal move/operate sampling (dual only)"},
    {"train_labels", T::kChoice, "auto", {"auto", "truth"}, "auto: label file, truth: dataset"},
    {"log_every", T::kPositive, "1", {}, "loss log stride"},
    {"heldout_tasks", T::kPositive, "20", {}, "fresh tasks for held-out router accuracy"},
    {"segmenter", T::kChoice, "VelocityHeuristic",
     {"VelocityHeuristic", "FaultInjectingMock", "ReplayFile"}, "labelling backend"},
    {"speed_threshold", T::kPosReal, "0.025", {}, "heuristic speed threshold"},
    {"smoothing_window", T::kPositive, "3", {}, "heuristic window"},
    {"refine_budget", T::kPositive, "3", {}, "backend calls per trajectory"},
    {"replay_file", T::kText, "", {}, "schedule JSON for ReplayFile"},
    {"mock_faults", T::kText, "", {}, "comma-separated error codes injected by the mock"},
    {"mock_repairs", T::kBool, "true", {}, "mock returns a valid schedule after its faults"},
    {"routing_mode", T::kChoice, "Original", {"Original", "Random", "Reversal"}, "eval override"},
    {"eval_trials", T::kCount, "100", {}, "rollouts per task family"},
    {"eval_max_steps", T::kPositive, "240", {}, "step cap per rollout"},
    {"threads", T::kCount, "0", {}, "eval workers (0 = hardware concurrency)"},
    {"timing", T::kBool, "false", {}, "record wall-clock seconds (breaks byte identity)"},
    {"svg", T::kBool, "true", {}, "write loss plot next to the report"},
};

const std::map<std::string, std::string> kDefaultFiles = {
    {"dataset_path", "dataset.jsonl"}, {"labels_path", "labels.csv"},
    {"refine_log_path", "refine_log.csv"}, {"checkpoint_path", "model.ckpt"},
    {"loss_path", "loss.csv"}, {"eval_path", "eval.csv"},
    {"ablate_path", "ablate.csv"}, {"report_path", "report.md"}};

const RunConfig::Key& find_key(const std::string& name) {
  for (const auto& k : kSchema)
    if (k.name == name) return k;
  throw ConfigError("unknown config key '" + name + "'");
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_u64(const std::string& v, std::uint64_t& out) {
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  return ec == std::errc() && p == v.data() + v.size() && !v.empty();
}

bool parse_real(const std::string& v, double& out) {
  if (v.empty()) return false;
  char* end = nullptr;
  out = std::strtod(v.c_str(), &end);
  return end == v.c_str() + v.size() && std::isfinite(out);
}

void check_value(const RunConfig::Key& k, const std::string& v) {
  auto bad = [&](const char* why) {
    throw ConfigError("config key '" + k.name + "': '" + v + "' " + why);
  };
  std::uint64_t u = 0;
  double x = 0.0;
  switch (k.type) {
    case T::kCount:
      if (!parse_u64(v, u)) bad("is not a non-negative integer");
      break;
    case T::kPositive:
      if (!parse_u64(v, u) || u == 0) bad("is not a positive integer");
      break;
    case T::kReal:
      if (!parse_real(v, x)) bad("is not a finite number");
      break;
    case T::kNonNegReal:
      if (!parse_real(v, x) || x < 0.0) bad("is not a non-negative number");
      break;
    case T::kPosReal:
      if (!parse_real(v, x) || x <= 0.0) bad("is not a positive number");
      break;
    case T::kUnitReal:
      if (!parse_real(v, x) || x < 0.0 || x >= 1.0) bad("is not in [0, 1)");
      break;
    case T::kBool:
      if (v != "true" && v != "false") bad("is not true/false");
      break;
    case T::kText:
      if (v.find('\n') != std::string::npos) bad("contains a newline");
      break;
    case T::kChoice:
      if (std::find(k.choices.begin(), k.choices.end(), v) == k.choices.end())
        bad("is not one of the allowed values");
      break;
  }
}

}  // namespace

RunConfig::RunConfig() {
  for (const auto& k : kSchema) values_[k.name] = k.default_value;
}

const std::vector<RunConfig::Key>& RunConfig::schema() { return kSchema; }

void RunConfig::set(const std::string& key, const std::string& value) {
  const Key& k = find_key(key);
  const std::string v = trim(value);
  check_value(k, v);
  values_[key] = v;
}

void RunConfig::merge_text(std::string_view text, const std::string& origin) {
  std::istringstream in{std::string(text)};
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(n) + ": expected key = value");
    set(trim(std::string_view(t).substr(0, eq)), t.substr(eq + 1));
  }
}

void RunConfig::merge_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  merge_text(ss.str(), path);
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

std::uint64_t RunConfig::count(const std::string& key) const {
  std::uint64_t u = 0;
  if (!parse_u64(get(key), u)) throw ConfigError("config key '" + key + "' is not an integer");
  return u;
}

double RunConfig::real(const std::string& key) const {
  double x = 0.0;
  if (!parse_real(get(key), x)) throw ConfigError("config key '" + key + "' is not a number");
  return x;
}

bool RunConfig::flag(const std::string& key) const { return get(key) == "true"; }

std::string RunConfig::serialize() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

std::string RunConfig::digest() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : serialize()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string RunConfig::path(const std::string& key) const {
  const std::string& v = get(key);
  if (!v.empty()) return v;
  const auto it = kDefaultFiles.find(key);
  if (it == kDefaultFiles.end()) throw ConfigError("config key '" + key + "' has no default file");
  return get("out_dir") + "/" + it->second;
}

PolicyDims RunConfig::policy_dims() const {
  PolicyDims d;
  d.instruction = kInstructionDim;
  d.observation = kObservationDim;
  d.proprio = kProprioDim;
  d.action_dim = kActionDim;
  d.horizon = count("horizon");
  d.token_dim = count("token_dim");
  d.encoder_hidden = count("encoder_hidden");
  d.router_hidden = count("router_hidden");
  d.expert_hidden = count("expert_hidden");
  d.expert_layers = count("expert_layers");
  d.arch = *parse_architecture(get("arch"));
  return d;
}

EnvParams RunConfig::env_params() const {
  EnvParams e;
  e.vicinity_radius = real("vicinity_radius");
  e.success_tolerance = real("success_tolerance");
  e.check();
  return e;
}

OdeConfig RunConfig::ode_config() const {
  OdeConfig o;
  o.num_steps = static_cast<int>(count("ode_steps"));
  return o;
}

RolloutConfig RunConfig::rollout_config() const {
  RolloutConfig r;
  r.max_steps = static_cast<int>(count("eval_max_steps"));
  r.exec_steps = count("exec_steps");
  r.obs_noise = real("obs_noise");
  if (r.exec_steps > count("horizon")) throw ConfigError("exec_steps exceeds horizon");
  return r;
}

VelocityHeuristicConfig RunConfig::heuristic_config() const {
  VelocityHeuristicConfig h;
  h.speed_threshold = real("speed_threshold");
  h.window = count("smoothing_window");
  return h;
}

std::string config_comment_block(const RunConfig& cfg, std::string_view format) {
  std::string out = "# format=" + std::string(format) + "\n";
  out += "# config_digest=" + cfg.digest() + "\n";
  for (const auto& [k, v] : cfg.values()) out += "# " + k + "=" + v + "\n";
  return out;
}

}  // namespace mtop
