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

#include "mtop/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <exception>
#include <limits>
#include <sstream>
#include <thread>

#include "mtop/checkpoint.hpp"
#include "mtop/error.hpp"

namespace mtop {
namespace {

std::vector<ErrorCode> parse_fault_list(const std::string& text) {
  std::vector<ErrorCode> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto c = parse_error_code(item);
    if (!c) throw ConfigError("mock_faults: unknown error code '" + item + "'");
    out.push_back(*c);
  }
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::unique_ptr<SegmenterBackend> make_segmenter(const RunConfig& cfg, const Trajectory& traj) {
  const std::string& name = cfg.get("segmenter");
  if (name == "VelocityHeuristic") return std::make_unique<VelocityHeuristic>(cfg.heuristic_config());
  if (name == "ReplayFile") {
    if (cfg.get("replay_file").empty()) throw ConfigError("ReplayFile needs replay_file");
    return std::make_unique<ReplayFile>(cfg.get("replay_file"));
  }
  // The mock perturbs the ground-truth schedule.
  const Schedule truth = schedule_from_labels(traj.labels());
  const auto faults = parse_fault_list(cfg.get("mock_faults"));
  if (!cfg.flag("mock_repairs"))
    return std::make_unique<FaultInjectingMock>(FaultInjectingMock::never_repairs(
        truth, faults.empty() ? ErrorCode::kNoMovePhase : faults.front()));
  return std::make_unique<FaultInjectingMock>(FaultInjectingMock::with_faults(truth, faults));
}

LabelSummary label_dataset(const Dataset& ds, const RunConfig& cfg, LabelSet& labels,
                           std::vector<RefineLogRow>& log) {
  const int budget = static_cast<int>(cfg.count("refine_budget"));
  LabelSummary sum;
  sum.trajectories = ds.trajectories.size();
  labels.assign(ds.trajectories.size(), std::nullopt);
  std::size_t agree = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
    const Trajectory& tr = ds.trajectories[i];
    auto backend = make_segmenter(cfg, tr);
    const RefineOutcome r = refine_loop(*backend, tr.features(), budget);
    sum.backend_calls += static_cast<std::size_t>(r.rounds_used);
    for (std::size_t k = 0; k < r.history.size(); ++k)
      log.push_back({i, static_cast<int>(k) + 1, r.history[k]});
    if (!r.success) {
      ++sum.failed;
      continue;
    }
    ++sum.labelled;
    labels[i] = assign_labels(r.schedule);
    for (std::size_t k = 0; k < tr.frames.size(); ++k) {
      ++total;
      agree += (*labels[i])[k] == tr.frames[k].label ? 1 : 0;
    }
  }
  sum.agreement = total ? static_cast<double>(agree) / static_cast<double>(total) : 0.0;
  return sum;
}

LabelSummary cmd_label(const RunConfig& cfg, LabelSummary* summary) {
  const Dataset ds = read_dataset(cfg.path("dataset_path"));
  LabelSet labels;
  std::vector<RefineLogRow> log;
  const LabelSummary sum = label_dataset(ds, cfg, labels, log);
  write_labels(labels, cfg, cfg.path("labels_path"));
  std::string text = config_comment_block(cfg, "mtop-refine-log/" + std::to_string(kArtifactVersion));
  text += "# segmenter=" + cfg.get("segmenter") + " labelled=" + std::to_string(sum.labelled) +
          " failed=" + std::to_string(sum.failed) + " agreement=" + format_real(sum.agreement) + "\n";
  text += "traj,round,valid,num_errors,errors\n";
  for (const auto& row : log)
    text += std::to_string(row.traj) + "," + std::to_string(row.round) + "," +
            (row.errors.empty() ? "1" : "0") + "," + std::to_string(row.errors.size()) + "," +
            csv_escape(format_errors(row.errors)) + "\n";
  write_text_file(cfg.path("refine_log_path"), text);
  if (summary) *summary = sum;
  if (sum.failed > 0)
    throw RefinementError(std::to_string(sum.failed) + " of " + std::to_string(sum.trajectories) +
                          " trajectories failed refinement within budget " +
                          cfg.get("refine_budget") + " (see " + cfg.path("refine_log_path") + ")");
  return sum;
}

TrainState init_training(const RunConfig& cfg, const Normalizer& norm) {
  const std::uint64_t seed = cfg.count("seed");
  Rng init(mix_seed(seed, kTagInit));
  TrainState st{PolicyModel::create(cfg.policy_dims(), init), {}, Rng(mix_seed(seed, kTagTrain)), 0};
  st.model.normalizer = norm;
  st.model.lambda = cfg.real("lambda");
  st.model.mask_eps = cfg.real("mask_eps");
  AdamHyper h;
  h.lr = cfg.real("learning_rate");
  h.beta1 = cfg.real("adam_beta1");
  h.beta2 = cfg.real("adam_beta2");
  h.eps = cfg.real("adam_eps");
  st.opt = PolicyOptimizer::create(st.model, h);
  return st;
}

double learning_rate_at(const RunConfig& cfg, std::uint64_t step) {
  const double lr = cfg.real("learning_rate");
  if (cfg.get("lr_schedule") == "constant") return lr;
  const double total = static_cast<double>(cfg.count("train_steps"));
  return lr * 0.5 * (1.0 + std::cos(M_PI * static_cast<double>(step) / total));
}

void run_training(TrainState& st, const TrainingSet& ts, const RunConfig& cfg, std::uint64_t until,
                  std::vector<LossRow>* log) {
  if (ts.examples.empty()) throw ContractError("training set is empty");
  const std::size_t B = cfg.count("batch_size");
  const std::uint64_t every = cfg.count("log_every");
  const bool balanced = st.model.routed() && cfg.flag("balanced_sampling") &&
                        !ts.move_idx.empty() && !ts.operate_idx.empty();
  std::vector<TrainExample> batch(B);
  while (st.step < until) {
    for (std::size_t b = 0; b < B; ++b) {
      std::size_t idx = 0;
      if (balanced) {
        const auto& pool = st.rng.uniform() < 0.5 ? ts.move_idx : ts.operate_idx;
        idx = pool[st.rng.uniform_index(pool.size())];
      } else {
        idx = st.rng.uniform_index(ts.examples.size());
      }
      batch[b] = ts.examples[idx];
    }
    const LossReport loss =
        train_step(st.model, batch, st.rng, st.opt, learning_rate_at(cfg, st.step));
    if (log && (st.step % every == 0 || st.step + 1 == until)) log->push_back({st.step, loss});
    ++st.step;
  }
}

void save_training_checkpoint(const TrainState& st, const RunConfig& cfg, const std::string& path) {
  Checkpoint ck;
  ck.put_text("format", "mtop-checkpoint/" + std::to_string(kArtifactVersion));
  ck.put_text("config", cfg.serialize());
  ck.put_text("config_digest", cfg.digest());
  save_policy(st.model, ck);
  save_optimizer(st.opt, ck);
  const Rng::State rs = st.rng.state();
  std::uint64_t spare_bits = 0;
  std::memcpy(&spare_bits, &rs.spare, sizeof spare_bits);
  ck.put_u64s("train.rng", {rs.words[0], rs.words[1], rs.words[2], rs.words[3],
                            rs.has_spare ? 1u : 0u, spare_bits});
  ck.put_u64s("train.step", {st.step});
  const auto bytes = ck.serialize();
  write_text_file(path, std::string(bytes.begin(), bytes.end()));
}

TrainState load_training_checkpoint(const std::string& path) {
  const Checkpoint ck = Checkpoint::load(path);
  TrainState st{load_policy(ck), {}, Rng(0), 0};
  st.opt = load_optimizer(ck, st.model);
  const auto& r = ck.u64s("train.rng");
  if (r.size() != 6) throw IoError(path + ": malformed train.rng");
  Rng::State rs;
  rs.words = {r[0], r[1], r[2], r[3]};
  rs.has_spare = r[4] != 0;
  std::memcpy(&rs.spare, &r[5], sizeof rs.spare);
  st.rng.set_state(rs);
  const auto& s = ck.u64s("train.step");
  if (s.size() != 1) throw IoError(path + ": malformed train.step");
  st.step = s[0];
  return st;
}

PolicyModel load_model_checkpoint(const std::string& path) {
  return load_policy(Checkpoint::load(path));
}

double heldout_router_accuracy(const PolicyModel& model, const RunConfig& cfg) {
  if (!model.routed()) return std::numeric_limits<double>::quiet_NaN();
  const EnvParams env = cfg.env_params();
  const std::uint64_t seed = cfg.count("seed");
  std::size_t hit = 0;
  std::size_t total = 0;
  for (std::uint64_t j = 0; j < cfg.count("heldout_tasks"); ++j) {
    Rng task_rng(mix_seed(seed, kTagHeldout, j));
    const TaskSpec task = gen_task(task_rng, env, static_cast<InteractionKind>(j % kNumFamilies));
    Rng demo_rng(mix_seed(seed, kTagHeldout, j, 1));
    const Trajectory tr = scripted_demo(task, demo_rng, cfg.real("demo_noise"), env);
    for (const auto& f : tr.frames) {
      const Vec pooled = pool_features(encode_context(model, f.context), f.context.token_mask);
      hit += greedy_select(route(model, pooled)) == f.label ? 1 : 0;
      ++total;
    }
  }
  return static_cast<double>(hit) / static_cast<double>(total);
}

TrainSummary cmd_train(const RunConfig& cfg) {
  const Dataset ds = read_dataset(cfg.path("dataset_path"));
  const bool dual = cfg.get("arch") == "DualExpert";
  LabelSet labels;
  if (!dual || cfg.get("train_labels") == "truth") {
    // Monolithic training ignores labels; ground truth only fills the field.
    labels = truth_labels(ds);
  } else {
    labels = read_labels(cfg.path("labels_path"), ds);
  }
  TrainState st = cfg.get("resume_from").empty() ? init_training(cfg, ds.normalizer)
                                                 : load_training_checkpoint(cfg.get("resume_from"));
  if (st.model.dims.arch != cfg.policy_dims().arch)
    throw ContractError("resume checkpoint architecture does not match config");
  const TrainingSet ts = build_training_set(ds, labels, st.model.dims, st.model.normalizer);
  const std::uint64_t total = cfg.count("train_steps");
  const std::uint64_t stop = cfg.count("stop_at") == 0 ? total : std::min(total, cfg.count("stop_at"));
  TrainSummary sum;
  sum.start_step = st.step;
  sum.examples = ts.examples.size();
  std::vector<LossRow> log;
  run_training(st, ts, cfg, stop, &log);
  sum.end_step = st.step;
  if (!log.empty()) {
    sum.first = log.front().loss;
    sum.last = log.back().loss;
  }
  sum.heldout_router_accuracy = heldout_router_accuracy(st.model, cfg);
  save_training_checkpoint(st, cfg, cfg.path("checkpoint_path"));
  write_text_file(cfg.path("loss_path"), loss_csv(cfg, log));
  return sum;
}

std::vector<FamilyResult> evaluate_policy(const PolicyFactory& make, const RunConfig& cfg) {
  const std::size_t trials = cfg.count("eval_trials");
  if (trials == 0) throw UsageError("eval_trials must be positive");
  const EnvParams env = cfg.env_params();
  const RolloutConfig rc = cfg.rollout_config();
  const std::uint64_t seed = cfg.count("seed");
  const std::size_t jobs = kNumFamilies * trials;
  std::vector<char> ok(jobs, 0);
  std::vector<std::exception_ptr> errors(jobs);
  std::size_t workers = cfg.count("threads");
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, jobs);
  auto work = [&](std::size_t w) {
    auto policy = make();
    for (std::size_t j = w; j < jobs; j += workers) {
      const std::uint64_t fam = j / trials;
      const std::uint64_t trial = j % trials;
      try {
        Rng task_rng(mix_seed(seed, kTagEvalTask, fam, trial));
        TaskSpec task = gen_task(task_rng, env, static_cast<InteractionKind>(fam));
        task.seed = mix_seed(seed, kTagEvalTask, fam, trial);
        Rng rng(mix_seed(seed, kTagEvalRollout, fam, trial));
        ok[j] = success(rollout(*policy, task, rng, rc, env), task) ? 1 : 0;
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<FamilyResult> out;
  for (std::size_t f = 0; f < kNumFamilies; ++f) {
    FamilyResult r;
    r.family = static_cast<InteractionKind>(f);
    r.trials = trials;
    for (std::size_t t = 0; t < trials; ++t) r.successes += ok[f * trials + t] ? 1 : 0;
    out.push_back(r);
  }
  return out;
}

std::vector<FamilyResult> evaluate_model(const PolicyModel& model, const RunConfig& cfg,
                                         RoutingMode mode) {
  const OdeConfig ode = cfg.ode_config();
  if (model.dims.horizon < cfg.count("exec_steps"))
    throw ConfigError("exec_steps exceeds the checkpoint's horizon");
  return evaluate_policy([&] { return std::make_unique<LearnedPolicy>(model, ode, mode); }, cfg);
}

std::vector<ReportRow> cmd_eval(const RunConfig& cfg) {
  if (cfg.count("eval_trials") == 0) throw UsageError("eval_trials must be positive");
  const PolicyModel model = load_model_checkpoint(cfg.path("checkpoint_path"));
  const RoutingMode mode = *parse_routing_mode(cfg.get("routing_mode"));
  const auto t0 = std::chrono::steady_clock::now();
  const auto results = evaluate_model(model, cfg, mode);
  const auto rows = report_rows(cfg, mode, results, true, seconds_since(t0));
  write_text_file(cfg.path("eval_path"), report_csv(cfg, rows));
  return rows;
}

std::vector<ReportRow> cmd_ablate(const RunConfig& cfg) {
  if (cfg.count("eval_trials") == 0) throw UsageError("eval_trials must be positive");
  const PolicyModel model = load_model_checkpoint(cfg.path("checkpoint_path"));
  if (!model.routed()) throw ContractError("ablation needs a DualExpert checkpoint");
  std::vector<ReportRow> rows;
  for (RoutingMode mode : {RoutingMode::kOriginal, RoutingMode::kRandom, RoutingMode::kReversal}) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto results = evaluate_model(model, cfg, mode);
    const auto part = report_rows(cfg, mode, results, true, seconds_since(t0));
    rows.insert(rows.end(), part.begin(), part.end());
  }
  const std::string path = cfg.path("ablate_path");
  write_text_file(path, report_csv(cfg, rows));
  std::string md = config_comment_block(cfg, "mtop-ablation/" + std::to_string(kArtifactVersion));
  // Markdown has no comment syntax; keep the block inside an HTML comment.
  md = "<!--\n" + md + "-->\n\n" + ablation_markdown(rows);
  const auto dot = path.rfind('.');
  write_text_file((dot == std::string::npos ? path : path.substr(0, dot)) + ".md", md);
  return rows;
}

}  // namespace mtop
