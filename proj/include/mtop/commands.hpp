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

#ifndef MTOP_COMMANDS_HPP_
#define MTOP_COMMANDS_HPP_

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mtop/dataset.hpp"
#include "mtop/phaselabel.hpp"
#include "mtop/policy.hpp"
#include "mtop/run_config.hpp"
#include "mtop/simenv.hpp"

namespace mtop {

// ---- label ----

struct RefineLogRow {
  std::size_t traj = 0;
  int round = 0;
  std::vector<ValidationError> errors;  // empty on the accepted round
};

struct LabelSummary {
  std::size_t trajectories = 0;
  std::size_t labelled = 0;
  std::size_t failed = 0;
  std::size_t backend_calls = 0;
  double agreement = 0.0;  // fraction of labelled frames matching ground truth
};

std::unique_ptr<SegmenterBackend> make_segmenter(const RunConfig& cfg, const Trajectory& traj);

LabelSummary label_dataset(const Dataset& ds, const RunConfig& cfg, LabelSet& labels,
                           std::vector<RefineLogRow>& log);

// Writes labels and the refinement log; RefinementError afterwards if any
// trajectory exhausted its budget (summary, when given, is filled first).
LabelSummary cmd_label(const RunConfig& cfg, LabelSummary* summary = nullptr);

// ---- train ----

struct LossRow {
  std::uint64_t step = 0;
  LossReport loss;
};

struct TrainState {
  PolicyModel model;
  PolicyOptimizer opt;
  Rng rng;
  std::uint64_t step = 0;  // optimizer steps taken
};

TrainState init_training(const RunConfig& cfg, const Normalizer& norm);
double learning_rate_at(const RunConfig& cfg, std::uint64_t step);

// Advances st to `until` steps. Dual models draw Move and Operate examples
// with equal probability when balanced_sampling is set; monolithic models
// sample frames uniformly.
void run_training(TrainState& st, const TrainingSet& ts, const RunConfig& cfg, std::uint64_t until,
                  std::vector<LossRow>* log);

void save_training_checkpoint(const TrainState& st, const RunConfig& cfg, const std::string& path);
TrainState load_training_checkpoint(const std::string& path);
PolicyModel load_model_checkpoint(const std::string& path);

// Router accuracy on ground-truth labels of fresh noisy demonstrations.
double heldout_router_accuracy(const PolicyModel& model, const RunConfig& cfg);

struct TrainSummary {
  std::uint64_t start_step = 0;
  std::uint64_t end_step = 0;
  std::size_t examples = 0;
  LossReport first;
  LossReport last;
  double heldout_router_accuracy = 0.0;  // NaN for monolithic models
};

TrainSummary cmd_train(const RunConfig& cfg);

// ---- eval / ablate ----

struct FamilyResult {
  InteractionKind family = InteractionKind::kPress;
  std::size_t successes = 0;
  std::size_t trials = 0;
};

using PolicyFactory = std::function<std::unique_ptr<ChunkPolicy>()>;

// eval_trials fresh tasks per family, one rollout each, fanned out over
// worker threads; results are reduced in (family, trial) order.
std::vector<FamilyResult> evaluate_policy(const PolicyFactory& make, const RunConfig& cfg);
std::vector<FamilyResult> evaluate_model(const PolicyModel& model, const RunConfig& cfg,
                                         RoutingMode mode);

struct ReportRow {
  std::string experiment;
  std::string family;  // "Press", "PickPlace" or "Average"
  std::string mode;
  double success_rate = 0.0;
  std::size_t successes = 0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  double wall_clock = -1.0;  // seconds; negative when not recorded
};

std::string experiment_id(const RunConfig& cfg);
std::vector<ReportRow> report_rows(const RunConfig& cfg, RoutingMode mode,
                                   const std::vector<FamilyResult>& results, bool with_average,
                                   double wall_clock);
std::string report_csv(const RunConfig& cfg, const std::vector<ReportRow>& rows);
std::vector<ReportRow> read_report_csv(const std::string& path);

std::vector<ReportRow> cmd_eval(const RunConfig& cfg);
// Original, Random, Reversal on one checkpoint; writes the CSV and a
// markdown table with families as rows and modes as columns.
std::vector<ReportRow> cmd_ablate(const RunConfig& cfg);
std::string ablation_markdown(const std::vector<ReportRow>& rows);

// ---- report ----

std::string loss_csv(const RunConfig& cfg, const std::vector<LossRow>& rows);
std::vector<LossRow> read_loss_csv(const std::string& path);
std::string loss_svg(const std::vector<LossRow>& rows);
// Markdown summary of whichever of the loss, eval and ablation artifacts
// exist; returns the report path.
std::string cmd_report(const RunConfig& cfg);

}  // namespace mtop

#endif  // MTOP_COMMANDS_HPP_
