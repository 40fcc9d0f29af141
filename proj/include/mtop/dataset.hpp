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

#ifndef MTOP_DATASET_HPP_
#define MTOP_DATASET_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mtop/policy.hpp"
#include "mtop/run_config.hpp"
#include "mtop/simenv.hpp"

namespace mtop {

inline constexpr int kDatasetVersion = 1;
inline constexpr int kArtifactVersion = 1;

// Stream tags for mix_seed; every random stream in a run derives from
// (seed, tag, ...).
enum SeedTag : std::uint64_t {
  kTagTask = 1,
  kTagDemo = 2,
  kTagInit = 3,
  kTagTrain = 4,
  kTagEvalTask = 5,
  kTagEvalRollout = 6,
  kTagHeldout = 7,
};

struct Dataset {
  std::vector<Trajectory> trajectories;
  std::vector<std::uint64_t> task_ids;  // per trajectory
  Normalizer normalizer;                // over every action row
  std::string config_text;              // config the dataset was generated with

  std::size_t num_frames() const;
};

// Per-dimension mean/std over all demonstration action rows.
Normalizer fit_action_normalizer(const std::vector<Trajectory>& trajectories);

// num_tasks tasks with alternating families, demos_per_task demonstrations each.
Dataset generate_dataset(const RunConfig& cfg);

// Line-delimited JSON: a header line (format, version, config, counts,
// normalizer), then one "task" line per trajectory followed by its frames.
void write_dataset(const Dataset& ds, const RunConfig& cfg, const std::string& path);
Dataset read_dataset(const std::string& path);

using LabelSet = std::vector<std::optional<std::vector<PhaseLabel>>>;  // per trajectory

LabelSet truth_labels(const Dataset& ds);
void write_labels(const LabelSet& labels, const RunConfig& cfg, const std::string& path);
// ContractError if the file does not match the dataset's trajectory lengths.
LabelSet read_labels(const std::string& path, const Dataset& ds);

struct TrainingSet {
  std::vector<ContextFrame> contexts;
  std::vector<TrainExample> examples;  // contexts referenced by pointer
  std::vector<std::size_t> move_idx;
  std::vector<std::size_t> operate_idx;
};

// One example per labelled frame: the next H action rows, normalized, zero
// padded past the trajectory end with mask 0. Unlabelled trajectories are
// skipped.
TrainingSet build_training_set(const Dataset& ds, const LabelSet& labels, const PolicyDims& dims,
                               const Normalizer& norm);

std::string csv_escape(const std::string& s);
// Non-comment lines of a CSV file split on commas (quoted fields honoured).
std::vector<std::vector<std::string>> read_csv(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);
std::string format_real(double x);  // shortest round-trip form

}  // namespace mtop

#endif  // MTOP_DATASET_HPP_
