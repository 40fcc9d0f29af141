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

#ifndef MTOP_SIMENV_HPP_
#define MTOP_SIMENV_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "mtop/phaselabel.hpp"
#include "mtop/policy.hpp"

namespace mtop {

// Planar workspace [-1, 1]^2 with an end effector, one object and a gripper
// counted in integer ticks.

using Point = std::array<double, 2>;

enum class InteractionKind : std::uint8_t { kPress = 0, kPickPlace = 1 };
inline constexpr std::size_t kNumFamilies = 2;

const char* interaction_name(InteractionKind k);  // "Press" / "PickPlace"
std::optional<InteractionKind> parse_interaction(std::string_view s);

struct EnvParams {
  double vicinity_radius = 0.15;
  double success_tolerance = 0.02;
  double move_step = 0.08;
  double operate_step = 0.01;
  double grip_tick = 0.01;   // gripper action units per tick
  int grip_depth_ticks = 3;  // press depth / grasp closure
  int max_ticks = 100;
  double approach_tolerance = 0.005;
  int demo_step_cap = 600;

  void check() const;  // ConfigError on inconsistent values
};

struct TaskSpec {
  std::array<double, 3> start_pose{};  // x, y, gripper
  Point object_pose{};
  Point goal_pose{};  // equals object_pose for Press
  double vicinity_radius = 0.15;
  double success_tolerance = 0.02;
  InteractionKind interaction_kind = InteractionKind::kPress;
  Vec task_code;  // one-hot of interaction_kind
  std::uint64_t seed = 0;  // stream seed the task was drawn from; set by the caller

  Point home() const { return {start_pose[0], start_pose[1]}; }
};

struct EnvState {
  Point ee{};
  Point object{};
  int ticks = 0;
  bool attached = false;
  bool done = false;

  friend bool operator==(const EnvState&, const EnvState&) = default;
};

double distance(const Point& a, const Point& b);

// Start in the left band, object in the right band, goal back in the left
// band; start-object and object-goal distances (and goal-home for PickPlace)
// are at least 3 vicinity radii. kind == nullopt draws the family uniformly.
TaskSpec gen_task(Rng& rng, const EnvParams& env, std::optional<InteractionKind> kind = std::nullopt);

EnvState initial_state(const TaskSpec& task);

// Pure transition. Action row = (dx, dy, gripper delta); the gripper delta is
// rounded to whole ticks. Reaching full depth outside tolerance springs the
// gripper back open.
EnvState step(const TaskSpec& task, const EnvState& s, std::span<const double> action,
              const EnvParams& env);

inline constexpr std::size_t kActionDim = 3;
inline constexpr std::size_t kInstructionDim = 2;
inline constexpr std::size_t kObservationDim = 25;
inline constexpr std::size_t kProprioDim = 3;

// Observation: object, goal and home poses, effector offsets to each, their
// lengths, tanh-squashed offsets at two scales, then attached and done flags.
// Observation noise (std obs_noise) is drawn only when obs_noise > 0.
ContextFrame make_context(const TaskSpec& task, const EnvState& s, const EnvParams& env,
                          double obs_noise = 0.0, Rng* rng = nullptr);

struct DemoStep {
  Vec action;
  PhaseLabel label;
};

// Next demonstrator action, or nullopt once the task is finished and the
// effector is back home. noise scales the step magnitude by (1 + noise * n1)
// and rotates the direction by 0.5 * noise * n2 radians.
std::optional<DemoStep> expert_action(const TaskSpec& task, const EnvState& s,
                                      const EnvParams& env, double noise, Rng& rng);

struct TrajectoryFrame {
  ContextFrame context;
  Vec action;
  PhaseLabel label;
  double ee_speed;  // |ee displacement| produced by this step
};

struct Trajectory {
  TaskSpec task;
  std::vector<TrajectoryFrame> frames;

  TrajectoryFeatures features() const;
  std::vector<PhaseLabel> labels() const;
};

// DomainError if the demonstrator does not finish within demo_step_cap steps.
Trajectory scripted_demo(const TaskSpec& task, Rng& rng, double noise, const EnvParams& env);

// Schedule whose phases are the runs of ground-truth labels, paired
// (Move, Operate) into subtasks.
Schedule schedule_from_labels(std::span<const PhaseLabel> labels);

struct ChunkDecision {
  Matrix actions;                    // rows executed in order
  std::optional<PhaseLabel> phase;  // expert used, if the policy routes
};

class ChunkPolicy {
 public:
  virtual ~ChunkPolicy() = default;
  virtual ChunkDecision act(const TaskSpec& task, const EnvState& s, const ContextFrame& c,
                            Rng& rng) = 0;
};

class LearnedPolicy final : public ChunkPolicy {
 public:
  LearnedPolicy(const PolicyModel& model, OdeConfig ode, RoutingMode mode)
      : model_(model), ode_(ode), mode_(mode) {}
  ChunkDecision act(const TaskSpec& task, const EnvState& s, const ContextFrame& c,
                    Rng& rng) override;

 private:
  const PolicyModel& model_;
  OdeConfig ode_;
  RoutingMode mode_;
};

// Plays the noiseless demonstrator forward for `horizon` steps.
class ScriptedPolicy final : public ChunkPolicy {
 public:
  ScriptedPolicy(EnvParams env, std::size_t horizon) : env_(env), horizon_(horizon) {}
  ChunkDecision act(const TaskSpec& task, const EnvState& s, const ContextFrame& c,
                    Rng& rng) override;

 private:
  EnvParams env_;
  std::size_t horizon_;
};

struct RolloutConfig {
  int max_steps = 240;
  std::size_t exec_steps = 4;  // chunk rows executed per policy call
  double obs_noise = 0.0;
};

struct RolloutOutcome {
  EnvState final_state;
  bool interaction_achieved = false;
  int steps_used = 0;
  // Expert used for each executed step; empty for unrouted policies.
  std::vector<PhaseLabel> routing;
};

RolloutOutcome rollout(ChunkPolicy& policy, const TaskSpec& task, Rng& rng,
                       const RolloutConfig& cfg, const EnvParams& env);
RolloutOutcome rollout(const PolicyModel& model, const TaskSpec& task, Rng& rng,
                       const RolloutConfig& cfg, const EnvParams& env, const OdeConfig& ode,
                       RoutingMode mode);

// Interaction achieved and the relevant pose (effector for Press, object for
// PickPlace) within success_tolerance of its target; the ball is closed.
bool success(const RolloutOutcome& outcome, const TaskSpec& task);

}  // namespace mtop

#endif  // MTOP_SIMENV_HPP_
