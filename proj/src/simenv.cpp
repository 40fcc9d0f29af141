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

#include "mtop/simenv.hpp"

#include <algorithm>
#include <cmath>

#include "mtop/error.hpp"

namespace mtop {
namespace {

Point sub(const Point& a, const Point& b) { return {a[0] - b[0], a[1] - b[1]}; }

// Step of magnitude `mag` toward target; with stop, never past it.
Vec move_toward(const Point& from, const Point& target, double mag, bool stop, double noise,
                Rng& rng) {
  const Point d = sub(target, from);
  const double len = std::hypot(d[0], d[1]);
  double m = mag;
  Point dir{d[0] / len, d[1] / len};
  if (noise > 0.0) {
    m = mag * (1.0 + noise * rng.normal());
    const double th = 0.5 * noise * rng.normal();
    const double c = std::cos(th);
    const double s = std::sin(th);
    dir = {c * dir[0] - s * dir[1], s * dir[0] + c * dir[1]};
  }
  if (stop) m = std::min(m, len);
  return {m * dir[0], m * dir[1], 0.0};
}

Vec grip(int ticks, const EnvParams& env) {
  return {0.0, 0.0, ticks * env.grip_tick};
}

}  // namespace

const char* interaction_name(InteractionKind k) {
  return k == InteractionKind::kPress ? "Press" : "PickPlace";
}

std::optional<InteractionKind> parse_interaction(std::string_view s) {
  if (s == "Press") return InteractionKind::kPress;
  if (s == "PickPlace") return InteractionKind::kPickPlace;
  return std::nullopt;
}

void EnvParams::check() const {
  if (!(success_tolerance > 0.0 && success_tolerance < vicinity_radius))
    throw ConfigError("success_tolerance must lie in (0, vicinity_radius)");
  if (!(move_step > 0.0 && operate_step > 0.0 && grip_tick > 0.0))
    throw ConfigError("step sizes must be positive");
  if (grip_depth_ticks < 1 || max_ticks < grip_depth_ticks)
    throw ConfigError("gripper tick limits are inconsistent");
  if (!(approach_tolerance > 0.0 && approach_tolerance < success_tolerance))
    throw ConfigError("approach_tolerance must lie in (0, success_tolerance)");
  if (demo_step_cap < 1) throw ConfigError("demo_step_cap must be positive");
}

double distance(const Point& a, const Point& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

TaskSpec gen_task(Rng& rng, const EnvParams& env, std::optional<InteractionKind> kind) {
  TaskSpec t;
  t.interaction_kind = kind ? *kind : static_cast<InteractionKind>(rng.uniform_index(kNumFamilies));
  t.vicinity_radius = env.vicinity_radius;
  t.success_tolerance = env.success_tolerance;
  const double sep = 3.0 * env.vicinity_radius;
  const bool pick = t.interaction_kind == InteractionKind::kPickPlace;
  for (;;) {
    const Point start{rng.uniform(-0.9, -0.6), rng.uniform(-0.9, 0.9)};
    const Point obj{rng.uniform(0.6, 0.9), rng.uniform(-0.9, 0.9)};
    const Point goal{rng.uniform(-0.9, -0.6), rng.uniform(-0.9, 0.9)};
    if (distance(start, obj) < sep) continue;
    if (pick && (distance(obj, goal) < sep || distance(goal, start) < sep)) continue;
    t.start_pose = {start[0], start[1], 0.0};
    t.object_pose = obj;
    t.goal_pose = pick ? goal : obj;
    break;
  }
  t.task_code.assign(kInstructionDim, 0.0);
  t.task_code[static_cast<std::size_t>(t.interaction_kind)] = 1.0;
  return t;
}

EnvState initial_state(const TaskSpec& task) {
  EnvState s;
  s.ee = task.home();
  s.object = task.object_pose;
  return s;
}

EnvState step(const TaskSpec& task, const EnvState& prev, std::span<const double> a,
              const EnvParams& env) {
  if (a.size() != kActionDim) throw DimensionError("step: action row must have 3 entries");
  EnvState s = prev;
  s.ee = {std::clamp(s.ee[0] + a[0], -1.0, 1.0), std::clamp(s.ee[1] + a[1], -1.0, 1.0)};
  const double dticks = std::nearbyint(a[2] / env.grip_tick);
  const double t = std::clamp(static_cast<double>(s.ticks) + dticks, 0.0,
                              static_cast<double>(env.max_ticks));
  s.ticks = static_cast<int>(t);
  const double tol = task.success_tolerance;
  if (task.interaction_kind == InteractionKind::kPress) {
    if (!s.done && s.ticks >= env.grip_depth_ticks) {
      if (distance(s.ee, task.object_pose) <= tol)
        s.done = true;
      else
        s.ticks = 0;
    }
  } else {
    if (!s.attached && !s.done && s.ticks >= env.grip_depth_ticks) {
      if (distance(s.ee, s.object) <= tol)
        s.attached = true;
      else
        s.ticks = 0;
    }
    if (s.attached) s.object = s.ee;
    if (s.attached && s.ticks <= 0) {
      s.attached = false;
      s.done = true;
    }
  }
  return s;
}

ContextFrame make_context(const TaskSpec& task, const EnvState& s, const EnvParams& env,
                          double obs_noise, Rng* rng) {
  ContextFrame c;
  c.instruction = task.task_code;
  const Point home = task.home();
  const Point dobj = sub(s.object, s.ee);
  const Point dgoal = sub(task.goal_pose, s.ee);
  const Point dhome = sub(home, s.ee);
  Vec& o = c.observation;
  o.reserve(kObservationDim);
  for (const Point* p : {&s.object, &task.goal_pose, &home, &dobj, &dgoal, &dhome})
    o.insert(o.end(), p->begin(), p->end());
  for (const Point* p : {&dobj, &dgoal, &dhome}) o.push_back(std::hypot((*p)[0], (*p)[1]));
  for (double scale : {0.05, 0.01}) {
    for (double v : dobj) o.push_back(std::tanh(v / scale));
    for (double v : dgoal) o.push_back(std::tanh(v / scale));
  }
  o.push_back(s.attached ? 1.0 : 0.0);
  o.push_back(s.done ? 1.0 : 0.0);
  if (obs_noise > 0.0) {
    if (rng == nullptr) throw ContractError("make_context: observation noise needs an rng");
    for (double& v : o) v += obs_noise * rng->normal();
  }
  c.proprio = {s.ee[0], s.ee[1],
               static_cast<double>(s.ticks) / static_cast<double>(env.grip_depth_ticks)};
  return c;
}

std::optional<DemoStep> expert_action(const TaskSpec& task, const EnvState& s,
                                      const EnvParams& env, double noise, Rng& rng) {
  const double R = env.vicinity_radius;
  const double close = env.approach_tolerance;
  const int depth = env.grip_depth_ticks;
  auto approach = [&](const Point& target, bool open) -> std::optional<DemoStep> {
    const double d = distance(target, s.ee);
    if (open && d > R) return DemoStep{move_toward(s.ee, target, env.move_step, false, noise, rng),
                                       PhaseLabel::kMove};
    if (d > close && open)
      return DemoStep{move_toward(s.ee, target, env.operate_step, true, noise, rng),
                      PhaseLabel::kOperate};
    return std::nullopt;
  };
  auto go_home = [&]() -> std::optional<DemoStep> {
    if (distance(task.home(), s.ee) > env.move_step)
      return DemoStep{move_toward(s.ee, task.home(), env.move_step, false, noise, rng),
                      PhaseLabel::kMove};
    return std::nullopt;
  };

  if (task.interaction_kind == InteractionKind::kPress) {
    if (!s.done) {
      if (auto a = approach(task.object_pose, s.ticks == 0)) return a;
      return DemoStep{grip(1, env), PhaseLabel::kOperate};
    }
    if (s.ticks > 0) return DemoStep{grip(-1, env), PhaseLabel::kOperate};
    return go_home();
  }
  if (!s.attached && !s.done) {
    if (auto a = approach(s.object, s.ticks == 0)) return a;
    return DemoStep{grip(1, env), PhaseLabel::kOperate};
  }
  if (s.attached) {
    // The carried object rides on the effector.
    if (auto a = approach(task.goal_pose, s.ticks >= depth)) return a;
    return DemoStep{grip(-1, env), PhaseLabel::kOperate};
  }
  return go_home();
}

TrajectoryFeatures Trajectory::features() const {
  TrajectoryFeatures f;
  f.speeds.reserve(frames.size());
  for (const auto& fr : frames) f.speeds.push_back(fr.ee_speed);
  return f;
}

std::vector<PhaseLabel> Trajectory::labels() const {
  std::vector<PhaseLabel> y;
  y.reserve(frames.size());
  for (const auto& fr : frames) y.push_back(fr.label);
  return y;
}

Trajectory scripted_demo(const TaskSpec& task, Rng& rng, double noise, const EnvParams& env) {
  Trajectory tr;
  tr.task = task;
  EnvState s = initial_state(task);
  for (int k = 0; k < env.demo_step_cap; ++k) {
    auto a = expert_action(task, s, env, noise, rng);
    if (!a) {
      if (tr.frames.empty()) throw DomainError("demonstration is empty");
      return tr;
    }
    const EnvState next = step(task, s, a->action, env);
    tr.frames.push_back({make_context(task, s, env), a->action, a->label, distance(s.ee, next.ee)});
    s = next;
  }
  throw DomainError("demonstration did not finish within " + std::to_string(env.demo_step_cap) +
                    " steps");
}

Schedule schedule_from_labels(std::span<const PhaseLabel> labels) {
  Schedule s;
  s.total_frames = labels.size();
  std::vector<PhaseSpan> runs;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    const auto ft = static_cast<FrameIndex>(t);
    if (!runs.empty() && runs.back().phase_type == labels[t])
      runs.back().end_frame_idx = ft;
    else
      runs.push_back({labels[t], ft, ft});
  }
  for (std::size_t i = 0; i < runs.size(); ++i) {
    Subtask st;
    st.index = static_cast<std::int64_t>(s.subtasks.size()) + 1;
    st.phases.push_back(runs[i]);
    if (runs[i].phase_type == PhaseLabel::kMove && i + 1 < runs.size())
      st.phases.push_back(runs[++i]);
    s.subtasks.push_back(std::move(st));
  }
  return s;
}

ChunkDecision LearnedPolicy::act(const TaskSpec&, const EnvState&, const ContextFrame& c, Rng& rng) {
  InferResult r = infer_action(model_, c, rng, ode_, mode_);
  ChunkDecision d;
  d.actions = std::move(r.chunk.actions);
  if (r.routed) d.phase = r.phase;
  return d;
}

ChunkDecision ScriptedPolicy::act(const TaskSpec& task, const EnvState& s0, const ContextFrame&,
                                  Rng& rng) {
  ChunkDecision d;
  d.actions = Matrix(horizon_, kActionDim);
  EnvState s = s0;
  for (std::size_t h = 0; h < horizon_; ++h) {
    const auto a = expert_action(task, s, env_, 0.0, rng);
    if (!a) break;
    std::copy(a->action.begin(), a->action.end(), d.actions.row(h).begin());
    s = step(task, s, a->action, env_);
  }
  return d;
}

RolloutOutcome rollout(ChunkPolicy& policy, const TaskSpec& task, Rng& rng,
                       const RolloutConfig& cfg, const EnvParams& env) {
  if (cfg.max_steps < 1) throw ConfigError("max_steps must be at least 1");
  if (cfg.exec_steps < 1) throw ConfigError("exec_steps must be at least 1");
  RolloutOutcome out;
  EnvState s = initial_state(task);
  while (out.steps_used < cfg.max_steps && !s.done) {
    const ContextFrame c = make_context(task, s, env, cfg.obs_noise, &rng);
    const ChunkDecision d = policy.act(task, s, c, rng);
    if (!d.actions.all_finite()) throw NumericError("policy produced a non-finite action");
    if (d.actions.cols() != kActionDim) throw DimensionError("policy chunk must have 3 columns");
    const std::size_t n = std::min(cfg.exec_steps, d.actions.rows());
    if (n == 0) throw ContractError("policy returned an empty chunk");
    for (std::size_t k = 0; k < n && out.steps_used < cfg.max_steps && !s.done; ++k) {
      s = step(task, s, d.actions.row(k), env);
      ++out.steps_used;
      if (d.phase) out.routing.push_back(*d.phase);
    }
  }
  out.final_state = s;
  out.interaction_achieved = s.done;
  return out;
}

RolloutOutcome rollout(const PolicyModel& model, const TaskSpec& task, Rng& rng,
                       const RolloutConfig& cfg, const EnvParams& env, const OdeConfig& ode,
                       RoutingMode mode) {
  LearnedPolicy p(model, ode, mode);
  return rollout(p, task, rng, cfg, env);
}

bool success(const RolloutOutcome& outcome, const TaskSpec& task) {
  if (!outcome.interaction_achieved) return false;
  const Point& pose = task.interaction_kind == InteractionKind::kPress ? outcome.final_state.ee
                                                                       : outcome.final_state.object;
  const Point& target =
      task.interaction_kind == InteractionKind::kPress ? task.object_pose : task.goal_pose;
  return distance(pose, target) <= task.success_tolerance;
}

}  // namespace mtop
