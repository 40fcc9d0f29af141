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

#include <algorithm>
#include <fstream>

#include "mtop/error.hpp"
#include "mtop/phaselabel.hpp"

namespace mtop {
namespace {

struct Run {
  PhaseLabel type;
  FrameIndex start;
  FrameIndex end;
  FrameIndex length() const { return end - start + 1; }
};

void coalesce(std::vector<Run>& runs) {
  std::vector<Run> out;
  for (const Run& r : runs) {
    if (!out.empty() && out.back().type == r.type)
      out.back().end = r.end;
    else
      out.push_back(r);
  }
  runs = std::move(out);
}

}  // namespace

Vec smooth_speeds(std::span<const double> speeds, std::size_t window) {
  if (window == 0) throw ConfigError("smoothing window must be at least 1");
  const std::size_t T = speeds.size();
  struct Stats {
    double mean;
    double var;
  };
  auto stats = [&](std::size_t lo, std::size_t hi) {  // [lo, hi)
    const double n = static_cast<double>(hi - lo);
    double m = 0.0;
    for (std::size_t k = lo; k < hi; ++k) m += speeds[k];
    m /= n;
    double v = 0.0;
    for (std::size_t k = lo; k < hi; ++k) v += (speeds[k] - m) * (speeds[k] - m);
    return Stats{m, v / n};
  };
  Vec out(T);
  for (std::size_t t = 0; t < T; ++t) {
    const Stats trail = stats(t + 1 >= window ? t + 1 - window : 0, t + 1);
    const Stats lead = stats(t, std::min(T, t + window));
    // Edge-preserving: average over whichever side is flatter, so a step in
    // speed stays on the frame where it happens.
    if (trail.var < lead.var)
      out[t] = trail.mean;
    else if (lead.var < trail.var)
      out[t] = lead.mean;
    else
      out[t] = std::min(trail.mean, lead.mean);
  }
  return out;
}

Schedule segment_velocity_heuristic(const TrajectoryFeatures& traj,
                                    const VelocityHeuristicConfig& cfg) {
  if (traj.speeds.empty()) throw ContractError("segment_velocity_heuristic: empty trajectory");
  const Vec smooth = smooth_speeds(traj.speeds, cfg.window);
  std::vector<Run> runs;
  for (std::size_t t = 0; t < smooth.size(); ++t) {
    const PhaseLabel y = smooth[t] >= cfg.speed_threshold ? PhaseLabel::kMove : PhaseLabel::kOperate;
    const auto ft = static_cast<FrameIndex>(t);
    if (!runs.empty() && runs.back().type == y)
      runs.back().end = ft;
    else
      runs.push_back({y, ft, ft});
  }
  const auto w = static_cast<FrameIndex>(cfg.window);
  while (runs.size() > 1) {
    const auto it = std::find_if(runs.begin(), runs.end(),
                                 [w](const Run& r) { return r.length() < w; });
    if (it == runs.end()) break;
    const std::size_t i = static_cast<std::size_t>(it - runs.begin());
    if (i > 0)
      runs[i - 1].end = runs[i].end;
    else
      runs[1].start = runs[0].start;
    runs.erase(runs.begin() + static_cast<std::ptrdiff_t>(i));
    coalesce(runs);
  }

  Schedule s;
  s.total_frames = traj.speeds.size();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    Subtask st;
    st.index = static_cast<std::int64_t>(s.subtasks.size()) + 1;
    st.phases.push_back({runs[i].type, runs[i].start, runs[i].end});
    if (runs[i].type == PhaseLabel::kMove && i + 1 < runs.size()) {
      ++i;
      st.phases.push_back({runs[i].type, runs[i].start, runs[i].end});
      st.description = "move then operate";
    } else {
      st.description = runs[i].type == PhaseLabel::kMove ? "move" : "operate";
    }
    s.subtasks.push_back(std::move(st));
  }
  return s;
}

Schedule VelocityHeuristic::segment(const TrajectoryFeatures& traj, const Schedule* prior,
                                    std::span<const ValidationError> errors) {
  if (prior == nullptr) {
    threshold_ = cfg_.speed_threshold;
  } else if (std::any_of(errors.begin(), errors.end(), [](const ValidationError& e) {
               return e.code == ErrorCode::kNoMovePhase;
             })) {
    threshold_ *= 0.5;
  }
  VelocityHeuristicConfig cfg = cfg_;
  cfg.speed_threshold = threshold_;
  return segment_velocity_heuristic(traj, cfg);
}

Schedule inject_fault(const Schedule& valid, ErrorCode code) {
  if (!is_valid(valid) || valid.total_frames < 2)
    throw ContractError("inject_fault: needs a valid schedule of at least 2 frames");
  Schedule s = valid;
  auto two_phase = [&s]() -> Subtask& {
    for (Subtask& st : s.subtasks)
      if (st.phases.size() == 2) return st;
    for (Subtask& st : s.subtasks) {
      PhaseSpan& p = st.phases[0];
      if (p.end_frame_idx > p.start_frame_idx) {
        st.phases.push_back({opposite(p.phase_type), p.end_frame_idx, p.end_frame_idx});
        p.end_frame_idx -= 1;
        return st;
      }
    }
    throw ContractError("inject_fault: no subtask can be split");
  };
  switch (code) {
    case ErrorCode::kGap:
      s.total_frames += 1;
      break;
    case ErrorCode::kOverlap: {
      Subtask copy = s.subtasks.back();
      copy.index = static_cast<std::int64_t>(s.subtasks.size()) + 1;
      s.subtasks.push_back(std::move(copy));
      break;
    }
    case ErrorCode::kOutOfRange:
      s.total_frames -= 1;
      break;
    case ErrorCode::kDepthExceeded: {
      Subtask& st = s.subtasks.back();
      const PhaseSpan last = st.phases.back();
      st.phases.push_back({opposite(last.phase_type), last.end_frame_idx, last.end_frame_idx});
      break;
    }
    case ErrorCode::kDuplicatePhaseType: {
      Subtask& st = two_phase();
      st.phases[1].phase_type = st.phases[0].phase_type;
      break;
    }
    case ErrorCode::kNonChronological: {
      Subtask& st = two_phase();
      std::swap(st.phases[0], st.phases[1]);
      break;
    }
    case ErrorCode::kNoMovePhase:
      for (Subtask& st : s.subtasks)
        for (PhaseSpan& p : st.phases) p.phase_type = PhaseLabel::kOperate;
      break;
    case ErrorCode::kEmptySchedule:
      s.subtasks.clear();
      break;
    case ErrorCode::kMalformedRecord:
      s.subtasks.front().index = 0;
      break;
  }
  return s;
}

FaultInjectingMock::FaultInjectingMock(std::vector<Schedule> script) : script_(std::move(script)) {
  if (script_.empty()) throw ContractError("FaultInjectingMock: empty script");
}

FaultInjectingMock FaultInjectingMock::with_faults(const Schedule& valid,
                                                   std::vector<ErrorCode> faults) {
  std::vector<Schedule> script;
  for (ErrorCode c : faults) script.push_back(inject_fault(valid, c));
  script.push_back(valid);
  return FaultInjectingMock(std::move(script));
}

FaultInjectingMock FaultInjectingMock::never_repairs(const Schedule& valid, ErrorCode code) {
  return FaultInjectingMock({inject_fault(valid, code)});
}

Schedule FaultInjectingMock::segment(const TrajectoryFeatures&, const Schedule*,
                                     std::span<const ValidationError> errors) {
  const std::size_t k = std::min(received_.size(), script_.size() - 1);
  received_.emplace_back(errors.begin(), errors.end());
  return script_[k];
}

ReplayFile::ReplayFile(std::string path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open schedule file " + path);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw IoError("schedule file " + path + " is not valid JSON");
  if (j.is_array() && !j.empty() && j.front().is_array()) {
    for (auto& r : j) rounds_.push_back(std::move(r));
  } else {
    rounds_.push_back(std::move(j));
  }
}

Schedule ReplayFile::segment(const TrajectoryFeatures& traj, const Schedule*,
                             std::span<const ValidationError>) {
  const std::size_t k = std::min(next_, rounds_.size() - 1);
  ++next_;
  return schedule_from_json(rounds_[k], traj.speeds.size());
}

RefineOutcome refine_loop(SegmenterBackend& backend, const TrajectoryFeatures& traj, int budget) {
  if (budget < 1) throw ConfigError("refinement budget must be at least 1");
  RefineOutcome out;
  std::optional<Schedule> prior;
  std::vector<ValidationError> errors;
  for (int r = 1; r <= budget; ++r) {
    Schedule s = backend.segment(traj, prior ? &*prior : nullptr, errors);
    errors = validate(s);
    out.rounds_used = r;
    out.history.push_back(errors);
    if (errors.empty()) {
      out.success = true;
      out.schedule = std::move(s);
      return out;
    }
    prior = std::move(s);
  }
  out.schedule = std::move(*prior);
  return out;
}

}  // namespace mtop
