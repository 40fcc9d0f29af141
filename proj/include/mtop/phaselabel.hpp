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

#ifndef MTOP_PHASELABEL_HPP_
#define MTOP_PHASELABEL_HPP_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtop/numcore.hpp"
#include "mtop/phase.hpp"

namespace mtop {

using FrameIndex = std::int64_t;

struct PhaseSpan {
  PhaseLabel phase_type = PhaseLabel::kMove;
  FrameIndex start_frame_idx = 0;
  FrameIndex end_frame_idx = 0;

  friend bool operator==(const PhaseSpan&, const PhaseSpan&) = default;
};

enum class PrimaryArm : std::uint8_t { kLeft, kRight, kBoth, kUnknown };

const char* primary_arm_name(PrimaryArm a);
std::optional<PrimaryArm> parse_primary_arm(std::string_view s);

struct Subtask {
  std::int64_t index = 1;  // 1-based ordinal
  std::string description;
  PrimaryArm primary_arm = PrimaryArm::kUnknown;
  std::vector<PhaseSpan> phases;

  friend bool operator==(const Subtask&, const Subtask&) = default;
};

struct Schedule {
  std::vector<Subtask> subtasks;
  std::size_t total_frames = 0;
  // Records that could not be decoded; each one yields a MalformedRecord.
  std::vector<std::string> malformed;

  friend bool operator==(const Schedule&, const Schedule&) = default;
};

enum class ErrorCode : std::uint8_t {
  kGap,
  kOverlap,
  kOutOfRange,
  kDepthExceeded,
  kDuplicatePhaseType,
  kNonChronological,
  kNoMovePhase,
  kEmptySchedule,
  kMalformedRecord,
};
inline constexpr std::size_t kNumErrorCodes = 9;

const char* error_code_name(ErrorCode c);
std::optional<ErrorCode> parse_error_code(std::string_view s);

struct ValidationError {
  ErrorCode code = ErrorCode::kMalformedRecord;
  std::optional<std::int64_t> subtask_index;
  std::string message;
};

// Subtask spans (first phase start to last phase end) are checked as a chain
// in listed order: the first starts at 0, each next one starts right after
// its predecessor ends (later is a Gap, earlier an Overlap, both reported on
// the later subtask), and the last ends at total_frames - 1.
//
// Every violated constraint, at most one entry per (subtask_index, code),
// ordered schedule-level first, then by subtask index, then by code. Empty
// means valid.
std::vector<ValidationError> validate(const Schedule& s);
inline bool is_valid(const Schedule& s) { return validate(s).empty(); }

// Frame-wise labels of a valid schedule. ContractError if s is invalid.
std::vector<PhaseLabel> assign_labels(const Schedule& s);

// JSON array of subtask objects: "subtask", "subtask_description",
// "primary_arm", "phases" [{"phase_type", "start_frame_idx", "end_frame_idx"}].
// Unknown keys are ignored. Undecodable records are kept in Schedule::malformed.
nlohmann::json schedule_to_json(const Schedule& s);
Schedule schedule_from_json(const nlohmann::json& j, std::size_t total_frames);

// Per-step end-effector displacement magnitudes of one trajectory.
struct TrajectoryFeatures {
  Vec speeds;
};

class SegmenterBackend {
 public:
  virtual ~SegmenterBackend() = default;
  virtual std::string name() const = 0;
  // prior is null on the first round; errors are the validator output on prior.
  virtual Schedule segment(const TrajectoryFeatures& traj, const Schedule* prior,
                           std::span<const ValidationError> errors) = 0;
};

struct VelocityHeuristicConfig {
  double speed_threshold = 0.025;  // v*
  std::size_t window = 3;          // w
};

// Smoothed speed at t is the mean over the w steps ending at t or the w steps
// starting at t, whichever has the smaller variance; ties take the smaller
// mean. Windows are clipped to the trajectory.
Vec smooth_speeds(std::span<const double> speeds, std::size_t window);

// Threshold smoothed speeds into Move/Operate runs, merge runs shorter than w
// into the preceding run (the following one for a leading run), pair
// (Move, Operate) runs into subtasks.
Schedule segment_velocity_heuristic(const TrajectoryFeatures& traj,
                                    const VelocityHeuristicConfig& cfg);

// Re-segments with a halved threshold after every NoMovePhase report.
class VelocityHeuristic final : public SegmenterBackend {
 public:
  explicit VelocityHeuristic(VelocityHeuristicConfig cfg = {}) : cfg_(cfg) {}
  std::string name() const override { return "VelocityHeuristic"; }
  Schedule segment(const TrajectoryFeatures& traj, const Schedule* prior,
                   std::span<const ValidationError> errors) override;
  double current_threshold() const { return threshold_; }

 private:
  VelocityHeuristicConfig cfg_;
  double threshold_ = 0.0;
};

// Returns a copy of s altered so that validate() reports code. s must be a
// valid schedule with total_frames >= 2.
Schedule inject_fault(const Schedule& s, ErrorCode code);

// Replays a scripted list of schedules; call k returns script[min(k, n-1)].
// Records the error lists it was handed.
class FaultInjectingMock final : public SegmenterBackend {
 public:
  explicit FaultInjectingMock(std::vector<Schedule> script);
  // faults[k] is injected into the valid schedule on call k; later calls
  // return the valid schedule unchanged.
  static FaultInjectingMock with_faults(const Schedule& valid, std::vector<ErrorCode> faults);
  // Never repairs: every call returns a schedule carrying `code`.
  static FaultInjectingMock never_repairs(const Schedule& valid, ErrorCode code);

  std::string name() const override { return "FaultInjectingMock"; }
  Schedule segment(const TrajectoryFeatures& traj, const Schedule* prior,
                   std::span<const ValidationError> errors) override;

  std::size_t calls() const { return received_.size(); }
  const std::vector<std::vector<ValidationError>>& received() const { return received_; }

 private:
  std::vector<Schedule> script_;
  std::vector<std::vector<ValidationError>> received_;
};

// Reads stored schedules from a JSON file: either one schedule array, or an
// array of schedule arrays replayed one per round (the last one repeats).
class ReplayFile final : public SegmenterBackend {
 public:
  explicit ReplayFile(std::string path);
  std::string name() const override { return "ReplayFile"; }
  Schedule segment(const TrajectoryFeatures& traj, const Schedule* prior,
                   std::span<const ValidationError> errors) override;

 private:
  std::vector<nlohmann::json> rounds_;
  std::size_t next_ = 0;
};

struct RefineOutcome {
  bool success = false;
  Schedule schedule;  // valid on success, last attempt otherwise
  int rounds_used = 0;
  // Validator output of every round, in order; empty list on the winning round.
  std::vector<std::vector<ValidationError>> history;
  const std::vector<ValidationError>& last_errors() const { return history.back(); }
};

// Calls the backend at most `budget` times, feeding each round's errors into
// the next call, and stops at the first valid schedule.
RefineOutcome refine_loop(SegmenterBackend& backend, const TrajectoryFeatures& traj,
                          int budget);

std::string format_errors(std::span<const ValidationError> errors);

}  // namespace mtop

#endif  // MTOP_PHASELABEL_HPP_
