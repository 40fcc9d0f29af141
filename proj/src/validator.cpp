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
#include <map>
#include <sstream>
#include <tuple>
#include <utility>

#include "mtop/phaselabel.hpp"

namespace mtop {
namespace {

// Keyed by (has index, index, code) so iteration yields the reporting order.
using Key = std::tuple<bool, std::int64_t, std::uint8_t>;

class Collector {
 public:
  void add(ErrorCode code, std::optional<std::int64_t> idx, std::string msg) {
    const Key k{idx.has_value(), idx.value_or(0), static_cast<std::uint8_t>(code)};
    if (auto it = errors_.find(k); it != errors_.end()) {
      it->second.message += "; " + msg;
      return;
    }
    errors_.emplace(k, ValidationError{code, idx, std::move(msg)});
  }
  std::vector<ValidationError> take() {
    std::vector<ValidationError> out;
    for (auto& [k, e] : errors_) out.push_back(std::move(e));
    return out;
  }

 private:
  std::map<Key, ValidationError> errors_;
};

std::string range(FrameIndex a, FrameIndex b) {
  std::ostringstream os;
  os << "[" << a << ", " << b << "]";
  return os.str();
}

}  // namespace

std::vector<ValidationError> validate(const Schedule& s) {
  Collector c;
  const auto T = static_cast<FrameIndex>(s.total_frames);

  for (const std::string& m : s.malformed) c.add(ErrorCode::kMalformedRecord, std::nullopt, m);
  if (s.subtasks.empty()) c.add(ErrorCode::kEmptySchedule, std::nullopt, "schedule has no subtasks");
  if (T == 0) c.add(ErrorCode::kEmptySchedule, std::nullopt, "trajectory has no frames");

  bool any_move = false;
  // Span of each subtask with at least one phase: (position, first start, last end).
  std::vector<std::tuple<std::int64_t, FrameIndex, FrameIndex>> spans;

  for (std::size_t i = 0; i < s.subtasks.size(); ++i) {
    const Subtask& st = s.subtasks[i];
    const auto pos = static_cast<std::int64_t>(i) + 1;
    if (st.index != pos)
      c.add(ErrorCode::kMalformedRecord, pos,
            "subtask number " + std::to_string(st.index) + " at position " + std::to_string(pos));
    if (st.phases.empty()) {
      c.add(ErrorCode::kMalformedRecord, pos, "subtask has no phases");
      continue;
    }
    if (st.phases.size() > 2)
      c.add(ErrorCode::kDepthExceeded, pos,
            std::to_string(st.phases.size()) + " phases, at most 2 allowed");
    for (std::size_t k = 0; k < st.phases.size(); ++k) {
      const PhaseSpan& p = st.phases[k];
      any_move = any_move || p.phase_type == PhaseLabel::kMove;
      if (p.start_frame_idx > p.end_frame_idx)
        c.add(ErrorCode::kMalformedRecord, pos,
              std::string(phase_name(p.phase_type)) + " phase has start after end " +
                  range(p.start_frame_idx, p.end_frame_idx));
      if (p.start_frame_idx < 0 || p.end_frame_idx > T - 1 || p.end_frame_idx < 0 ||
          p.start_frame_idx > T - 1)
        c.add(ErrorCode::kOutOfRange, pos,
              std::string(phase_name(p.phase_type)) + " phase " +
                  range(p.start_frame_idx, p.end_frame_idx) + " outside " + range(0, T - 1));
      for (std::size_t q = 0; q < k; ++q)
        if (st.phases[q].phase_type == p.phase_type)
          c.add(ErrorCode::kDuplicatePhaseType, pos,
                std::string("phase_type ") + phase_name(p.phase_type) + " repeated");
      if (k > 0 && p.start_frame_idx != st.phases[k - 1].end_frame_idx + 1)
        c.add(ErrorCode::kNonChronological, pos,
              "phase " + std::to_string(k + 1) + " starts at " +
                  std::to_string(p.start_frame_idx) + ", expected " +
                  std::to_string(st.phases[k - 1].end_frame_idx + 1));
    }
    spans.emplace_back(pos, st.phases.front().start_frame_idx, st.phases.back().end_frame_idx);
  }

  if (!spans.empty() && T > 0) {
    const auto& [p0, s0, e0] = spans.front();
    if (s0 > 0)
      c.add(ErrorCode::kGap, p0, "first subtask starts at " + std::to_string(s0) + ", expected 0");
    for (std::size_t i = 1; i < spans.size(); ++i) {
      const auto& [pp, ps, pe] = spans[i - 1];
      const auto& [p, st, en] = spans[i];
      if (st > pe + 1)
        c.add(ErrorCode::kGap, p,
              "frames " + range(pe + 1, st - 1) + " skipped after subtask " + std::to_string(pp));
      else if (st <= pe)
        c.add(ErrorCode::kOverlap, p,
              "starts at " + std::to_string(st) + " inside subtask " + std::to_string(pp) +
                  " ending at " + std::to_string(pe));
    }
    const auto& [pl, sl, el] = spans.back();
    if (el < T - 1)
      c.add(ErrorCode::kGap, pl,
            "last subtask ends at " + std::to_string(el) + ", expected " + std::to_string(T - 1));
  }

  if (!any_move) c.add(ErrorCode::kNoMovePhase, std::nullopt, "schedule needs at least one move phase");
  return c.take();
}

}  // namespace mtop
