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

#include <sstream>

#include "mtop/error.hpp"
#include "mtop/phaselabel.hpp"

namespace mtop {

using nlohmann::json;

const char* primary_arm_name(PrimaryArm a) {
  switch (a) {
    case PrimaryArm::kLeft: return "left";
    case PrimaryArm::kRight: return "right";
    case PrimaryArm::kBoth: return "both";
    case PrimaryArm::kUnknown: return "unknown";
  }
  return "unknown";
}

std::optional<PrimaryArm> parse_primary_arm(std::string_view s) {
  if (s == "left") return PrimaryArm::kLeft;
  if (s == "right") return PrimaryArm::kRight;
  if (s == "both") return PrimaryArm::kBoth;
  if (s == "unknown") return PrimaryArm::kUnknown;
  return std::nullopt;
}

namespace {

constexpr const char* kCodeNames[kNumErrorCodes] = {
    "Gap",           "Overlap",       "OutOfRange",
    "DepthExceeded", "DuplicatePhaseType", "NonChronological",
    "NoMovePhase",   "EmptySchedule", "MalformedRecord"};

}  // namespace

const char* error_code_name(ErrorCode c) { return kCodeNames[static_cast<std::size_t>(c)]; }

std::optional<ErrorCode> parse_error_code(std::string_view s) {
  for (std::size_t i = 0; i < kNumErrorCodes; ++i)
    if (s == kCodeNames[i]) return static_cast<ErrorCode>(i);
  return std::nullopt;
}

std::vector<PhaseLabel> assign_labels(const Schedule& s) {
  const auto errors = validate(s);
  if (!errors.empty())
    throw ContractError("assign_labels: schedule is invalid: " + format_errors(errors));
  std::vector<PhaseLabel> y(s.total_frames);
  for (const Subtask& st : s.subtasks)
    for (const PhaseSpan& p : st.phases)
      for (FrameIndex t = p.start_frame_idx; t <= p.end_frame_idx; ++t)
        y[static_cast<std::size_t>(t)] = p.phase_type;
  return y;
}

json schedule_to_json(const Schedule& s) {
  json arr = json::array();
  for (const Subtask& st : s.subtasks) {
    json phases = json::array();
    for (const PhaseSpan& p : st.phases)
      phases.push_back({{"phase_type", phase_name(p.phase_type)},
                        {"start_frame_idx", p.start_frame_idx},
                        {"end_frame_idx", p.end_frame_idx}});
    arr.push_back({{"subtask", st.index},
                   {"subtask_description", st.description},
                   {"primary_arm", primary_arm_name(st.primary_arm)},
                   {"phases", std::move(phases)}});
  }
  return arr;
}

namespace {

std::optional<std::string> decode_subtask(const json& j, Subtask& out) {
  if (!j.is_object()) return "subtask record is not an object";
  const auto idx = j.find("subtask");
  if (idx == j.end() || !idx->is_number_integer()) return "missing integer \"subtask\"";
  out.index = idx->get<std::int64_t>();
  if (const auto d = j.find("subtask_description"); d != j.end()) {
    if (!d->is_string()) return "\"subtask_description\" is not a string";
    out.description = d->get<std::string>();
  }
  if (const auto a = j.find("primary_arm"); a != j.end()) {
    if (!a->is_string()) return "\"primary_arm\" is not a string";
    const auto arm = parse_primary_arm(a->get<std::string>());
    if (!arm) return "unknown primary_arm \"" + a->get<std::string>() + "\"";
    out.primary_arm = *arm;
  }
  const auto ph = j.find("phases");
  if (ph == j.end() || !ph->is_array()) return "missing array \"phases\"";
  for (const json& p : *ph) {
    if (!p.is_object()) return "phase record is not an object";
    const auto t = p.find("phase_type");
    const auto s = p.find("start_frame_idx");
    const auto e = p.find("end_frame_idx");
    if (t == p.end() || !t->is_string()) return "phase without string \"phase_type\"";
    const auto type = parse_phase(t->get<std::string>());
    if (!type) return "unknown phase_type \"" + t->get<std::string>() + "\"";
    if (s == p.end() || !s->is_number_integer() || e == p.end() || !e->is_number_integer())
      return "phase without integer frame indices";
    out.phases.push_back({*type, s->get<FrameIndex>(), e->get<FrameIndex>()});
  }
  return std::nullopt;
}

}  // namespace

Schedule schedule_from_json(const json& j, std::size_t total_frames) {
  Schedule s;
  s.total_frames = total_frames;
  if (!j.is_array()) {
    s.malformed.push_back("schedule is not a JSON array");
    return s;
  }
  for (std::size_t i = 0; i < j.size(); ++i) {
    Subtask st;
    if (auto err = decode_subtask(j[i], st)) {
      s.malformed.push_back("record " + std::to_string(i) + ": " + *err);
      continue;
    }
    s.subtasks.push_back(std::move(st));
  }
  return s;
}

std::string format_errors(std::span<const ValidationError> errors) {
  std::ostringstream os;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (i) os << "; ";
    os << error_code_name(errors[i].code);
    if (errors[i].subtask_index) os << "[subtask " << *errors[i].subtask_index << "]";
    os << ": " << errors[i].message;
  }
  return os.str();
}

}  // namespace mtop
