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

#include <doctest.h>

#include <fstream>

#include "mtop/error.hpp"
#include "mtop/phaselabel.hpp"
#include "oracles/validator_oracle.hpp"
#include "test_util.hpp"

using namespace mtop;

namespace {

Subtask subtask(std::int64_t index, std::vector<PhaseSpan> phases) {
  Subtask s;
  s.index = index;
  s.phases = std::move(phases);
  return s;
}

PhaseSpan mv(FrameIndex a, FrameIndex b) { return {PhaseLabel::kMove, a, b}; }
PhaseSpan op(FrameIndex a, FrameIndex b) { return {PhaseLabel::kOperate, a, b}; }

Schedule clock_schedule() {
  Schedule s;
  s.total_frames = 121;
  s.subtasks = {subtask(1, {mv(0, 45), op(46, 120)})};
  return s;
}

std::vector<ErrorCode> codes(const std::vector<ValidationError>& e) {
  std::vector<ErrorCode> out;
  for (const auto& x : e) out.push_back(x.code);
  return out;
}

bool has(const std::vector<ValidationError>& e, ErrorCode c, std::optional<std::int64_t> idx) {
  for (const auto& x : e)
    if (x.code == c && x.subtask_index == idx) return true;
  return false;
}

TrajectoryFeatures speeds(std::vector<std::pair<int, double>> runs) {
  TrajectoryFeatures t;
  for (auto [n, v] : runs) t.speeds.insert(t.speeds.end(), static_cast<std::size_t>(n), v);
  return t;
}

}  // namespace

TEST_CASE("error code names round trip") {
  for (std::size_t i = 0; i < kNumErrorCodes; ++i) {
    const auto c = static_cast<ErrorCode>(i);
    CHECK(parse_error_code(error_code_name(c)) == c);
  }
  CHECK(std::string(error_code_name(ErrorCode::kDuplicatePhaseType)) == "DuplicatePhaseType");
  CHECK_FALSE(parse_error_code("Bogus").has_value());
}

TEST_CASE("validator examples") {
  CHECK(is_valid(clock_schedule()));

  Schedule dup = clock_schedule();
  dup.subtasks[0].phases[1].phase_type = PhaseLabel::kMove;
  CHECK(codes(validate(dup)) == std::vector<ErrorCode>{ErrorCode::kDuplicatePhaseType});

  Schedule ops = clock_schedule();
  ops.subtasks[0].phases = {op(0, 120)};
  CHECK(codes(validate(ops)) == std::vector<ErrorCode>{ErrorCode::kNoMovePhase});

  Schedule gap;
  gap.total_frames = 100;
  gap.subtasks = {subtask(1, {mv(0, 20), op(21, 50)}), subtask(2, {mv(52, 80), op(81, 99)})};
  const auto e = validate(gap);
  REQUIRE(e.size() == 1);
  CHECK(e[0].code == ErrorCode::kGap);
  CHECK(e[0].subtask_index == 2);
  CHECK(e[0].message.find("[51, 51]") != std::string::npos);
}

TEST_CASE("validator reports each code") {
  Schedule s;
  s.total_frames = 10;
  s.subtasks = {subtask(1, {mv(0, 4), op(5, 9)})};
  REQUIRE(is_valid(s));

  Schedule overlap = s;
  overlap.subtasks.push_back(subtask(2, {mv(8, 9)}));
  CHECK(has(validate(overlap), ErrorCode::kOverlap, 2));

  Schedule range = s;
  range.subtasks[0].phases[1].end_frame_idx = 10;
  CHECK(has(validate(range), ErrorCode::kOutOfRange, 1));
  range.subtasks[0].phases[0].start_frame_idx = -1;
  CHECK(has(validate(range), ErrorCode::kOutOfRange, 1));

  Schedule depth = s;
  depth.subtasks[0].phases = {mv(0, 3), op(4, 6), mv(7, 9)};
  CHECK(codes(validate(depth)) == std::vector<ErrorCode>{ErrorCode::kDepthExceeded,
                                                         ErrorCode::kDuplicatePhaseType});

  Schedule order = s;
  order.subtasks[0].phases = {op(5, 9), mv(0, 4)};
  CHECK(has(validate(order), ErrorCode::kNonChronological, 1));
  Schedule hole = s;
  hole.subtasks[0].phases = {mv(0, 3), op(5, 9)};
  CHECK(codes(validate(hole)) == std::vector<ErrorCode>{ErrorCode::kNonChronological});

  Schedule empty;
  empty.total_frames = 10;
  const auto ee = validate(empty);
  CHECK(has(ee, ErrorCode::kEmptySchedule, std::nullopt));

  Schedule bad_index = s;
  bad_index.subtasks[0].index = 2;
  CHECK(codes(validate(bad_index)) == std::vector<ErrorCode>{ErrorCode::kMalformedRecord});
  Schedule reversed = s;
  reversed.subtasks[0].phases = {mv(0, 4), op(9, 5)};
  CHECK(has(validate(reversed), ErrorCode::kMalformedRecord, 1));
  Schedule no_phase = s;
  no_phase.subtasks.push_back(subtask(2, {}));
  CHECK(has(validate(no_phase), ErrorCode::kMalformedRecord, 2));
}

TEST_CASE("validator ordering and deduplication") {
  Schedule s;
  s.total_frames = 10;
  s.malformed = {"record 2: junk", "record 3: junk"};
  s.subtasks = {subtask(1, {op(0, 2), op(3, 4), op(5, 6)}), subtask(2, {op(8, 12)})};
  const auto e = validate(s);
  std::vector<std::pair<std::optional<std::int64_t>, ErrorCode>> got;
  for (const auto& x : e) got.emplace_back(x.subtask_index, x.code);
  const std::vector<std::pair<std::optional<std::int64_t>, ErrorCode>> want{
      {std::nullopt, ErrorCode::kNoMovePhase},
      {std::nullopt, ErrorCode::kMalformedRecord},
      {1, ErrorCode::kDepthExceeded},
      {1, ErrorCode::kDuplicatePhaseType},
      {2, ErrorCode::kGap},
      {2, ErrorCode::kOutOfRange},
  };
  CHECK(got == want);
  // Both duplicate findings in subtask 1 share one entry.
  CHECK(e[3].message.find(';') != std::string::npos);
  CHECK(validate(s).size() == e.size());
  for (const auto& x : e) CHECK_FALSE(x.message.empty());
}

TEST_CASE("validator agrees with the brute-force oracle on small schedules") {
  std::size_t mismatches = 0, valid = 0;
  std::set<ErrorCode> hit;
  const std::size_t n = oracle::enumerate_schedules(4, [&](const Schedule& s) {
    const auto e = validate(s);
    std::set<oracle::CodeKey> got;
    for (const auto& x : e) {
      got.insert({x.subtask_index, x.code});
      hit.insert(x.code);
    }
    const bool ok = e.empty();
    valid += ok ? 1 : 0;
    if (ok != oracle::walk_valid(s) || got != oracle::rule_codes(s)) ++mismatches;
  });
  INFO(n << " schedules enumerated");
  CHECK(mismatches == 0);
  CHECK(valid > 0);
  // Everything except MalformedRecord and DepthExceeded shows up here; those
  // two have their own fixtures above.
  CHECK(hit.size() >= kNumErrorCodes - 2);
}

TEST_CASE("label assignment") {
  const auto y = assign_labels(clock_schedule());
  REQUIRE(y.size() == 121);
  for (std::size_t t = 0; t <= 45; ++t) CHECK(y[t] == PhaseLabel::kMove);
  for (std::size_t t = 46; t <= 120; ++t) CHECK(y[t] == PhaseLabel::kOperate);

  Schedule one;
  one.total_frames = 7;
  one.subtasks = {subtask(1, {mv(0, 6)})};
  for (PhaseLabel l : assign_labels(one)) CHECK(l == PhaseLabel::kMove);

  Schedule bad = clock_schedule();
  bad.total_frames = 122;
  CHECK_THROWS_AS(assign_labels(bad), ContractError);
}

TEST_CASE("schedule json round trip and tolerant decoding") {
  Schedule s = clock_schedule();
  s.subtasks[0].description = "press";
  s.subtasks[0].primary_arm = PrimaryArm::kBoth;
  const auto j = schedule_to_json(s);
  CHECK(j[0]["phases"][1]["phase_type"] == "operate");
  CHECK(j[0]["primary_arm"] == "both");
  CHECK(schedule_from_json(j, 121) == s);

  std::ifstream in(std::string(MTOP_FIXTURE_DIR) + "/two_phase_schedule.json");
  const auto parsed = schedule_from_json(nlohmann::json::parse(in), 121);
  CHECK(parsed.malformed.empty());
  CHECK(is_valid(parsed));
  CHECK(parsed.subtasks[0].primary_arm == PrimaryArm::kRight);

  const auto junk = nlohmann::json::parse(R"([
    {"subtask": 1, "phases": [{"phase_type": "move", "start_frame_idx": 0, "end_frame_idx": 3}]},
    {"subtask": "two", "phases": []},
    {"subtask": 2, "phases": [{"phase_type": "hover", "start_frame_idx": 4, "end_frame_idx": 5}]},
    {"subtask": 2, "phases": [{"phase_type": "Operate", "start_frame_idx": 4, "end_frame_idx": 5}]}
  ])");
  const Schedule js = schedule_from_json(junk, 6);
  CHECK(js.malformed.size() == 2);
  CHECK(js.subtasks.size() == 2);
  CHECK(codes(validate(js)) == std::vector<ErrorCode>{ErrorCode::kMalformedRecord});

  const Schedule not_array = schedule_from_json(nlohmann::json::object(), 6);
  CHECK(has(validate(not_array), ErrorCode::kMalformedRecord, std::nullopt));
  CHECK(has(validate(not_array), ErrorCode::kEmptySchedule, std::nullopt));
}

TEST_CASE("speed smoothing averages over the flatter side") {
  const Vec v{1, 1, 1, 0, 0, 0};
  CHECK(smooth_speeds(v, 3) == Vec{1, 1, 1, 0, 0, 0});
  // A move onset right after a stationary stretch stays fast.
  const Vec onset{0, 0, 0, 0.6, 0.9, 0.6, 0.9};
  const Vec so = smooth_speeds(onset, 3);
  CHECK(so[2] == 0.0);
  CHECK(so[3] == doctest::Approx(0.7));
  // An isolated spike is spread over both windows.
  const Vec spike{0, 0, 0.9, 0, 0};
  CHECK(smooth_speeds(spike, 3)[2] == doctest::Approx(0.3));
  CHECK(smooth_speeds(v, 1) == v);
  CHECK_THROWS_AS(smooth_speeds(v, 0), ConfigError);
}

TEST_CASE("velocity heuristic examples") {
  VelocityHeuristicConfig cfg{0.1, 3};
  const Schedule s = segment_velocity_heuristic(speeds({{30, 0.5}, {30, 0.01}}), cfg);
  REQUIRE(s.subtasks.size() == 1);
  CHECK(s.subtasks[0].phases == std::vector<PhaseSpan>{mv(0, 29), op(30, 59)});
  CHECK(is_valid(s));

  const Schedule fast = segment_velocity_heuristic(speeds({{20, 0.5}}), cfg);
  REQUIRE(fast.subtasks.size() == 1);
  CHECK(fast.subtasks[0].phases == std::vector<PhaseSpan>{mv(0, 19)});

  const Schedule slow = segment_velocity_heuristic(speeds({{20, 0.01}}), cfg);
  CHECK(slow.subtasks[0].phases == std::vector<PhaseSpan>{op(0, 19)});
  CHECK(codes(validate(slow)) == std::vector<ErrorCode>{ErrorCode::kNoMovePhase});

  // A short blip is absorbed by its neighbour.
  const Schedule blip =
      segment_velocity_heuristic(speeds({{10, 0.5}, {10, 0.01}, {1, 0.5}, {10, 0.01}}), cfg);
  REQUIRE(blip.subtasks.size() == 1);
  CHECK(blip.subtasks[0].phases == std::vector<PhaseSpan>{mv(0, 9), op(10, 30)});

  // Move, Operate, Move, Operate pairs up; a trailing Move stands alone.
  const Schedule two =
      segment_velocity_heuristic(speeds({{10, 0.5}, {10, 0.01}, {10, 0.5}, {10, 0.01}, {10, 0.5}}), cfg);
  CHECK(two.subtasks.size() == 3);
  CHECK(two.subtasks[2].phases.size() == 1);
  CHECK(is_valid(two));

  CHECK_THROWS_AS(segment_velocity_heuristic(TrajectoryFeatures{}, cfg), ContractError);
}

TEST_CASE("heuristic output always tiles the trajectory") {
  Rng rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    TrajectoryFeatures t;
    const std::size_t n = 1 + rng.uniform_index(60);
    for (std::size_t i = 0; i < n; ++i) t.speeds.push_back(rng.uniform() < 0.5 ? 0.2 : 0.001);
    const VelocityHeuristicConfig cfg{0.05, 1 + rng.uniform_index(4)};
    const auto e = validate(segment_velocity_heuristic(t, cfg));
    for (const auto& x : e) CHECK(x.code == ErrorCode::kNoMovePhase);
  }
}

TEST_CASE("velocity heuristic halves its threshold after NoMovePhase") {
  // Speeds of 0.02 sit below the default 0.025 threshold but above half of it.
  const TrajectoryFeatures t = speeds({{20, 0.02}, {20, 0.001}});
  VelocityHeuristic h;
  const RefineOutcome r = refine_loop(h, t, 3);
  CHECK(r.success);
  CHECK(r.rounds_used == 2);
  CHECK(h.current_threshold() == 0.0125);
  CHECK(codes(r.history[0]) == std::vector<ErrorCode>{ErrorCode::kNoMovePhase});
  CHECK(r.schedule.subtasks[0].phases == std::vector<PhaseSpan>{mv(0, 19), op(20, 39)});
}

TEST_CASE("every fault can be injected") {
  const Schedule s = clock_schedule();
  for (std::size_t i = 0; i < kNumErrorCodes; ++i) {
    const auto c = static_cast<ErrorCode>(i);
    INFO(error_code_name(c));
    bool found = false;
    for (const auto& e : validate(inject_fault(s, c))) found = found || e.code == c;
    CHECK(found);
  }
  Schedule single;
  single.total_frames = 5;
  single.subtasks = {subtask(1, {mv(0, 4)})};
  for (ErrorCode c : {ErrorCode::kDuplicatePhaseType, ErrorCode::kNonChronological}) {
    bool found = false;
    for (const auto& e : validate(inject_fault(single, c))) found = found || e.code == c;
    CHECK(found);
  }
  CHECK_THROWS_AS(inject_fault(inject_fault(s, ErrorCode::kGap), ErrorCode::kGap), ContractError);
}

TEST_CASE("refinement succeeds at round r for every r up to the budget") {
  const Schedule valid = clock_schedule();
  const TrajectoryFeatures traj{Vec(121, 0.0)};
  for (int budget = 1; budget <= 5; ++budget) {
    for (int r = 1; r <= budget + 2; ++r) {
      std::vector<ErrorCode> faults(static_cast<std::size_t>(r - 1), ErrorCode::kDuplicatePhaseType);
      FaultInjectingMock mock = FaultInjectingMock::with_faults(valid, faults);
      const RefineOutcome out = refine_loop(mock, traj, budget);
      CHECK(mock.calls() <= static_cast<std::size_t>(budget));
      if (r <= budget) {
        CHECK(out.success);
        CHECK(out.rounds_used == r);
        CHECK(out.schedule == valid);
        CHECK(out.last_errors().empty());
      } else {
        CHECK_FALSE(out.success);
        CHECK(out.rounds_used == budget);
        CHECK(out.history.size() == static_cast<std::size_t>(budget));
        CHECK_FALSE(is_valid(out.schedule));
      }
    }
  }
}

TEST_CASE("refinement trace feeds errors back to the backend") {
  const Schedule valid = clock_schedule();
  const TrajectoryFeatures traj{Vec(121, 0.0)};
  FaultInjectingMock mock = FaultInjectingMock::with_faults(
      valid, {ErrorCode::kDuplicatePhaseType, ErrorCode::kDuplicatePhaseType});
  const RefineOutcome out = refine_loop(mock, traj, 3);
  CHECK(out.success);
  CHECK(out.rounds_used == 3);
  REQUIRE(mock.received().size() == 3);
  CHECK(mock.received()[0].empty());
  CHECK(codes(mock.received()[1]) == std::vector<ErrorCode>{ErrorCode::kDuplicatePhaseType});
  CHECK(codes(mock.received()[2]) == std::vector<ErrorCode>{ErrorCode::kDuplicatePhaseType});

  FaultInjectingMock stuck = FaultInjectingMock::never_repairs(valid, ErrorCode::kNoMovePhase);
  const RefineOutcome fail = refine_loop(stuck, traj, 3);
  CHECK_FALSE(fail.success);
  CHECK(fail.history.size() == 3);
  CHECK(stuck.calls() == 3);
  CHECK(has(fail.last_errors(), ErrorCode::kNoMovePhase, std::nullopt));

  CHECK_THROWS_AS(refine_loop(stuck, traj, 0), ConfigError);
}

TEST_CASE("replay file backend") {
  const TrajectoryFeatures traj{Vec(121, 0.0)};
  ReplayFile single(std::string(MTOP_FIXTURE_DIR) + "/two_phase_schedule.json");
  const RefineOutcome a = refine_loop(single, traj, 1);
  CHECK(a.success);

  ReplayFile rounds(std::string(MTOP_FIXTURE_DIR) + "/replay_rounds.json");
  const RefineOutcome b = refine_loop(rounds, traj, 3);
  CHECK(b.success);
  CHECK(b.rounds_used == 2);
  CHECK(codes(b.history[0]) == std::vector<ErrorCode>{ErrorCode::kDuplicatePhaseType});

  // The same file replayed against a shorter trajectory runs out of range.
  ReplayFile again(std::string(MTOP_FIXTURE_DIR) + "/two_phase_schedule.json");
  const RefineOutcome c = refine_loop(again, TrajectoryFeatures{Vec(100, 0.0)}, 2);
  CHECK_FALSE(c.success);
  CHECK(has(c.last_errors(), ErrorCode::kOutOfRange, 1));

  CHECK_THROWS_AS(ReplayFile("/nonexistent/schedule.json"), IoError);
  const std::string dir = mtop::testing::scratch_dir("replay");
  std::ofstream(dir + "/bad.json") << "[{";
  CHECK_THROWS_AS(ReplayFile(dir + "/bad.json"), IoError);
}
