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

#ifndef MTOP_PHASE_HPP_
#define MTOP_PHASE_HPP_

#include <cstdint>
#include <optional>
#include <string_view>

namespace mtop {

enum class PhaseLabel : std::uint8_t { kMove = 0, kOperate = 1 };

inline const char* phase_name(PhaseLabel p) {
  return p == PhaseLabel::kMove ? "move" : "operate";
}

inline std::optional<PhaseLabel> parse_phase(std::string_view s) {
  if (s == "move" || s == "Move") return PhaseLabel::kMove;
  if (s == "operate" || s == "Operate") return PhaseLabel::kOperate;
  return std::nullopt;
}

inline PhaseLabel opposite(PhaseLabel p) {
  return p == PhaseLabel::kMove ? PhaseLabel::kOperate : PhaseLabel::kMove;
}

}  // namespace mtop

#endif  // MTOP_PHASE_HPP_
