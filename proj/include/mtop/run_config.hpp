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

#ifndef MTOP_RUN_CONFIG_HPP_
#define MTOP_RUN_CONFIG_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mtop/flowmatch.hpp"
#include "mtop/policy.hpp"
#include "mtop/simenv.hpp"

namespace mtop {

// Flat key=value run configuration. Every key has a default; unknown keys
// and unparsable values are ConfigErrors. Text form: one "key = value" per
// line, '#' starts a comment.
class RunConfig {
 public:
  enum class Type { kCount, kPositive, kReal, kNonNegReal, kPosReal, kUnitReal, kBool, kText, kChoice };
  struct Key {
    std::string name;
    Type type;
    std::string default_value;
    std::vector<std::string> choices;  // kChoice only
    std::string help;
  };

  RunConfig();

  static const std::vector<Key>& schema();

  void set(const std::string& key, const std::string& value);
  void merge_text(std::string_view text, const std::string& origin);
  void merge_file(const std::string& path);

  const std::string& get(const std::string& key) const;
  std::uint64_t count(const std::string& key) const;
  double real(const std::string& key) const;
  bool flag(const std::string& key) const;

  // Sorted "key=value" lines.
  std::string serialize() const;
  // FNV-1a 64 of serialize(), as 16 hex digits.
  std::string digest() const;
  const std::map<std::string, std::string>& values() const { return values_; }

  // Artifact paths; an empty *_path key means out_dir/<default file name>.
  std::string path(const std::string& key) const;

  PolicyDims policy_dims() const;
  EnvParams env_params() const;
  OdeConfig ode_config() const;
  RolloutConfig rollout_config() const;
  VelocityHeuristicConfig heuristic_config() const;

 private:
  std::map<std::string, std::string> values_;
};

// Lines "# key=value" for embedding in text artifacts.
std::string config_comment_block(const RunConfig& cfg, std::string_view format);

}  // namespace mtop

#endif  // MTOP_RUN_CONFIG_HPP_
