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

#ifndef MTOP_CHECKPOINT_HPP_
#define MTOP_CHECKPOINT_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "mtop/numcore.hpp"

namespace mtop {

// Self-describing binary parameter container.
//
//   magic   "MTOPCKPT"                      8 bytes
//   version u32                             (kCheckpointVersion)
//   count   u32                             number of records
//   record  u8 kind, u32 name length, name bytes, payload
//
// Payloads, all integers and doubles little-endian:
//   kind 1 (mlp)   u32 layers; per layer u32 rows, u32 cols, u8 activation tag,
//                  rows*cols f64 weights (row-major), rows f64 biases
//   kind 2 (reals) u64 n, n f64
//   kind 3 (text)  u64 n, n bytes
//   kind 4 (u64s)  u64 n, n u64
inline constexpr std::uint32_t kCheckpointVersion = 1;

class Checkpoint {
 public:
  using Value = std::variant<MlpParams, Vec, std::string, std::vector<std::uint64_t>>;

  void put_mlp(const std::string& name, const MlpParams& p) { records_[name] = p; }
  void put_reals(const std::string& name, Vec v) { records_[name] = std::move(v); }
  void put_text(const std::string& name, std::string s) { records_[name] = std::move(s); }
  void put_u64s(const std::string& name, std::vector<std::uint64_t> v) {
    records_[name] = std::move(v);
  }

  bool has(const std::string& name) const { return records_.count(name) != 0; }
  const MlpParams& mlp(const std::string& name) const;
  const Vec& reals(const std::string& name) const;
  const std::string& text(const std::string& name) const;
  const std::vector<std::uint64_t>& u64s(const std::string& name) const;

  std::vector<std::uint8_t> serialize() const;
  static Checkpoint deserialize(const std::vector<std::uint8_t>& bytes);

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);

 private:
  template <class T>
  const T& get(const std::string& name, const char* kind) const;

  // Ordered so serialization is deterministic.
  std::map<std::string, Value> records_;
};

}  // namespace mtop

#endif  // MTOP_CHECKPOINT_HPP_
