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

#ifndef MTOP_RNG_HPP_
#define MTOP_RNG_HPP_

#include <array>
#include <cstdint>

namespace mtop {

// Seeded xoshiro256** generator. The four state words are expanded from the
// 64-bit seed with splitmix64, so identical seeds give identical streams.
//
// Gaussian draws use Box-Muller and consume uniforms in pairs: the first
// normal() call draws u1, u2 and returns r*cos(2*pi*u2); the sine partner is
// cached and returned by the next normal() call without touching the stream.
class Rng {
 public:
  // Complete generator state, for checkpointing.
  struct State {
    std::array<std::uint64_t, 4> words{};
    bool has_spare = false;
    double spare = 0.0;
  };

  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);
  double normal();

  State state() const { return state_; }
  void set_state(const State& s) { state_ = s; }

 private:
  State state_;
};

// Derives an independent stream seed from a base seed and a list of tags.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                       std::uint64_t c = 0);

}  // namespace mtop

#endif  // MTOP_RNG_HPP_
