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

#ifndef MTOP_TESTS_TEST_UTIL_HPP_
#define MTOP_TESTS_TEST_UTIL_HPP_

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mtop/numcore.hpp"

namespace mtop::testing {

// ||a - b||_2 / max(||a||_2, ||b||_2), 0 when both are zero.
inline double rel_error(std::span<const double> a, std::span<const double> b) {
  double d = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double den = std::sqrt(std::max(na, nb));
  return den == 0.0 ? 0.0 : std::sqrt(d) / den;
}

inline std::vector<double> flatten(const MlpParams& p) {
  std::vector<double> out;
  for (auto b : p.blocks()) out.insert(out.end(), b.begin(), b.end());
  return out;
}

inline double rel_error(const MlpParams& a, const MlpParams& b) {
  const auto fa = flatten(a);
  const auto fb = flatten(b);
  return rel_error(fa, fb);
}

inline bool all_zero(const MlpParams& p) {
  for (auto b : p.blocks())
    for (double x : b)
      if (x != 0.0) return false;
  return true;
}

// Fresh scratch directory under the system temp dir.
inline std::string scratch_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("mtop_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

}  // namespace mtop::testing

#endif  // MTOP_TESTS_TEST_UTIL_HPP_
