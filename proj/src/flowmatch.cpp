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

#include "mtop/flowmatch.hpp"

#include <cmath>
#include <string>

#include "mtop/error.hpp"

namespace mtop {
namespace {

void check_same_length(std::span<const double> a, std::span<const double> b,
                       const char* where) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(where) + ": length " + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()));
  }
}

}  // namespace

Vec interpolate(std::span<const double> x0, std::span<const double> a, double sigma) {
  if (!(sigma >= 0.0 && sigma <= 1.0)) {
    throw DomainError("interpolate: sigma " + std::to_string(sigma) + " outside [0, 1]");
  }
  check_same_length(x0, a, "interpolate");
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    out[i] = (1.0 - sigma) * x0[i] + sigma * a[i];
  }
  return out;
}

Vec target_velocity(std::span<const double> x0, std::span<const double> a) {
  check_same_length(x0, a, "target_velocity");
  Vec u(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) u[i] = a[i] - x0[i];
  return u;
}

Vec integrate(const VelocityField& field, std::span<const double> x0, const OdeConfig& cfg) {
  if (cfg.num_steps < 1) throw DomainError("integrate: num_steps must be >= 1");
  const double n = cfg.num_steps;
  // x_k = x0 + (k / N) * (running mean of the first k velocities). Same Euler
  // iterate as x += v / N, but the running mean of a constant field stays
  // bit-exact, so the endpoint is x0 + v to one rounding.
  Vec x(x0.begin(), x0.end());
  Vec mean(x.size(), 0.0);
  for (int k = 0; k < cfg.num_steps; ++k) {
    const double sigma = k / n;
    const Vec v = field(sigma, x);
    if (v.size() != x.size()) {
      throw DimensionError("integrate: field returned " + std::to_string(v.size()) +
                           " values for a state of length " + std::to_string(x.size()));
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!std::isfinite(v[i])) {
        throw NumericError("integrate: non-finite velocity at step " + std::to_string(k) +
                           ", component " + std::to_string(i));
      }
      mean[i] += (v[i] - mean[i]) / (k + 1);
      x[i] = x0[i] + ((k + 1) / n) * mean[i];
    }
  }
  return x;
}

FlowSample make_flow_sample(std::span<const double> action, Rng& rng,
                            std::optional<double> forced_sigma) {
  FlowSample s;
  s.sigma = forced_sigma ? *forced_sigma : rng.uniform();
  s.x0.resize(action.size());
  for (double& v : s.x0) v = rng.normal();
  s.x_sigma = interpolate(s.x0, action, s.sigma);
  s.u = target_velocity(s.x0, action);
  return s;
}

std::vector<FlowSample> cfm_sample_batch(std::span<const Vec> actions, Rng& rng,
                                         std::size_t batch_size) {
  if (actions.empty()) throw ContractError("cfm_sample_batch: empty dataset");
  std::vector<FlowSample> batch;
  batch.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) {
    const std::size_t index = rng.uniform_index(actions.size());
    FlowSample s = make_flow_sample(actions[index], rng);
    s.index = index;
    batch.push_back(std::move(s));
  }
  return batch;
}

}  // namespace mtop
