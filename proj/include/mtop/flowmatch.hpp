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

#ifndef MTOP_FLOWMATCH_HPP_
#define MTOP_FLOWMATCH_HPP_

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mtop/numcore.hpp"
#include "mtop/rng.hpp"

namespace mtop {

// Conditional flow matching on the linear interpolant between a Gaussian
// sample x0 (flow time 0) and a normalized action vector a (flow time 1).

// (1 - sigma) * x0 + sigma * a. Throws DomainError for sigma outside [0, 1].
Vec interpolate(std::span<const double> x0, std::span<const double> a, double sigma);

// Regression target u = a - x0.
Vec target_velocity(std::span<const double> x0, std::span<const double> a);

struct OdeConfig {
  int num_steps = 10;  // explicit Euler, uniform step 1 / num_steps
};

using VelocityField = std::function<Vec(double sigma, std::span<const double> x)>;

// Explicit Euler from sigma = 0 to 1. A non-finite field value throws
// NumericError naming the step.
Vec integrate(const VelocityField& field, std::span<const double> x0, const OdeConfig& cfg);

struct FlowSample {
  std::size_t index = 0;  // position of the (context, action) pair in the dataset
  double sigma = 0.0;
  Vec x0;
  Vec x_sigma;
  Vec u;
};

// Draws sigma ~ U[0, 1) (unless forced) and x0 ~ N(0, I) for one action.
// Stream order: sigma first, then x0 components in order.
FlowSample make_flow_sample(std::span<const double> action, Rng& rng,
                            std::optional<double> forced_sigma = std::nullopt);

// Uniformly picks batch_size indices into actions and draws a flow sample for
// each. Per sample the stream order is: index, sigma, x0.
std::vector<FlowSample> cfm_sample_batch(std::span<const Vec> actions, Rng& rng,
                                         std::size_t batch_size);

}  // namespace mtop

#endif  // MTOP_FLOWMATCH_HPP_
