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

#include <cmath>
#include <numbers>

#include "mtop/error.hpp"
#include "mtop/flowmatch.hpp"
#include "mtop/numcore.hpp"
#include "mtop/rng.hpp"

using namespace mtop;

namespace {

Vec normal_vec(std::size_t n, Rng& rng) {
  Vec v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

double euler_error_linear(double x0, int steps) {
  const VelocityField f = [](double, std::span<const double> x) { return Vec(x.begin(), x.end()); };
  const Vec start{x0};
  return std::abs(integrate(f, start, OdeConfig{steps})[0] - x0 * std::numbers::e);
}

}  // namespace

TEST_CASE("interpolate examples") {
  const Vec x0{0, 0}, a{2, 4};
  CHECK(interpolate(x0, a, 0.5) == Vec{1, 2});
  CHECK_THROWS_AS(interpolate(x0, a, 1.5), DomainError);
  CHECK_THROWS_AS(interpolate(x0, a, -1e-9), DomainError);
  CHECK_THROWS_AS(interpolate(x0, a, std::nan("")), DomainError);
  const Vec short_a{1};
  CHECK_THROWS_AS(interpolate(x0, short_a, 0.5), DimensionError);
}

TEST_CASE("target velocity examples") {
  const Vec x0{1, 1}, a{3, 0};
  CHECK(target_velocity(x0, a) == Vec{2, -1});
  CHECK(target_velocity(a, a) == Vec{0, 0});
  const Vec short_a{1};
  CHECK_THROWS_AS(target_velocity(x0, short_a), DimensionError);
}

TEST_CASE("endpoints and consistency identity over random draws") {
  Rng rng(2026);
  double worst_end = 0.0, worst_id = 0.0;
  for (int n = 0; n < 20000; ++n) {
    const Vec x0 = normal_vec(24, rng);
    const Vec a = normal_vec(24, rng);
    const double sigma = rng.uniform();
    const Vec e0 = interpolate(x0, a, 0.0);
    const Vec e1 = interpolate(x0, a, 1.0);
    const Vec xs = interpolate(x0, a, sigma);
    const Vec u = target_velocity(x0, a);
    for (std::size_t i = 0; i < a.size(); ++i) {
      worst_end = std::max({worst_end, std::abs(e0[i] - x0[i]), std::abs(e1[i] - a[i])});
      worst_id = std::max(worst_id, std::abs(xs[i] + (1.0 - sigma) * u[i] - a[i]));
    }
  }
  CHECK(worst_end == 0.0);
  CHECK(worst_id < 1e-12);
}

TEST_CASE("euler on constant and zero fields") {
  const Vec x0{0, 0};
  for (int steps : {1, 3, 7, 10, 64}) {
    const VelocityField c = [](double, std::span<const double>) { return Vec{1, 0}; };
    CHECK(integrate(c, x0, OdeConfig{steps}) == Vec{1, 0});
    const Vec y0{0.3, -2.0};
    const VelocityField z = [](double, std::span<const double>) { return Vec{0, 0}; };
    CHECK(integrate(z, y0, OdeConfig{steps}) == y0);
  }
}

TEST_CASE("euler on the linear field approaches e with first-order error") {
  const Vec one{1.0};
  const VelocityField f = [](double, std::span<const double> x) { return Vec(x.begin(), x.end()); };
  const double y = integrate(f, one, OdeConfig{100})[0];
  CHECK(std::abs(y - std::numbers::e) / std::numbers::e < 0.02);
  // Euler on x' = x gives (1 + 1/N)^N exactly.
  CHECK(y == doctest::Approx(std::pow(1.01, 100)).epsilon(1e-12));

  Rng rng(5);
  for (int s = 0; s < 5; ++s) {
    const double x0 = rng.uniform(0.5, 3.0);
    for (int n : {10, 50, 100}) {
      const double ratio = euler_error_linear(x0, n) / euler_error_linear(x0, 2 * n);
      CHECK(ratio >= 1.7);
      CHECK(ratio <= 2.3);
    }
  }
}

TEST_CASE("euler evaluates the field at sigma = k / N") {
  std::vector<double> seen;
  const VelocityField f = [&](double s, std::span<const double>) {
    seen.push_back(s);
    return Vec{0};
  };
  const Vec x0{0};
  integrate(f, x0, OdeConfig{4});
  CHECK(seen == std::vector<double>{0.0, 0.25, 0.5, 0.75});
}

TEST_CASE("integrate errors") {
  const Vec x0{1.0};
  const VelocityField ok = [](double, std::span<const double>) { return Vec{0}; };
  CHECK_THROWS_AS(integrate(ok, x0, OdeConfig{0}), DomainError);
  int calls = 0;
  const VelocityField blowup = [&](double, std::span<const double>) {
    return Vec{++calls == 3 ? std::numeric_limits<double>::infinity() : 1.0};
  };
  try {
    integrate(blowup, x0, OdeConfig{10});
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("step 2") != std::string::npos);
  }
  const VelocityField wrong = [](double, std::span<const double>) { return Vec{1, 2}; };
  CHECK_THROWS_AS(integrate(wrong, x0, OdeConfig{2}), DimensionError);
}

TEST_CASE("flow samples") {
  Rng rng(3);
  const Vec a{0.5, -1.0, 2.0};
  const FlowSample s = make_flow_sample(a, rng, 0.0);
  CHECK(s.x_sigma == s.x0);
  CHECK(s.sigma == 0.0);

  // sigma is drawn before x0.
  Rng r1(8), r2(8);
  const FlowSample t = make_flow_sample(a, r1);
  CHECK(t.sigma == r2.uniform());
  for (double x : t.x0) CHECK(x == r2.normal());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(t.u[i] == a[i] - t.x0[i]);
}

TEST_CASE("cfm batches are deterministic and follow the declared distributions") {
  const std::vector<Vec> actions{{0.0, 1.0}, {2.0, 3.0}, {-1.0, 0.5}};
  Rng r1(11), r2(11);
  const auto b1 = cfm_sample_batch(actions, r1, 10000);
  const auto b2 = cfm_sample_batch(actions, r2, 10000);
  double sig = 0.0, m0 = 0.0, m1 = 0.0;
  std::array<int, 3> hits{};
  for (std::size_t i = 0; i < b1.size(); ++i) {
    REQUIRE(b1[i].sigma == b2[i].sigma);
    REQUIRE(b1[i].x0 == b2[i].x0);
    REQUIRE(b1[i].index == b2[i].index);
    REQUIRE(b1[i].sigma < 1.0);
    sig += b1[i].sigma;
    m0 += b1[i].x0[0];
    m1 += b1[i].x0[1];
    hits[b1[i].index]++;
  }
  const double n = static_cast<double>(b1.size());
  CHECK(std::abs(sig / n - 0.5) < 0.02);
  CHECK(std::abs(m0 / n) < 0.05);
  CHECK(std::abs(m1 / n) < 0.05);
  for (int h : hits) CHECK(h > 3000);

  const std::vector<Vec> none;
  CHECK_THROWS_AS(cfm_sample_batch(none, r1, 4), ContractError);
}

TEST_CASE("a cfm-trained field reproduces a two-mode gaussian mixture") {
  const std::array<Vec, 2> modes{Vec{1.5, 0.5}, Vec{-1.0, -1.0}};
  const double spread = 0.2;
  Rng rng(17);
  const std::vector<std::size_t> widths{3, 64, 64, 2};
  MlpParams net = MlpParams::init_uniform(widths, rng);
  AdamHyper hyper;
  hyper.lr = 3e-3;
  AdamState opt = AdamState::for_params(net, hyper);

  const std::size_t batch = 128;
  for (int step = 0; step < 3000; ++step) {
    Matrix in(batch, 3);
    Matrix target(batch, 2);
    for (std::size_t b = 0; b < batch; ++b) {
      const Vec& mu = modes[rng.uniform_index(2)];
      const Vec a{mu[0] + spread * rng.normal(), mu[1] + spread * rng.normal()};
      const FlowSample s = make_flow_sample(a, rng);
      in(b, 0) = s.x_sigma[0];
      in(b, 1) = s.x_sigma[1];
      in(b, 2) = s.sigma;
      target(b, 0) = s.u[0];
      target(b, 1) = s.u[1];
    }
    const MlpTape tape = mlp_forward_batch(net, in);
    Matrix g(batch, 2);
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t j = 0; j < 2; ++j)
        g(b, j) = 2.0 * (tape.output()(b, j) - target(b, j)) / batch;
    MlpParams grads = net.zeros_like();
    mlp_backward_accumulate(net, tape, g, grads, nullptr);
    adam_step(opt, net, grads);
  }

  const VelocityField field = [&](double sigma, std::span<const double> x) {
    const Vec in{x[0], x[1], sigma};
    return mlp_forward(net, in).first;
  };
  std::array<Vec, 2> sums{Vec{0, 0}, Vec{0, 0}};
  std::array<int, 2> counts{};
  for (int n = 0; n < 2000; ++n) {
    const Vec x0 = normal_vec(2, rng);
    const Vec y = integrate(field, x0, OdeConfig{50});
    const auto d = [&](const Vec& m) { return std::hypot(y[0] - m[0], y[1] - m[1]); };
    const int k = d(modes[0]) < d(modes[1]) ? 0 : 1;
    sums[k][0] += y[0];
    sums[k][1] += y[1];
    counts[k]++;
  }
  for (int k = 0; k < 2; ++k) {
    INFO("mode " << k << " count " << counts[k]);
    REQUIRE(counts[k] > 400);
    CHECK(std::abs(sums[k][0] / counts[k] - modes[k][0]) < 0.1);
    CHECK(std::abs(sums[k][1] / counts[k] - modes[k][1]) < 0.1);
  }
}
