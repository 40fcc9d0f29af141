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
#include <limits>
#include <numbers>

#include "mtop/checkpoint.hpp"
#include "mtop/error.hpp"
#include "mtop/numcore.hpp"
#include "mtop/rng.hpp"
#include "test_util.hpp"

using namespace mtop;
using mtop::testing::rel_error;

namespace {

MlpParams random_net(std::vector<std::size_t> widths, std::uint64_t seed) {
  Rng rng(seed);
  return MlpParams::init_uniform(widths, rng);
}

Vec random_vec(std::size_t n, Rng& rng) {
  Vec v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

// Plain re-evaluation of y = W2 tanh(W1 x + b1) + b2 without the library's
// forward pass.
Vec reference_forward(const MlpParams& p, const Vec& x) {
  Vec h = x;
  for (std::size_t l = 0; l < p.num_layers(); ++l) {
    const Layer& L = p.layer(l);
    Vec out(L.out_width());
    for (std::size_t i = 0; i < L.out_width(); ++i) {
      double s = L.bias[i];
      for (std::size_t k = 0; k < L.in_width(); ++k) s += L.weight(i, k) * h[k];
      out[i] = L.activation == Activation::kTanh ? std::tanh(s) : s;
    }
    h = std::move(out);
  }
  return h;
}

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST_CASE("rng streams replay from seed and from saved state") {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    differs = differs || x != c.next_u64();
  }
  CHECK(differs);

  Rng r(7);
  r.normal();  // leaves a cached spare
  const Rng::State s = r.state();
  std::vector<double> first;
  for (int i = 0; i < 9; ++i) first.push_back(i % 2 ? r.uniform() : r.normal());
  r.set_state(s);
  for (int i = 0; i < 9; ++i) CHECK(first[i] == (i % 2 ? r.uniform() : r.normal()));
}

TEST_CASE("rng distributions") {
  Rng r(1);
  double mean = 0.0, var = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const double z = r.normal();
    mean += z;
    var += z * z;
    REQUIRE(r.uniform_index(5) < 5);
  }
  mean /= n;
  var = var / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
  CHECK(mix_seed(1, 2) != mix_seed(1, 3));
  CHECK(mix_seed(1, 2, 3) != mix_seed(1, 3, 2));
}

TEST_CASE("box-muller pairs consume two uniforms per two normals") {
  Rng a(9), b(9);
  const double u1 = 1.0 - b.uniform();
  const double u2 = b.uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  CHECK(a.normal() == doctest::Approx(r * std::cos(2.0 * std::numbers::pi * u2)).epsilon(1e-15));
  CHECK(a.normal() == doctest::Approx(r * std::sin(2.0 * std::numbers::pi * u2)).epsilon(1e-15));
  CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("matrix helpers") {
  const std::vector<Vec> rows{{1, 2, 3}, {4, 5, 6}};
  const Matrix m = Matrix::from_rows(rows);
  CHECK(m.rows() == 2);
  CHECK(m(1, 2) == 6);
  const Matrix t = m.transposed();
  CHECK(t.rows() == 3);
  CHECK(t(2, 1) == 6);
  CHECK(m.all_finite());
  Matrix bad = m;
  bad(0, 0) = std::nan("");
  CHECK_FALSE(bad.all_finite());
  const std::vector<Vec> ragged{{1, 2}, {3}};
  CHECK_THROWS_AS(Matrix::from_rows(ragged), DimensionError);
}

TEST_CASE("linear layer by hand") {
  Layer l{Matrix::from_rows(std::vector<Vec>{{2, 0}, {0, 3}}), {1, -1}, Activation::kLinear};
  const MlpParams p({l});
  const Vec x{1, 1};
  const auto [y, tape] = mlp_forward(p, x);
  CHECK(y == Vec{3, 2});

  // grad_output = e_1: grad_W row 0 = x, grad_b = e_1.
  const Vec e1{1, 0};
  const MlpGradients g = mlp_backward(p, tape, e1);
  CHECK(g.params.layer(0).weight(0, 0) == 1);
  CHECK(g.params.layer(0).weight(0, 1) == 1);
  CHECK(g.params.layer(0).weight(1, 0) == 0);
  CHECK(g.params.layer(0).weight(1, 1) == 0);
  CHECK(g.params.layer(0).bias == Vec{1, 0});
  CHECK(g.input == Vec{2, 0});
}

TEST_CASE("zero-weight network returns the output bias") {
  const std::vector<std::size_t> w{3, 5, 2};
  MlpParams p = MlpParams::zeros(w);
  p.layer(1).bias = {0.25, -4.0};
  const Vec x{0.3, -7.0, 2.0};
  CHECK(mlp_forward(p, x).first == Vec{0.25, -4.0});
}

TEST_CASE("forward matches an independent re-evaluation bit for bit") {
  const MlpParams p = random_net({2, 16, 16, 3}, 0);
  const Vec x{0.5, -0.5};
  CHECK(mlp_forward(p, x).first == reference_forward(p, x));
}

TEST_CASE("batched forward equals per-sample forward bit for bit") {
  const MlpParams p = random_net({7, 32, 5}, 3);
  Rng rng(4);
  std::vector<Vec> xs;
  for (int i = 0; i < 9; ++i) xs.push_back(random_vec(7, rng));
  const MlpTape tape = mlp_forward_batch(p, Matrix::from_rows(xs));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const Vec y = mlp_forward(p, xs[i]).first;
    for (std::size_t j = 0; j < y.size(); ++j) CHECK(tape.output()(i, j) == y[j]);
  }
}

TEST_CASE("forward shape errors") {
  const MlpParams p = random_net({3, 4, 2}, 1);
  const Vec x{1, 2};
  CHECK_THROWS_AS(mlp_forward(p, x), DimensionError);
  std::vector<Layer> layers = p.layers();
  layers[1].weight = Matrix(2, 5);
  CHECK_THROWS_AS(MlpParams{layers}, DimensionError);
}

TEST_CASE("backward agrees with central differences") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const MlpParams p = random_net({4, 6, 5, 3}, seed);
    Rng rng(100 + seed);
    const Vec x = random_vec(4, rng);
    const Vec g = random_vec(3, rng);
    const auto [y, tape] = mlp_forward(p, x);
    const MlpGradients an = mlp_backward(p, tape, g);
    const MlpParams fd = finite_diff_grad(
        [&](const MlpParams& q) { return dot(mlp_forward(q, x).first, g); }, p, 1e-5);
    CHECK(rel_error(an.params, fd) < 1e-6);

    Vec fd_in(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      Vec xp = x, xm = x;
      xp[i] += 1e-5;
      xm[i] -= 1e-5;
      fd_in[i] = (dot(mlp_forward(p, xp).first, g) - dot(mlp_forward(p, xm).first, g)) / 2e-5;
    }
    CHECK(rel_error(an.input, fd_in) < 1e-6);
  }
}

TEST_CASE("backward is linear in grad_output and zero for zero grad_output") {
  const MlpParams p = random_net({3, 8, 2}, 11);
  const Vec x{0.1, 0.2, -0.3};
  const auto [y, tape] = mlp_forward(p, x);
  const Vec zero{0, 0};
  CHECK(mtop::testing::all_zero(mlp_backward(p, tape, zero).params));
  const Vec g1{1.0, -2.0}, g2{0.5, 3.0}, g12{1.5, 1.0};
  MlpParams sum = mlp_backward(p, tape, g1).params;
  sum.add_scaled(mlp_backward(p, tape, g2).params, 1.0);
  CHECK(rel_error(sum, mlp_backward(p, tape, g12).params) < 1e-14);
}

TEST_CASE("stale or mismatched tapes are contract errors") {
  MlpParams p = random_net({2, 3, 1}, 5);
  const Vec x{1, 2};
  const auto [y, tape] = mlp_forward(p, x);
  const Vec g{1};
  const Vec g_bad{1, 2};
  CHECK_THROWS_AS(mlp_backward(p, tape, g_bad), DimensionError);
  const MlpParams other = random_net({2, 4, 1}, 5);
  CHECK_THROWS_AS(mlp_backward(other, tape, g), ContractError);
  AdamState st = AdamState::for_params(p);
  adam_step(st, p, mlp_backward(p, tape, g).params);
  CHECK_THROWS_AS(mlp_backward(p, tape, g), ContractError);
}

TEST_CASE("adam step one is sign(g) * lr") {
  const std::vector<std::size_t> w{1, 1};
  MlpParams p = MlpParams::zeros(w);
  MlpParams g = p.zeros_like();
  g.layer(0).weight(0, 0) = 1.0;

  AdamHyper h;
  h.lr = 0.1;
  h.eps = 0.0;
  MlpParams q = p;
  AdamState st = AdamState::for_params(q, h);
  adam_step(st, q, g);
  CHECK(q.layer(0).weight(0, 0) == -0.1);
  CHECK(st.step == 1);

  // The default epsilon shaves 0.1 * 1e-8 / (1 + 1e-8) off the step.
  h.eps = 1e-8;
  MlpParams r = p;
  AdamState st2 = AdamState::for_params(r, h);
  adam_step(st2, r, g);
  CHECK(std::abs(r.layer(0).weight(0, 0) + 0.1) < 1e-8);
}

TEST_CASE("adam matches a scalar reference over several steps") {
  MlpParams p = random_net({2, 1}, 21);
  AdamHyper h;
  h.lr = 0.05;
  AdamState st = AdamState::for_params(p, h);
  const double w0 = p.layer(0).weight(0, 1);
  double ref = w0, m = 0.0, v = 0.0;
  const double grads[] = {0.3, -1.2, 0.7, 2.5};
  for (int t = 1; t <= 4; ++t) {
    MlpParams g = p.zeros_like();
    g.layer(0).weight(0, 1) = grads[t - 1];
    adam_step(st, p, g);
    m = h.beta1 * m + (1 - h.beta1) * grads[t - 1];
    v = h.beta2 * v + (1 - h.beta2) * grads[t - 1] * grads[t - 1];
    const double mh = m / (1 - std::pow(h.beta1, t));
    const double vh = v / (1 - std::pow(h.beta2, t));
    ref -= h.lr * mh / (std::sqrt(vh) + h.eps);
    CHECK(p.layer(0).weight(0, 1) == doctest::Approx(ref).epsilon(1e-14));
  }
}

TEST_CASE("adam with zero gradients leaves parameters and decays moments") {
  MlpParams p = random_net({3, 4, 2}, 2);
  const MlpParams before = p;
  AdamState st = AdamState::for_params(p);
  MlpParams g = p.zeros_like();
  g.layer(0).bias[0] = 1.0;
  adam_step(st, p, g);
  const double m1 = st.m.layer(0).bias[0];
  MlpParams q = before;
  AdamState st_zero = AdamState::for_params(q);
  adam_step(st_zero, q, q.zeros_like());
  CHECK(q.same_values(before));
  adam_step(st, p, p.zeros_like());
  CHECK(std::abs(st.m.layer(0).bias[0]) < std::abs(m1));
}

TEST_CASE("identical tensors with identical gradients update identically") {
  const MlpParams a0 = random_net({3, 3}, 8);
  MlpParams a = a0, b = a0;
  Rng rng(1);
  MlpParams g = a.zeros_like();
  for (auto blk : g.blocks())
    for (double& x : blk) x = rng.normal();
  AdamState sa = AdamState::for_params(a), sb = AdamState::for_params(b);
  adam_step(sa, a, g);
  adam_step(sb, b, g);
  CHECK(a.same_values(b));
}

TEST_CASE("adam rejects non-finite gradients without touching parameters") {
  MlpParams p = random_net({2, 3, 1}, 4);
  const MlpParams before = p;
  AdamState st = AdamState::for_params(p);
  MlpParams g = p.zeros_like();
  g.layer(1).weight(0, 2) = std::numeric_limits<double>::infinity();
  try {
    adam_step(st, p, g);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("layer 1") != std::string::npos);
    CHECK(msg.find("weight") != std::string::npos);
  }
  CHECK(p.same_values(before));
  CHECK(st.step == 0);
}

TEST_CASE("finite differences on simple functions") {
  const std::vector<std::size_t> w{1, 1};
  MlpParams p = MlpParams::zeros(w);
  p.layer(0).weight(0, 0) = 3.0;
  const MlpParams g = finite_diff_grad(
      [](const MlpParams& q) { return q.layer(0).weight(0, 0) * q.layer(0).weight(0, 0); }, p, 1e-5);
  CHECK(std::abs(g.layer(0).weight(0, 0) - 6.0) < 1e-8);
  CHECK(mtop::testing::all_zero(finite_diff_grad([](const MlpParams&) { return 4.0; }, p, 1e-5)));
}

TEST_CASE("identical seeds give identical forward, backward and adam trajectories") {
  auto run = [] {
    MlpParams p = random_net({4, 8, 2}, 77);
    AdamState st = AdamState::for_params(p);
    Rng rng(5);
    for (int i = 0; i < 20; ++i) {
      const Vec x = random_vec(4, rng);
      const auto [y, tape] = mlp_forward(p, x);
      adam_step(st, p, mlp_backward(p, tape, y).params);
    }
    return p;
  };
  CHECK(run().same_values(run()));
}

TEST_CASE("checkpoint round trip and corruption") {
  Checkpoint ck;
  const MlpParams p = random_net({3, 5, 2}, 9);
  ck.put_mlp("net", p);
  ck.put_reals("stats", {1.5, -2.25, 1e-300});
  ck.put_text("note", "hello");
  ck.put_u64s("ids", {1, 2, 0xffffffffffffffffULL});
  const auto bytes = ck.serialize();
  const Checkpoint back = Checkpoint::deserialize(bytes);
  CHECK(back.mlp("net").same_values(p));
  CHECK(back.mlp("net").layer(0).activation == Activation::kTanh);
  CHECK(back.reals("stats") == Vec{1.5, -2.25, 1e-300});
  CHECK(back.text("note") == "hello");
  CHECK(back.u64s("ids")[2] == 0xffffffffffffffffULL);
  CHECK(back.serialize() == bytes);

  CHECK_THROWS_AS(back.mlp("missing"), ContractError);
  CHECK_THROWS_AS(back.text("net"), ContractError);

  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(Checkpoint::deserialize(bad), IoError);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  CHECK_THROWS_AS(Checkpoint::deserialize(truncated), IoError);
  auto version = bytes;
  version[8] = 99;
  CHECK_THROWS_AS(Checkpoint::deserialize(version), IoError);
  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(Checkpoint::deserialize(trailing), IoError);
}

TEST_CASE("checkpoint files") {
  const std::string dir = mtop::testing::scratch_dir("ckpt");
  Checkpoint ck;
  ck.put_text("k", "v");
  ck.save(dir + "/a.ckpt");
  CHECK(Checkpoint::load(dir + "/a.ckpt").text("k") == "v");
  CHECK_THROWS_AS(Checkpoint::load(dir + "/missing.ckpt"), IoError);
}
