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

#ifndef MTOP_NUMCORE_HPP_
#define MTOP_NUMCORE_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "mtop/rng.hpp"

namespace mtop {

using Vec = std::vector<double>;

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  static Matrix from_rows(std::span<const Vec> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  void fill(double v);
  bool all_finite() const;
  Matrix transposed() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vec data_;
};

enum class Activation : std::uint8_t { kLinear = 0, kTanh = 1 };

// One affine layer y = act(W x + b) with W shaped (out x in).
struct Layer {
  Matrix weight;
  Vec bias;
  Activation activation = Activation::kLinear;

  std::size_t in_width() const { return weight.cols(); }
  std::size_t out_width() const { return weight.rows(); }
  friend bool operator==(const Layer&, const Layer&) = default;
};

// Multilayer perceptron parameters: tanh hidden layers, linear output.
// Gradients and optimizer moments reuse this type ("MlpParams-shaped").
class MlpParams {
 public:
  MlpParams() = default;
  explicit MlpParams(std::vector<Layer> layers);

  // widths = {in, hidden..., out}. Weights and biases drawn from
  // U[-1/sqrt(fan_in), 1/sqrt(fan_in)].
  static MlpParams init_uniform(std::span<const std::size_t> widths, Rng& rng);
  static MlpParams zeros(std::span<const std::size_t> widths);
  MlpParams zeros_like() const;

  bool empty() const { return layers_.empty(); }
  std::size_t num_layers() const { return layers_.size(); }
  std::size_t input_width() const;
  std::size_t output_width() const;
  std::size_t param_count() const;
  std::vector<std::size_t> widths() const;

  const std::vector<Layer>& layers() const { return layers_; }
  Layer& layer(std::size_t i) { return layers_[i]; }
  const Layer& layer(std::size_t i) const { return layers_[i]; }

  // Weight block then bias block for each layer, in layer order.
  std::vector<std::span<double>> blocks();
  std::vector<std::span<const double>> blocks() const;

  // Incremented by every in-place parameter update; tapes record it.
  std::uint64_t revision() const { return revision_; }
  void bump_revision() { ++revision_; }

  void set_zero();
  // this += scale * other; shapes must match.
  void add_scaled(const MlpParams& other, double scale);

  // Parameter equality; ignores the revision counter.
  bool same_values(const MlpParams& other) const { return layers_ == other.layers_; }

 private:
  void check_chain() const;

  std::vector<Layer> layers_;
  std::uint64_t revision_ = 0;
};

// Activation record of a forward pass: values[0] holds the inputs (one row per
// sample) and values[l + 1] holds the post-activation output of layer l.
struct MlpTape {
  std::vector<Matrix> values;
  std::uint64_t revision = 0;

  const Matrix& output() const { return values.back(); }
  std::size_t batch() const { return values.empty() ? 0 : values.front().rows(); }
};

// Batched forward pass; inputs has one sample per row.
MlpTape mlp_forward_batch(const MlpParams& params, Matrix inputs);

// Single-sample forward pass.
std::pair<Vec, MlpTape> mlp_forward(const MlpParams& params,
                                    std::span<const double> input);

// Reverse-mode pass. Adds d(sum_b output_b . grad_output_b)/d(params) into
// grad_acc and, when grad_input is non-null, writes the input gradient.
void mlp_backward_accumulate(const MlpParams& params, const MlpTape& tape,
                             const Matrix& grad_output, MlpParams& grad_acc,
                             Matrix* grad_input);

struct MlpGradients {
  MlpParams params;
  Vec input;
};

MlpGradients mlp_backward(const MlpParams& params, const MlpTape& tape,
                          std::span<const double> grad_output);

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  MlpParams m;
  MlpParams v;
  std::uint64_t step = 0;
  AdamHyper hyper;

  static AdamState for_params(const MlpParams& params, AdamHyper hyper = {});
};

// Bias-corrected Adam update. Throws NumericError (naming layer and index)
// before touching anything if a gradient entry is not finite.
void adam_step(AdamState& state, MlpParams& params, const MlpParams& grads);

// Central differences, one coordinate at a time. Test oracle.
MlpParams finite_diff_grad(const std::function<double(const MlpParams&)>& f,
                           const MlpParams& params, double eps);

}  // namespace mtop

#endif  // MTOP_NUMCORE_HPP_
