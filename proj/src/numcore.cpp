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

#include "mtop/numcore.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "mtop/error.hpp"

namespace mtop {

Matrix Matrix::from_rows(std::span<const Vec> rows) {
  if (rows.empty()) return {};
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols()) {
      throw DimensionError("Matrix::from_rows: row " + std::to_string(r) +
                           " has " + std::to_string(rows[r].size()) +
                           " entries, expected " + std::to_string(m.cols()));
    }
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  }
  return m;
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Matrix::all_finite() const {
  for (double x : data_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  }
  return t;
}

MlpParams::MlpParams(std::vector<Layer> layers) : layers_(std::move(layers)) {
  check_chain();
}

void MlpParams::check_chain() const {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    if (layer.bias.size() != layer.out_width()) {
      throw DimensionError("layer " + std::to_string(l) + ": bias length " +
                           std::to_string(layer.bias.size()) + " != out width " +
                           std::to_string(layer.out_width()));
    }
    if (l > 0 && layers_[l - 1].out_width() != layer.in_width()) {
      throw DimensionError("layer " + std::to_string(l) + ": input width " +
                           std::to_string(layer.in_width()) +
                           " does not chain with previous output width " +
                           std::to_string(layers_[l - 1].out_width()));
    }
  }
}

namespace {

std::vector<Layer> shaped_layers(std::span<const std::size_t> widths) {
  if (widths.size() < 2) {
    throw DimensionError("MLP needs at least an input and an output width");
  }
  std::vector<Layer> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    if (widths[l] == 0 || widths[l + 1] == 0) {
      throw DimensionError("MLP widths must be positive (layer " +
                           std::to_string(l) + ")");
    }
    Layer layer;
    layer.weight = Matrix(widths[l + 1], widths[l]);
    layer.bias.assign(widths[l + 1], 0.0);
    layer.activation =
        (l + 2 == widths.size()) ? Activation::kLinear : Activation::kTanh;
    layers.push_back(std::move(layer));
  }
  return layers;
}

}  // namespace

MlpParams MlpParams::init_uniform(std::span<const std::size_t> widths, Rng& rng) {
  MlpParams p(shaped_layers(widths));
  for (Layer& layer : p.layers_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in_width()));
    for (double& w : layer.weight.data()) w = rng.uniform(-bound, bound);
    for (double& b : layer.bias) b = rng.uniform(-bound, bound);
  }
  return p;
}

MlpParams MlpParams::zeros(std::span<const std::size_t> widths) {
  return MlpParams(shaped_layers(widths));
}

MlpParams MlpParams::zeros_like() const {
  MlpParams z = *this;
  z.set_zero();
  z.revision_ = 0;
  return z;
}

std::size_t MlpParams::input_width() const {
  return layers_.empty() ? 0 : layers_.front().in_width();
}

std::size_t MlpParams::output_width() const {
  return layers_.empty() ? 0 : layers_.back().out_width();
}

std::size_t MlpParams::param_count() const {
  std::size_t n = 0;
  for (const Layer& layer : layers_) n += layer.weight.size() + layer.bias.size();
  return n;
}

std::vector<std::size_t> MlpParams::widths() const {
  std::vector<std::size_t> w;
  if (layers_.empty()) return w;
  w.push_back(input_width());
  for (const Layer& layer : layers_) w.push_back(layer.out_width());
  return w;
}

std::vector<std::span<double>> MlpParams::blocks() {
  std::vector<std::span<double>> out;
  for (Layer& layer : layers_) {
    out.push_back(layer.weight.data());
    out.push_back(layer.bias);
  }
  return out;
}

std::vector<std::span<const double>> MlpParams::blocks() const {
  std::vector<std::span<const double>> out;
  for (const Layer& layer : layers_) {
    out.push_back(layer.weight.data());
    out.push_back(layer.bias);
  }
  return out;
}

void MlpParams::set_zero() {
  for (Layer& layer : layers_) {
    layer.weight.fill(0.0);
    std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
  }
}

void MlpParams::add_scaled(const MlpParams& other, double scale) {
  if (widths() != other.widths()) {
    throw DimensionError("add_scaled: parameter shapes differ");
  }
  auto dst = blocks();
  auto src = other.blocks();
  for (std::size_t b = 0; b < dst.size(); ++b) {
    for (std::size_t i = 0; i < dst[b].size(); ++i) dst[b][i] += scale * src[b][i];
  }
}

namespace {

// out(b, :) = bias + sum_k in(b, k) * W(:, k), summed in increasing k so the
// result is bit-identical to a sequential per-sample dot product.
void dense_forward(const Matrix& in, const Layer& layer, Matrix& out) {
  const std::size_t n_in = layer.in_width();
  const std::size_t n_out = layer.out_width();
  const Matrix wt = layer.weight.transposed();
  out = Matrix(in.rows(), n_out);
  for (std::size_t b = 0; b < in.rows(); ++b) {
    double* y = out.row(b).data();
    const double* x = in.row(b).data();
    for (std::size_t o = 0; o < n_out; ++o) y[o] = layer.bias[o];
    for (std::size_t k = 0; k < n_in; ++k) {
      const double xk = x[k];
      const double* w = wt.row(k).data();
      for (std::size_t o = 0; o < n_out; ++o) y[o] += xk * w[o];
    }
    if (layer.activation == Activation::kTanh) {
      for (std::size_t o = 0; o < n_out; ++o) y[o] = std::tanh(y[o]);
    }
  }
}

}  // namespace

MlpTape mlp_forward_batch(const MlpParams& params, Matrix inputs) {
  if (params.empty()) throw ContractError("mlp_forward: network has no layers");
  if (inputs.cols() != params.input_width()) {
    throw DimensionError("mlp_forward: layer 0 expects input width " +
                         std::to_string(params.input_width()) + ", got " +
                         std::to_string(inputs.cols()));
  }
  MlpTape tape;
  tape.revision = params.revision();
  tape.values.reserve(params.num_layers() + 1);
  tape.values.push_back(std::move(inputs));
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    Matrix out;
    dense_forward(tape.values.back(), params.layer(l), out);
    tape.values.push_back(std::move(out));
  }
  return tape;
}

std::pair<Vec, MlpTape> mlp_forward(const MlpParams& params,
                                    std::span<const double> input) {
  Matrix in(1, input.size());
  std::copy(input.begin(), input.end(), in.row(0).begin());
  MlpTape tape = mlp_forward_batch(params, std::move(in));
  const auto out = tape.output().row(0);
  return {Vec(out.begin(), out.end()), std::move(tape)};
}

namespace {

void check_tape(const MlpParams& params, const MlpTape& tape, const Matrix& grad_output) {
  if (tape.values.size() != params.num_layers() + 1) {
    throw ContractError("mlp_backward: tape has " +
                        std::to_string(tape.values.size()) +
                        " activation records for a " +
                        std::to_string(params.num_layers()) + "-layer network");
  }
  if (tape.revision != params.revision()) {
    throw ContractError("mlp_backward: stale tape (parameters updated since forward)");
  }
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    if (tape.values[l].cols() != params.layer(l).in_width() ||
        tape.values[l + 1].cols() != params.layer(l).out_width()) {
      throw ContractError("mlp_backward: tape does not match layer " + std::to_string(l));
    }
  }
  if (grad_output.rows() != tape.batch() || grad_output.cols() != params.output_width()) {
    throw DimensionError("mlp_backward: grad_output is " +
                         std::to_string(grad_output.rows()) + "x" +
                         std::to_string(grad_output.cols()) + ", expected " +
                         std::to_string(tape.batch()) + "x" +
                         std::to_string(params.output_width()));
  }
}

}  // namespace

void mlp_backward_accumulate(const MlpParams& params, const MlpTape& tape,
                             const Matrix& grad_output, MlpParams& grad_acc,
                             Matrix* grad_input) {
  check_tape(params, tape, grad_output);
  if (grad_acc.widths() != params.widths()) {
    throw DimensionError("mlp_backward: gradient accumulator shape mismatch");
  }
  const std::size_t batch = tape.batch();
  Matrix delta = grad_output;
  for (std::size_t li = params.num_layers(); li-- > 0;) {
    const Layer& layer = params.layer(li);
    Layer& grad = grad_acc.layer(li);
    const Matrix& in = tape.values[li];
    const Matrix& out = tape.values[li + 1];
    const std::size_t n_in = layer.in_width();
    const std::size_t n_out = layer.out_width();
    if (layer.activation == Activation::kTanh) {
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t o = 0; o < n_out; ++o) {
          const double y = out(b, o);
          delta(b, o) *= 1.0 - y * y;
        }
      }
    }
    for (std::size_t b = 0; b < batch; ++b) {
      const double* x = in.row(b).data();
      for (std::size_t o = 0; o < n_out; ++o) {
        const double d = delta(b, o);
        double* gw = grad.weight.row(o).data();
        for (std::size_t k = 0; k < n_in; ++k) gw[k] += d * x[k];
        grad.bias[o] += d;
      }
    }
    if (li == 0 && grad_input == nullptr) break;
    Matrix prev(batch, n_in);
    for (std::size_t b = 0; b < batch; ++b) {
      double* p = prev.row(b).data();
      for (std::size_t o = 0; o < n_out; ++o) {
        const double d = delta(b, o);
        const double* w = layer.weight.row(o).data();
        for (std::size_t k = 0; k < n_in; ++k) p[k] += d * w[k];
      }
    }
    delta = std::move(prev);
  }
  if (grad_input != nullptr) *grad_input = std::move(delta);
}

MlpGradients mlp_backward(const MlpParams& params, const MlpTape& tape,
                          std::span<const double> grad_output) {
  Matrix go(1, grad_output.size());
  std::copy(grad_output.begin(), grad_output.end(), go.row(0).begin());
  MlpGradients g{params.zeros_like(), {}};
  Matrix gi;
  mlp_backward_accumulate(params, tape, go, g.params, &gi);
  g.input.assign(gi.row(0).begin(), gi.row(0).end());
  return g;
}

AdamState AdamState::for_params(const MlpParams& params, AdamHyper hyper) {
  AdamState s;
  s.m = params.zeros_like();
  s.v = params.zeros_like();
  s.hyper = hyper;
  return s;
}

void adam_step(AdamState& state, MlpParams& params, const MlpParams& grads) {
  const auto shape = params.widths();
  if (grads.widths() != shape || state.m.widths() != shape || state.v.widths() != shape) {
    throw DimensionError("adam_step: parameter, gradient and moment shapes differ");
  }
  const auto g = grads.blocks();
  for (std::size_t b = 0; b < g.size(); ++b) {
    for (std::size_t i = 0; i < g[b].size(); ++i) {
      if (!std::isfinite(g[b][i])) {
        std::ostringstream msg;
        msg << "adam_step: non-finite gradient in layer " << b / 2 << ' '
            << (b % 2 == 0 ? "weight" : "bias") << " index " << i;
        throw NumericError(msg.str());
      }
    }
  }
  const AdamHyper& h = state.hyper;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(h.beta1, t);
  const double c2 = 1.0 - std::pow(h.beta2, t);
  auto p = params.blocks();
  auto m = state.m.blocks();
  auto v = state.v.blocks();
  for (std::size_t b = 0; b < p.size(); ++b) {
    for (std::size_t i = 0; i < p[b].size(); ++i) {
      const double gi = g[b][i];
      m[b][i] = h.beta1 * m[b][i] + (1.0 - h.beta1) * gi;
      v[b][i] = h.beta2 * v[b][i] + (1.0 - h.beta2) * gi * gi;
      const double m_hat = m[b][i] / c1;
      const double v_hat = v[b][i] / c2;
      p[b][i] -= h.lr * m_hat / (std::sqrt(v_hat) + h.eps);
    }
  }
  params.bump_revision();
}

MlpParams finite_diff_grad(const std::function<double(const MlpParams&)>& f,
                           const MlpParams& params, double eps) {
  if (!(eps > 0.0)) throw DomainError("finite_diff_grad: eps must be positive");
  MlpParams probe = params;
  MlpParams grad = params.zeros_like();
  auto pb = probe.blocks();
  auto gb = grad.blocks();
  for (std::size_t b = 0; b < pb.size(); ++b) {
    for (std::size_t i = 0; i < pb[b].size(); ++i) {
      const double saved = pb[b][i];
      pb[b][i] = saved + eps;
      const double up = f(probe);
      pb[b][i] = saved - eps;
      const double down = f(probe);
      pb[b][i] = saved;
      gb[b][i] = (up - down) / (2.0 * eps);
    }
  }
  return grad;
}

}  // namespace mtop
