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

#include "mtop/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "mtop/error.hpp"

namespace mtop {
namespace {

constexpr double kProbFloor = 1e-12;

std::size_t dense_params(std::size_t in, std::size_t out) { return in * out + out; }

std::size_t expert_params(const PolicyDims& d, std::size_t hidden) {
  std::size_t n = dense_params(d.expert_input_width(), hidden);
  for (std::size_t l = 1; l < d.expert_layers; ++l) n += dense_params(hidden, hidden);
  return n + dense_params(hidden, d.chunk_width());
}

std::vector<std::size_t> expert_widths(const PolicyDims& d, std::size_t hidden) {
  std::vector<std::size_t> w{d.expert_input_width()};
  for (std::size_t l = 0; l < d.expert_layers; ++l) w.push_back(hidden);
  w.push_back(d.chunk_width());
  return w;
}

void check_len(std::span<const double> v, std::size_t want, const char* what) {
  if (v.size() != want) {
    std::ostringstream os;
    os << what << ": length " << v.size() << ", expected " << want;
    throw DimensionError(os.str());
  }
}

std::size_t expert_slot(const PolicyModel& m, PhaseLabel y) {
  return m.routed() ? static_cast<std::size_t>(y) : 0;
}

}  // namespace

const char* architecture_name(Architecture a) {
  return a == Architecture::kDualExpert ? "DualExpert" : "Monolithic";
}

std::optional<Architecture> parse_architecture(std::string_view s) {
  if (s == "DualExpert" || s == "dual") return Architecture::kDualExpert;
  if (s == "Monolithic" || s == "mono") return Architecture::kMonolithic;
  return std::nullopt;
}

const char* routing_mode_name(RoutingMode m) {
  switch (m) {
    case RoutingMode::kOriginal: return "Original";
    case RoutingMode::kRandom: return "Random";
    case RoutingMode::kReversal: return "Reversal";
  }
  return "?";
}

std::optional<RoutingMode> parse_routing_mode(std::string_view s) {
  if (s == "Original" || s == "original") return RoutingMode::kOriginal;
  if (s == "Random" || s == "random") return RoutingMode::kRandom;
  if (s == "Reversal" || s == "reversal") return RoutingMode::kReversal;
  return std::nullopt;
}

Normalizer Normalizer::fit(std::span<const Vec> rows) {
  if (rows.empty()) throw ContractError("Normalizer::fit: no rows");
  const std::size_t d = rows.front().size();
  Normalizer n;
  n.mean.assign(d, 0.0);
  n.stddev.assign(d, 0.0);
  for (const Vec& r : rows) {
    check_len(r, d, "Normalizer::fit row");
    for (std::size_t j = 0; j < d; ++j) n.mean[j] += r[j];
  }
  for (double& m : n.mean) m /= static_cast<double>(rows.size());
  for (const Vec& r : rows)
    for (std::size_t j = 0; j < d; ++j) n.stddev[j] += (r[j] - n.mean[j]) * (r[j] - n.mean[j]);
  for (double& s : n.stddev) s = std::max(kMinStd, std::sqrt(s / static_cast<double>(rows.size())));
  return n;
}

Vec Normalizer::normalize(std::span<const double> row) const {
  check_len(row, mean.size(), "Normalizer::normalize");
  Vec out(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) out[j] = (row[j] - mean[j]) / stddev[j];
  return out;
}

Vec Normalizer::denormalize(std::span<const double> row) const {
  check_len(row, mean.size(), "Normalizer::denormalize");
  Vec out(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) out[j] = row[j] * stddev[j] + mean[j];
  return out;
}

std::size_t PolicyDims::slot_width() const {
  return std::max({instruction, observation, proprio});
}

std::size_t monolithic_hidden_width(const PolicyDims& dims) {
  const std::size_t router = dense_params(dims.token_dim, dims.router_hidden) +
                             dense_params(dims.router_hidden, 2);
  const std::size_t target = 2 * expert_params(dims, dims.expert_hidden) + router;
  std::size_t best = 1;
  std::size_t best_gap = std::numeric_limits<std::size_t>::max();
  for (std::size_t h = 1; h <= 8 * dims.expert_hidden + 64; ++h) {
    const std::size_t p = expert_params(dims, h);
    const std::size_t gap = p > target ? p - target : target - p;
    if (gap < best_gap) {
      best_gap = gap;
      best = h;
    }
  }
  return best;
}

PolicyModel PolicyModel::create(const PolicyDims& dims, Rng& rng) {
  if (dims.instruction == 0 || dims.observation == 0 || dims.proprio == 0 ||
      dims.horizon == 0 || dims.action_dim == 0 || dims.token_dim == 0 ||
      dims.encoder_hidden == 0 || dims.expert_hidden == 0 || dims.expert_layers == 0)
    throw ConfigError("policy dimensions must be positive");
  PolicyModel m;
  m.dims = dims;
  const std::vector<std::size_t> enc{dims.token_input_width(), dims.encoder_hidden,
                                     dims.token_dim};
  m.encoder = MlpParams::init_uniform(enc, rng);
  if (dims.arch == Architecture::kDualExpert) {
    if (dims.router_hidden == 0) throw ConfigError("router_hidden must be positive");
    const std::vector<std::size_t> rw{dims.token_dim, dims.router_hidden, 2};
    m.router = MlpParams::init_uniform(rw, rng);
    const auto ew = expert_widths(dims, dims.expert_hidden);
    m.experts.push_back(MlpParams::init_uniform(ew, rng));
    m.experts.push_back(MlpParams::init_uniform(ew, rng));
    // Disjoint stores: no weight or bias buffer may be shared.
    const auto a = m.experts[0].blocks();
    const auto b = m.experts[1].blocks();
    for (const auto& x : a)
      for (const auto& y : b)
        if (x.data() == y.data()) throw ContractError("expert parameter stores alias");
  } else {
    m.experts.push_back(
        MlpParams::init_uniform(expert_widths(dims, monolithic_hidden_width(dims)), rng));
  }
  const std::size_t d = dims.action_dim;
  m.normalizer.mean.assign(d, 0.0);
  m.normalizer.stddev.assign(d, 1.0);
  return m;
}

const MlpParams& PolicyModel::expert(PhaseLabel y) const { return experts[expert_slot(*this, y)]; }
MlpParams& PolicyModel::expert(PhaseLabel y) { return experts[expert_slot(*this, y)]; }

std::size_t PolicyModel::param_count() const {
  std::size_t n = encoder.param_count() + router.param_count();
  for (const auto& e : experts) n += e.param_count();
  return n;
}

Matrix token_inputs(const PolicyDims& dims, const ContextFrame& c) {
  check_len(c.instruction, dims.instruction, "instruction features");
  check_len(c.observation, dims.observation, "observation features");
  check_len(c.proprio, dims.proprio, "proprio state");
  const std::size_t w = dims.slot_width();
  Matrix t(kNumTokenSlots, dims.token_input_width());
  const std::array<const Vec*, kNumTokenSlots> slots{&c.instruction, &c.observation, &c.proprio};
  for (std::size_t s = 0; s < kNumTokenSlots; ++s) {
    std::copy(slots[s]->begin(), slots[s]->end(), t.row(s).begin());
    t(s, w + s) = 1.0;
  }
  return t;
}

Matrix encode_context(const PolicyModel& model, const ContextFrame& c) {
  return std::move(mlp_forward_batch(model.encoder, token_inputs(model.dims, c)).values.back());
}

Vec pool_features(const Matrix& features, std::span<const bool> mask) {
  if (mask.size() != features.rows())
    throw DimensionError("pool_features: mask length does not match token count");
  Vec f(features.cols(), 0.0);
  std::size_t n = 0;
  for (std::size_t r = 0; r < features.rows(); ++r) {
    if (!mask[r]) continue;
    ++n;
    for (std::size_t j = 0; j < f.size(); ++j) f[j] += features(r, j);
  }
  if (n == 0) throw ContractError("pool_features: mask selects no token");
  for (double& x : f) x /= static_cast<double>(n);
  return f;
}

std::array<double, 2> softmax2(double move_logit, double operate_logit) {
  const double m = std::max(move_logit, operate_logit);
  const double a = std::exp(move_logit - m);
  const double b = std::exp(operate_logit - m);
  const double s = a + b;
  return {a / s, b / s};
}

std::array<double, 2> route(const PolicyModel& model, std::span<const double> pooled) {
  if (!model.routed()) throw ContractError("route: model has no router");
  check_len(pooled, model.dims.token_dim, "pooled features");
  const auto [logits, tape] = mlp_forward(model.router, pooled);
  return softmax2(logits[0], logits[1]);
}

PhaseLabel greedy_select(const std::array<double, 2>& probs) {
  return probs[1] > probs[0] ? PhaseLabel::kOperate : PhaseLabel::kMove;
}

Vec masked_velocity(const PolicyModel& model, PhaseLabel y, double sigma,
                    std::span<const double> x_sigma, std::span<const double> pooled) {
  if (!(sigma >= 0.0 && sigma <= 1.0)) throw DomainError("masked_velocity: sigma outside [0, 1]");
  check_len(x_sigma, model.dims.chunk_width(), "x_sigma");
  check_len(pooled, model.dims.token_dim, "pooled features");
  Vec in;
  in.reserve(model.dims.expert_input_width());
  in.push_back(sigma);
  in.insert(in.end(), x_sigma.begin(), x_sigma.end());
  in.insert(in.end(), pooled.begin(), pooled.end());
  return mlp_forward(model.expert(y), in).first;
}

double action_loss(const Matrix& v_pred, const Matrix& u, const Matrix& mask, double eps) {
  if (v_pred.rows() != u.rows() || v_pred.cols() != u.cols() || mask.rows() != u.rows() ||
      mask.cols() != u.cols())
    throw DimensionError("action_loss: shape mismatch");
  if (!(eps > 0.0)) throw ContractError("action_loss: eps must be positive");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double m = mask.data()[i];
    if (m == 0.0) continue;
    const double r = v_pred.data()[i] - u.data()[i];
    num += m * r * r;
    den += m;
  }
  return num / (den + eps);
}

double router_loss(const std::array<double, 2>& probs, PhaseLabel y) {
  return -std::log(std::max(probs[static_cast<std::size_t>(y)], kProbFloor));
}

std::vector<FlowDraw> draw_flows(std::span<const TrainExample> batch, Rng& rng,
                                 std::size_t chunk_width) {
  std::vector<FlowDraw> out(batch.size());
  for (FlowDraw& f : out) {
    f.sigma = rng.uniform();
    f.x0.resize(chunk_width);
    for (double& x : f.x0) x = rng.normal();
  }
  return out;
}

Objective evaluate_objective(const PolicyModel& model, std::span<const TrainExample> batch,
                             std::span<const FlowDraw> flows, bool with_grads) {
  const PolicyDims& d = model.dims;
  const std::size_t B = batch.size();
  if (B == 0) throw ContractError("evaluate_objective: empty batch");
  if (flows.size() != B) throw DimensionError("evaluate_objective: flow count != batch size");
  const std::size_t L = kNumTokenSlots;
  const std::size_t D = d.token_dim;
  const std::size_t C = d.chunk_width();

  // Shared encoder over all B*L token rows.
  Matrix tokens(B * L, d.token_input_width());
  for (std::size_t b = 0; b < B; ++b) {
    if (batch[b].context == nullptr) throw ContractError("training example without context");
    check_len(batch[b].action, C, "training action");
    check_len(batch[b].mask, C, "training mask");
    check_len(flows[b].x0, C, "flow x0");
    const Matrix t = token_inputs(d, *batch[b].context);
    for (std::size_t s = 0; s < L; ++s)
      std::copy(t.row(s).begin(), t.row(s).end(), tokens.row(b * L + s).begin());
  }
  const MlpTape enc_tape = mlp_forward_batch(model.encoder, std::move(tokens));
  const Matrix& F = enc_tape.output();

  Matrix pooled(B, D);
  std::vector<double> counts(B, 0.0);
  for (std::size_t b = 0; b < B; ++b) {
    const auto& mask = batch[b].context->token_mask;
    for (std::size_t s = 0; s < L; ++s) {
      if (!mask[s]) continue;
      counts[b] += 1.0;
      for (std::size_t j = 0; j < D; ++j) pooled(b, j) += F(b * L + s, j);
    }
    if (counts[b] == 0.0) throw ContractError("pool_features: mask selects no token");
    for (std::size_t j = 0; j < D; ++j) pooled(b, j) /= counts[b];
  }

  Objective obj;
  Matrix grad_pooled(B, D);
  if (with_grads) {
    obj.grads.encoder = model.encoder.zeros_like();
    obj.grads.router = model.router.zeros_like();
    for (const auto& e : model.experts) obj.grads.experts.push_back(e.zeros_like());
    obj.grads.expert_active.assign(model.experts.size(), false);
  }

  // Router head.
  if (model.routed()) {
    const MlpTape r_tape = mlp_forward_batch(model.router, pooled);
    const Matrix& logits = r_tape.output();
    Matrix g_logits(B, 2);
    double ce = 0.0;
    std::size_t correct = 0;
    for (std::size_t b = 0; b < B; ++b) {
      const auto p = softmax2(logits(b, 0), logits(b, 1));
      const auto y = static_cast<std::size_t>(batch[b].label);
      ce += router_loss(p, batch[b].label);
      if (greedy_select(p) == batch[b].label) ++correct;
      // d(-log p_y)/d logits = p - onehot(y); the floor is inactive for p_y > 1e-12.
      const double scale = model.lambda / static_cast<double>(B);
      for (std::size_t k = 0; k < 2; ++k) {
        double g = p[k] - (k == y ? 1.0 : 0.0);
        if (k == y && p[y] < kProbFloor) g = 0.0;
        g_logits(b, k) = scale * g;
      }
      if (p[y] < kProbFloor) g_logits(b, 1 - y) = 0.0;
    }
    obj.loss.router = ce / static_cast<double>(B);
    obj.loss.router_accuracy = static_cast<double>(correct) / static_cast<double>(B);
    if (with_grads && model.lambda != 0.0) {
      Matrix g_in;
      mlp_backward_accumulate(model.router, r_tape, g_logits, obj.grads.router, &g_in);
      for (std::size_t i = 0; i < grad_pooled.size(); ++i) grad_pooled.data()[i] += g_in.data()[i];
    }
  } else {
    obj.loss.router = 0.0;
    obj.loss.router_accuracy = std::numeric_limits<double>::quiet_NaN();
  }

  // Experts under teacher forcing; mask denominator is batch-wide.
  double den = 0.0;
  for (const auto& ex : batch)
    for (double m : ex.mask) den += m;
  den += model.mask_eps;
  double num = 0.0;
  for (std::size_t e = 0; e < model.experts.size(); ++e) {
    std::vector<std::size_t> idx;
    for (std::size_t b = 0; b < B; ++b)
      if (expert_slot(model, batch[b].label) == e) idx.push_back(b);
    if (idx.empty()) continue;
    Matrix in(idx.size(), d.expert_input_width());
    Matrix u(idx.size(), C);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const std::size_t b = idx[i];
      const FlowDraw& fl = flows[b];
      auto row = in.row(i);
      row[0] = fl.sigma;
      for (std::size_t j = 0; j < C; ++j) {
        const double a = batch[b].action[j];
        row[1 + j] = (1.0 - fl.sigma) * fl.x0[j] + fl.sigma * a;
        u(i, j) = a - fl.x0[j];
      }
      for (std::size_t j = 0; j < D; ++j) row[1 + C + j] = pooled(b, j);
    }
    const MlpTape tape = mlp_forward_batch(model.experts[e], std::move(in));
    const Matrix& v = tape.output();
    Matrix g_v(idx.size(), C);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const Vec& m = batch[idx[i]].mask;
      for (std::size_t j = 0; j < C; ++j) {
        if (m[j] == 0.0) continue;
        const double r = v(i, j) - u(i, j);
        num += m[j] * r * r;
        g_v(i, j) = 2.0 * m[j] * r / den;
      }
    }
    if (with_grads) {
      obj.grads.expert_active[e] = true;
      Matrix g_in;
      mlp_backward_accumulate(model.experts[e], tape, g_v, obj.grads.experts[e], &g_in);
      for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < D; ++j) grad_pooled(idx[i], j) += g_in(i, 1 + C + j);
    }
  }
  obj.loss.action = num / den;
  obj.loss.total = obj.loss.action + (model.routed() ? model.lambda * obj.loss.router : 0.0);

  if (with_grads) {
    Matrix g_F(B * L, D);
    for (std::size_t b = 0; b < B; ++b) {
      const auto& mask = batch[b].context->token_mask;
      for (std::size_t s = 0; s < L; ++s) {
        if (!mask[s]) continue;
        for (std::size_t j = 0; j < D; ++j) g_F(b * L + s, j) = grad_pooled(b, j) / counts[b];
      }
    }
    mlp_backward_accumulate(model.encoder, enc_tape, g_F, obj.grads.encoder, nullptr);
  }
  return obj;
}

PolicyOptimizer PolicyOptimizer::create(const PolicyModel& model, AdamHyper hyper) {
  PolicyOptimizer o;
  o.encoder = AdamState::for_params(model.encoder, hyper);
  o.router = AdamState::for_params(model.router, hyper);
  for (const auto& e : model.experts) o.experts.push_back(AdamState::for_params(e, hyper));
  return o;
}

LossReport train_step(PolicyModel& model, std::span<const TrainExample> batch, Rng& rng,
                      PolicyOptimizer& opt, double lr) {
  if (batch.empty()) throw ContractError("train_step: empty batch");
  if (opt.experts.size() != model.experts.size())
    throw ContractError("train_step: optimizer does not match model");
  const auto flows = draw_flows(batch, rng, model.dims.chunk_width());
  Objective obj = evaluate_objective(model, batch, flows, true);
  if (!std::isfinite(obj.loss.total)) {
    std::size_t moves = 0;
    for (const auto& ex : batch) moves += ex.label == PhaseLabel::kMove ? 1 : 0;
    std::ostringstream os;
    os << "non-finite loss: action=" << obj.loss.action << " router=" << obj.loss.router
       << " batch=" << batch.size() << " (move " << moves << ", operate "
       << batch.size() - moves << ")";
    throw NumericError(os.str());
  }
  opt.encoder.hyper.lr = lr;
  adam_step(opt.encoder, model.encoder, obj.grads.encoder);
  if (model.routed() && model.lambda != 0.0) {
    opt.router.hyper.lr = lr;
    adam_step(opt.router, model.router, obj.grads.router);
  }
  for (std::size_t e = 0; e < model.experts.size(); ++e) {
    if (!obj.grads.expert_active[e]) continue;
    opt.experts[e].hyper.lr = lr;
    adam_step(opt.experts[e], model.experts[e], obj.grads.experts[e]);
  }
  return obj.loss;
}

InferResult infer_action(const PolicyModel& model, const ContextFrame& c, Rng& rng,
                         const OdeConfig& ode, RoutingMode mode) {
  const Vec f = pool_features(encode_context(model, c), c.token_mask);
  InferResult r;
  PhaseLabel z = PhaseLabel::kMove;
  if (model.routed()) {
    r.routed = true;
    r.probs = route(model, f);
    z = greedy_select(r.probs);
    if (mode == RoutingMode::kRandom) {
      z = rng.uniform() < 0.5 ? PhaseLabel::kMove : PhaseLabel::kOperate;
    } else if (mode == RoutingMode::kReversal) {
      z = opposite(z);
    }
  }
  r.phase = z;
  const MlpParams& expert = model.expert(z);
  const std::size_t C = model.dims.chunk_width();
  Vec x0(C);
  for (double& x : x0) x = rng.normal();
  Vec in(model.dims.expert_input_width());
  std::copy(f.begin(), f.end(), in.begin() + 1 + static_cast<std::ptrdiff_t>(C));
  const VelocityField field = [&](double sigma, std::span<const double> x) {
    in[0] = sigma;
    std::copy(x.begin(), x.end(), in.begin() + 1);
    return mlp_forward(expert, in).first;
  };
  const Vec a = integrate(field, x0, ode);
  const std::size_t H = model.dims.horizon;
  const std::size_t dim = model.dims.action_dim;
  r.chunk.actions = Matrix(H, dim);
  for (std::size_t h = 0; h < H; ++h) {
    const Vec row = model.normalizer.denormalize(std::span<const double>(a).subspan(h * dim, dim));
    std::copy(row.begin(), row.end(), r.chunk.actions.row(h).begin());
  }
  return r;
}

void save_policy(const PolicyModel& model, Checkpoint& ck) {
  const PolicyDims& d = model.dims;
  ck.put_u64s("policy.dims",
              {d.instruction, d.observation, d.proprio, d.horizon, d.action_dim, d.token_dim,
               d.encoder_hidden, d.router_hidden, d.expert_hidden, d.expert_layers,
               static_cast<std::uint64_t>(d.arch)});
  ck.put_mlp("policy.encoder", model.encoder);
  if (model.routed()) {
    ck.put_mlp("policy.router", model.router);
    ck.put_mlp("policy.expert_move", model.experts[0]);
    ck.put_mlp("policy.expert_operate", model.experts[1]);
  } else {
    ck.put_mlp("policy.expert", model.experts[0]);
  }
  ck.put_reals("policy.normalizer.mean", model.normalizer.mean);
  ck.put_reals("policy.normalizer.std", model.normalizer.stddev);
  ck.put_reals("policy.lambda_eps", {model.lambda, model.mask_eps});
}

PolicyModel load_policy(const Checkpoint& ck) {
  const auto& u = ck.u64s("policy.dims");
  if (u.size() != 11) throw IoError("checkpoint: policy.dims has wrong length");
  PolicyModel m;
  PolicyDims& d = m.dims;
  d.instruction = u[0];
  d.observation = u[1];
  d.proprio = u[2];
  d.horizon = u[3];
  d.action_dim = u[4];
  d.token_dim = u[5];
  d.encoder_hidden = u[6];
  d.router_hidden = u[7];
  d.expert_hidden = u[8];
  d.expert_layers = u[9];
  if (u[10] > 1) throw IoError("checkpoint: unknown architecture tag");
  d.arch = static_cast<Architecture>(u[10]);
  m.encoder = ck.mlp("policy.encoder");
  if (m.routed()) {
    m.router = ck.mlp("policy.router");
    m.experts = {ck.mlp("policy.expert_move"), ck.mlp("policy.expert_operate")};
  } else {
    m.experts = {ck.mlp("policy.expert")};
  }
  if (m.encoder.input_width() != d.token_input_width() || m.encoder.output_width() != d.token_dim)
    throw DimensionError("checkpoint: encoder shape does not match policy.dims");
  for (const auto& e : m.experts)
    if (e.input_width() != d.expert_input_width() || e.output_width() != d.chunk_width())
      throw DimensionError("checkpoint: expert shape does not match policy.dims");
  m.normalizer.mean = ck.reals("policy.normalizer.mean");
  m.normalizer.stddev = ck.reals("policy.normalizer.std");
  if (m.normalizer.mean.size() != d.action_dim || m.normalizer.stddev.size() != d.action_dim)
    throw DimensionError("checkpoint: normalizer length does not match action_dim");
  const auto& le = ck.reals("policy.lambda_eps");
  if (le.size() != 2) throw IoError("checkpoint: policy.lambda_eps has wrong length");
  m.lambda = le[0];
  m.mask_eps = le[1];
  return m;
}

namespace {

void put_adam(Checkpoint& ck, const std::string& name, const AdamState& s) {
  ck.put_mlp(name + ".m", s.m);
  ck.put_mlp(name + ".v", s.v);
  ck.put_reals(name + ".hyper", {s.hyper.lr, s.hyper.beta1, s.hyper.beta2, s.hyper.eps});
  ck.put_u64s(name + ".step", {s.step});
}

AdamState get_adam(const Checkpoint& ck, const std::string& name, const MlpParams& like) {
  AdamState s;
  s.m = ck.mlp(name + ".m");
  s.v = ck.mlp(name + ".v");
  if (s.m.widths() != like.widths() || s.v.widths() != like.widths())
    throw DimensionError("checkpoint: optimizer moments for " + name + " have wrong shape");
  const auto& h = ck.reals(name + ".hyper");
  const auto& st = ck.u64s(name + ".step");
  if (h.size() != 4 || st.size() != 1) throw IoError("checkpoint: malformed " + name);
  s.hyper = {h[0], h[1], h[2], h[3]};
  s.step = st[0];
  return s;
}

}  // namespace

void save_optimizer(const PolicyOptimizer& opt, Checkpoint& ck) {
  put_adam(ck, "opt.encoder", opt.encoder);
  put_adam(ck, "opt.router", opt.router);
  for (std::size_t e = 0; e < opt.experts.size(); ++e)
    put_adam(ck, "opt.expert" + std::to_string(e), opt.experts[e]);
}

PolicyOptimizer load_optimizer(const Checkpoint& ck, const PolicyModel& model) {
  PolicyOptimizer o;
  o.encoder = get_adam(ck, "opt.encoder", model.encoder);
  o.router = get_adam(ck, "opt.router", model.router);
  for (std::size_t e = 0; e < model.experts.size(); ++e)
    o.experts.push_back(get_adam(ck, "opt.expert" + std::to_string(e), model.experts[e]));
  return o;
}

}  // namespace mtop
