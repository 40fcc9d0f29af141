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

#ifndef MTOP_POLICY_HPP_
#define MTOP_POLICY_HPP_

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mtop/checkpoint.hpp"
#include "mtop/flowmatch.hpp"
#include "mtop/numcore.hpp"
#include "mtop/phase.hpp"
#include "mtop/rng.hpp"

namespace mtop {

// Token slots of the context encoder: instruction, observation, proprio.
inline constexpr std::size_t kNumTokenSlots = 3;

struct ContextFrame {
  Vec instruction;
  Vec observation;
  Vec proprio;
  std::array<bool, kNumTokenSlots> token_mask{true, true, true};
};

// H x d actions in environment units.
struct ActionChunk {
  Matrix actions;
};

// Per-dimension z-score statistics of action rows.
struct Normalizer {
  Vec mean;
  Vec stddev;  // floored at kMinStd

  static constexpr double kMinStd = 1e-6;
  static Normalizer fit(std::span<const Vec> rows);

  Vec normalize(std::span<const double> row) const;
  Vec denormalize(std::span<const double> row) const;
};

enum class Architecture { kDualExpert, kMonolithic };
enum class RoutingMode { kOriginal, kRandom, kReversal };

const char* architecture_name(Architecture a);
std::optional<Architecture> parse_architecture(std::string_view s);
const char* routing_mode_name(RoutingMode m);  // "Original" / "Random" / "Reversal"
std::optional<RoutingMode> parse_routing_mode(std::string_view s);

struct PolicyDims {
  std::size_t instruction = 2;
  std::size_t observation = 25;
  std::size_t proprio = 3;
  std::size_t horizon = 8;
  std::size_t action_dim = 3;
  std::size_t token_dim = 64;
  std::size_t encoder_hidden = 128;
  std::size_t router_hidden = 32;
  std::size_t expert_hidden = 128;
  std::size_t expert_layers = 2;
  Architecture arch = Architecture::kDualExpert;

  std::size_t slot_width() const;
  std::size_t token_input_width() const { return slot_width() + kNumTokenSlots; }
  std::size_t chunk_width() const { return horizon * action_dim; }
  std::size_t expert_input_width() const { return 1 + chunk_width() + token_dim; }
};

// Hidden width of the single monolithic expert whose parameter count is
// closest to that of the two dual experts combined.
std::size_t monolithic_hidden_width(const PolicyDims& dims);

struct PolicyModel {
  PolicyDims dims;
  MlpParams encoder;  // per token slot: slot features + slot one-hot -> token_dim
  MlpParams router;   // token_dim -> 2 logits; empty for kMonolithic
  // Indexed by PhaseLabel for kDualExpert; a single expert for kMonolithic.
  std::vector<MlpParams> experts;
  Normalizer normalizer;
  double lambda = 1.0;
  double mask_eps = 1e-8;

  static PolicyModel create(const PolicyDims& dims, Rng& rng);

  bool routed() const { return dims.arch == Architecture::kDualExpert; }
  const MlpParams& expert(PhaseLabel y) const;
  MlpParams& expert(PhaseLabel y);
  std::size_t param_count() const;
};

// Encoder input rows, one per token slot: zero-padded slot features followed
// by the slot one-hot.
Matrix token_inputs(const PolicyDims& dims, const ContextFrame& c);

// F in R^{L x D}.
Matrix encode_context(const PolicyModel& model, const ContextFrame& c);

// Mean of the rows selected by mask. ContractError if nothing is selected.
Vec pool_features(const Matrix& features, std::span<const bool> mask);

std::array<double, 2> softmax2(double move_logit, double operate_logit);

// p(z | f) over {Move, Operate}.
std::array<double, 2> route(const PolicyModel& model, std::span<const double> pooled);

// Argmax; an exact tie resolves to Move.
PhaseLabel greedy_select(const std::array<double, 2>& probs);

// Output of the expert selected by y on (sigma, x_sigma, f). The other expert
// is never evaluated.
Vec masked_velocity(const PolicyModel& model, PhaseLabel y, double sigma,
                    std::span<const double> x_sigma, std::span<const double> pooled);

// sum(M .* (v - u)^2) / (sum(M) + eps) over the whole batch.
double action_loss(const Matrix& v_pred, const Matrix& u, const Matrix& mask, double eps);

// -log p(y), probability floored at 1e-12.
double router_loss(const std::array<double, 2>& probs, PhaseLabel y);

struct TrainExample {
  const ContextFrame* context = nullptr;  // must outlive the batch
  Vec action;                             // normalized chunk, row-major H x d
  Vec mask;                               // 1 for real steps, 0 past trajectory end
  PhaseLabel label = PhaseLabel::kMove;
};

struct FlowDraw {
  double sigma = 0.0;
  Vec x0;
};

// Per example: sigma ~ U[0, 1) then x0 ~ N(0, I).
std::vector<FlowDraw> draw_flows(std::span<const TrainExample> batch, Rng& rng,
                                 std::size_t chunk_width);

struct LossReport {
  double action = 0.0;
  double router = 0.0;
  double total = 0.0;
  double router_accuracy = 0.0;  // NaN for unrouted models
};

struct PolicyGrads {
  MlpParams encoder;
  MlpParams router;
  std::vector<MlpParams> experts;
  std::vector<bool> expert_active;  // expert received at least one example
};

struct Objective {
  LossReport loss;
  PolicyGrads grads;
};

// L_total = L_action + lambda * L_router under teacher forcing: each example's
// velocity comes from the expert of its ground-truth label. Both terms
// backpropagate into the shared encoder.
Objective evaluate_objective(const PolicyModel& model, std::span<const TrainExample> batch,
                             std::span<const FlowDraw> flows, bool with_grads = true);

struct PolicyOptimizer {
  AdamState encoder;
  AdamState router;
  std::vector<AdamState> experts;

  static PolicyOptimizer create(const PolicyModel& model, AdamHyper hyper);
};

// One Adam update on the encoder, the router (skipped when lambda == 0) and
// the experts whose labels occur in the batch. Reports pre-update losses.
LossReport train_step(PolicyModel& model, std::span<const TrainExample> batch, Rng& rng,
                      PolicyOptimizer& opt, double lr);

struct InferResult {
  ActionChunk chunk;
  PhaseLabel phase = PhaseLabel::kMove;  // expert that generated the chunk
  bool routed = false;                   // false for the monolithic model
  std::array<double, 2> probs{0.5, 0.5};
};

// encode -> pool -> route -> select (or override) -> Euler-integrate the
// selected expert from x0 ~ N(0, I) -> denormalize. The expert is fixed for
// the whole integration. Random mode draws its coin before x0.
InferResult infer_action(const PolicyModel& model, const ContextFrame& c, Rng& rng,
                         const OdeConfig& ode, RoutingMode mode);

void save_policy(const PolicyModel& model, Checkpoint& ck);
PolicyModel load_policy(const Checkpoint& ck);
void save_optimizer(const PolicyOptimizer& opt, Checkpoint& ck);
PolicyOptimizer load_optimizer(const Checkpoint& ck, const PolicyModel& model);

}  // namespace mtop

#endif  // MTOP_POLICY_HPP_
