// Copyright 2026 The sadp authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SADP_NN_HPP
#define SADP_NN_HPP

#include <functional>
#include <span>
#include <vector>

#include "sadp/rng.hpp"

namespace sadp {

using Vec = std::vector<double>;

struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

  double& operator()(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }
};

// Single-layer LSTM. Gate rows are stacked [input; forget; candidate; output],
// each block hidden_size tall.
struct LstmCell {
  int input_size = 0;
  int hidden_size = 0;
  Mat wx;  // 4H x D
  Mat wh;  // 4H x H
  Vec b;   // 4H

  // Uniform(-1/sqrt(H), 1/sqrt(H)) weights, zero biases except the forget
  // gate bias which starts at 1.
  static LstmCell init(int input_size, int hidden_size, Rng& rng);
};

struct LstmStepCache {
  Vec x, h_prev, c_prev;
  Vec i, f, g, o;  // post-activation gates
  Vec c, tanh_c, h;
};

// One gated recurrence step. h_out/c_out are resized as needed; cache, when
// given, stores everything the backward pass needs.
void lstm_step(const LstmCell& cell, const Vec& h_prev, const Vec& c_prev,
               const Vec& x, Vec& h_out, Vec& c_out,
               LstmStepCache* cache = nullptr);

struct SoftmaxHead {
  Mat w;  // A x H
  Vec b;  // A

  static SoftmaxHead init(int hidden_size, int n_actions, Rng& rng);
};

Vec head_logits(const SoftmaxHead& head, const Vec& h);

// Max-subtracted softmax.
Vec softmax(const Vec& z);
// Softmax restricted to allowed entries; masked entries come out exactly 0.
Vec masked_softmax(const Vec& z, const std::vector<bool>& allowed);

struct SeqCache {
  std::vector<LstmStepCache> steps;
  std::vector<Vec> logits;
  std::vector<Vec> probs;
};

// Runs the LSTM + head over a sequence from the zero state. When masks is
// non-null it must have one entry per input and the per-step distribution is
// a masked softmax.
std::vector<Vec> forward_sequence(const LstmCell& cell, const SoftmaxHead& head,
                                  const std::vector<Vec>& inputs,
                                  const std::vector<std::vector<bool>>* masks = nullptr,
                                  SeqCache* cache = nullptr);

struct ModelGrads {
  Mat d_wx, d_wh;
  Vec d_b;
  Mat d_head_w;
  Vec d_head_b;

  static ModelGrads zeros_like(const LstmCell& cell, const SoftmaxHead& head);
};

// Exact BPTT. dlogits is the upstream gradient of the scalar loss w.r.t. the
// per-step logits; requires the cache produced by forward_sequence.
ModelGrads backward_sequence(const LstmCell& cell, const SoftmaxHead& head,
                             const SeqCache& cache,
                             const std::vector<Vec>& dlogits);

// Cross entropy of one step against a target index, on an already-normalized
// distribution. Appends the gradient w.r.t. logits (probs - onehot) restricted
// to entries where probs > 0.
double cross_entropy(const Vec& probs, int target, Vec& dlogits_out);

// Mutable views over all parameter tensors, in a fixed order shared with
// grad_refs.
std::vector<std::span<double>> param_refs(LstmCell& cell, SoftmaxHead& head);
std::vector<std::span<const double>> grad_refs(const ModelGrads& g);

Vec flatten(const std::vector<std::span<const double>>& parts);
Vec flatten_params(const LstmCell& cell, const SoftmaxHead& head);
void unflatten_params(std::span<const double> flat, LstmCell& cell, SoftmaxHead& head);

// Scales grads in place when their global L2 norm exceeds max_norm
// (max_norm <= 0 disables). Returns the pre-clip norm.
double clip_global_norm(const std::vector<std::span<double>>& grads, double max_norm);

// Adaptive per-parameter step sizes from running averages of squared
// gradients and squared updates.
class AdaDelta {
 public:
  explicit AdaDelta(double rho = 0.95, double eps = 1e-6);

  // params/grads are parallel lists of equally shaped tensors. Throws on
  // non-finite gradients. State is lazily sized on first use.
  void step(const std::vector<std::span<double>>& params,
            const std::vector<std::span<const double>>& grads);

  double rho() const { return rho_; }
  double eps() const { return eps_; }
  const std::vector<Vec>& avg_sq_grad() const { return eg2_; }
  const std::vector<Vec>& avg_sq_update() const { return edx2_; }

 private:
  double rho_;
  double eps_;
  std::vector<Vec> eg2_;
  std::vector<Vec> edx2_;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::size_t worst_index = 0;
  bool pass = false;
};

// Central finite differences of f against the supplied analytic gradient.
// f must be deterministic; params are restored on return.
GradCheckReport grad_check(const std::function<double(std::span<const double>)>& f,
                           std::span<double> params,
                           std::span<const double> analytic, double tol,
                           double step = 1e-5);

}  // namespace sadp

#endif  // SADP_NN_HPP
