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

#include "sadp/nn.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace sadp {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

// y += M * x
void matvec_acc(const Mat& m, const Vec& x, Vec& y) {
  for (int r = 0; r < m.rows; ++r) {
    const double* row = &m.a[static_cast<std::size_t>(r) * m.cols];
    double s = 0.0;
    for (int c = 0; c < m.cols; ++c) s += row[c] * x[c];
    y[r] += s;
  }
}

// y += M^T * x
void matvec_transpose_acc(const Mat& m, const Vec& x, Vec& y) {
  for (int r = 0; r < m.rows; ++r) {
    const double* row = &m.a[static_cast<std::size_t>(r) * m.cols];
    const double xr = x[r];
    if (xr == 0.0) continue;
    for (int c = 0; c < m.cols; ++c) y[c] += row[c] * xr;
  }
}

// M += a * b^T
void outer_acc(Mat& m, const Vec& a, const Vec& b) {
  for (int r = 0; r < m.rows; ++r) {
    double* row = &m.a[static_cast<std::size_t>(r) * m.cols];
    const double ar = a[r];
    if (ar == 0.0) continue;
    for (int c = 0; c < m.cols; ++c) row[c] += ar * b[c];
  }
}

}  // namespace

LstmCell LstmCell::init(int input_size, int hidden_size, Rng& rng) {
  LstmCell cell;
  cell.input_size = input_size;
  cell.hidden_size = hidden_size;
  cell.wx = Mat(4 * hidden_size, input_size);
  cell.wh = Mat(4 * hidden_size, hidden_size);
  cell.b.assign(static_cast<std::size_t>(4) * hidden_size, 0.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(hidden_size));
  for (double& w : cell.wx.a) w = rng.uniform(-scale, scale);
  for (double& w : cell.wh.a) w = rng.uniform(-scale, scale);
  for (int j = hidden_size; j < 2 * hidden_size; ++j) cell.b[j] = 1.0;
  return cell;
}

void lstm_step(const LstmCell& cell, const Vec& h_prev, const Vec& c_prev,
               const Vec& x, Vec& h_out, Vec& c_out, LstmStepCache* cache) {
  const int H = cell.hidden_size;
  require(static_cast<int>(x.size()) == cell.input_size, "lstm_step: input size mismatch");
  require(static_cast<int>(h_prev.size()) == H, "lstm_step: hidden size mismatch");
  require(static_cast<int>(c_prev.size()) == H, "lstm_step: cell size mismatch");
  for (double v : x) require(std::isfinite(v), "lstm_step: non-finite input");

  Vec z = cell.b;  // 4H pre-activations
  matvec_acc(cell.wx, x, z);
  matvec_acc(cell.wh, h_prev, z);

  Vec i(H), f(H), g(H), o(H), c(H), tanh_c(H), h(H);
  for (int j = 0; j < H; ++j) {
    i[j] = sigmoid(z[j]);
    f[j] = sigmoid(z[H + j]);
    g[j] = std::tanh(z[2 * H + j]);
    o[j] = sigmoid(z[3 * H + j]);
    c[j] = f[j] * c_prev[j] + i[j] * g[j];
    tanh_c[j] = std::tanh(c[j]);
    h[j] = o[j] * tanh_c[j];
  }
  h_out = h;
  c_out = c;
  if (cache) {
    cache->x = x;
    cache->h_prev = h_prev;
    cache->c_prev = c_prev;
    cache->i = std::move(i);
    cache->f = std::move(f);
    cache->g = std::move(g);
    cache->o = std::move(o);
    cache->c = std::move(c);
    cache->tanh_c = std::move(tanh_c);
    cache->h = std::move(h);
  }
}

SoftmaxHead SoftmaxHead::init(int hidden_size, int n_actions, Rng& rng) {
  SoftmaxHead head;
  head.w = Mat(n_actions, hidden_size);
  head.b.assign(n_actions, 0.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(hidden_size));
  for (double& w : head.w.a) w = rng.uniform(-scale, scale);
  return head;
}

Vec head_logits(const SoftmaxHead& head, const Vec& h) {
  require(static_cast<int>(h.size()) == head.w.cols, "head_logits: hidden size mismatch");
  Vec z = head.b;
  matvec_acc(head.w, h, z);
  return z;
}

Vec softmax(const Vec& z) {
  double zmax = z[0];
  for (double v : z) zmax = std::max(zmax, v);
  Vec p(z.size());
  double sum = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) {
    p[j] = std::exp(z[j] - zmax);
    sum += p[j];
  }
  for (double& v : p) v /= sum;
  return p;
}

Vec masked_softmax(const Vec& z, const std::vector<bool>& allowed) {
  require(allowed.size() == z.size(), "masked_softmax: mask size mismatch");
  double zmax = -1e300;
  bool any = false;
  for (std::size_t j = 0; j < z.size(); ++j) {
    if (allowed[j]) {
      zmax = std::max(zmax, z[j]);
      any = true;
    }
  }
  if (!any) throw std::logic_error("masked_softmax: empty mask");
  Vec p(z.size(), 0.0);
  double sum = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) {
    if (allowed[j]) {
      p[j] = std::exp(z[j] - zmax);
      sum += p[j];
    }
  }
  for (double& v : p) v /= sum;
  return p;
}

std::vector<Vec> forward_sequence(const LstmCell& cell, const SoftmaxHead& head,
                                  const std::vector<Vec>& inputs,
                                  const std::vector<std::vector<bool>>* masks,
                                  SeqCache* cache) {
  require(!inputs.empty(), "forward_sequence: empty input sequence");
  if (masks) require(masks->size() == inputs.size(), "forward_sequence: mask count mismatch");

  const int H = cell.hidden_size;
  Vec h(H, 0.0), c(H, 0.0);
  std::vector<Vec> dists;
  dists.reserve(inputs.size());
  if (cache) {
    cache->steps.resize(inputs.size());
    cache->logits.resize(inputs.size());
    cache->probs.resize(inputs.size());
  }
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    LstmStepCache local;
    LstmStepCache* sc = cache ? &cache->steps[t] : &local;
    Vec h_next, c_next;
    lstm_step(cell, h, c, inputs[t], h_next, c_next, sc);
    h = std::move(h_next);
    c = std::move(c_next);
    Vec logits = head_logits(head, h);
    Vec probs = masks ? masked_softmax(logits, (*masks)[t]) : softmax(logits);
    if (cache) {
      cache->logits[t] = logits;
      cache->probs[t] = probs;
    }
    dists.push_back(std::move(probs));
  }
  return dists;
}

ModelGrads ModelGrads::zeros_like(const LstmCell& cell, const SoftmaxHead& head) {
  ModelGrads g;
  g.d_wx = Mat(cell.wx.rows, cell.wx.cols);
  g.d_wh = Mat(cell.wh.rows, cell.wh.cols);
  g.d_b.assign(cell.b.size(), 0.0);
  g.d_head_w = Mat(head.w.rows, head.w.cols);
  g.d_head_b.assign(head.b.size(), 0.0);
  return g;
}

ModelGrads backward_sequence(const LstmCell& cell, const SoftmaxHead& head,
                             const SeqCache& cache,
                             const std::vector<Vec>& dlogits) {
  require(!cache.steps.empty(), "backward_sequence: missing forward cache");
  require(dlogits.size() == cache.steps.size(),
          "backward_sequence: upstream gradient count mismatch");

  const int H = cell.hidden_size;
  ModelGrads g = ModelGrads::zeros_like(cell, head);
  Vec dh_next(H, 0.0), dc_next(H, 0.0);

  for (int t = static_cast<int>(cache.steps.size()) - 1; t >= 0; --t) {
    const LstmStepCache& s = cache.steps[t];

    // Head: dlogits -> head grads + dh.
    Vec dh = dh_next;
    outer_acc(g.d_head_w, dlogits[t], s.h);
    for (std::size_t j = 0; j < g.d_head_b.size(); ++j) g.d_head_b[j] += dlogits[t][j];
    matvec_transpose_acc(head.w, dlogits[t], dh);

    Vec dz(static_cast<std::size_t>(4) * H);
    Vec dc(H);
    for (int j = 0; j < H; ++j) {
      const double d_o = dh[j] * s.tanh_c[j];
      dc[j] = dh[j] * s.o[j] * (1.0 - s.tanh_c[j] * s.tanh_c[j]) + dc_next[j];
      const double d_i = dc[j] * s.g[j];
      const double d_g = dc[j] * s.i[j];
      const double d_f = dc[j] * s.c_prev[j];
      dz[j] = d_i * s.i[j] * (1.0 - s.i[j]);
      dz[H + j] = d_f * s.f[j] * (1.0 - s.f[j]);
      dz[2 * H + j] = d_g * (1.0 - s.g[j] * s.g[j]);
      dz[3 * H + j] = d_o * s.o[j] * (1.0 - s.o[j]);
    }

    outer_acc(g.d_wx, dz, s.x);
    outer_acc(g.d_wh, dz, s.h_prev);
    for (std::size_t j = 0; j < dz.size(); ++j) g.d_b[j] += dz[j];

    dh_next.assign(H, 0.0);
    matvec_transpose_acc(cell.wh, dz, dh_next);
    for (int j = 0; j < H; ++j) dc_next[j] = dc[j] * s.f[j];
  }
  return g;
}

double cross_entropy(const Vec& probs, int target, Vec& dlogits_out) {
  require(target >= 0 && target < static_cast<int>(probs.size()),
          "cross_entropy: target out of range");
  dlogits_out.assign(probs.size(), 0.0);
  for (std::size_t j = 0; j < probs.size(); ++j) {
    if (probs[j] > 0.0) dlogits_out[j] = probs[j];
  }
  dlogits_out[target] -= 1.0;
  const double p = std::max(probs[target], 1e-300);
  return -std::log(p);
}

std::vector<std::span<double>> param_refs(LstmCell& cell, SoftmaxHead& head) {
  return {std::span<double>(cell.wx.a), std::span<double>(cell.wh.a),
          std::span<double>(cell.b), std::span<double>(head.w.a),
          std::span<double>(head.b)};
}

std::vector<std::span<const double>> grad_refs(const ModelGrads& g) {
  return {std::span<const double>(g.d_wx.a), std::span<const double>(g.d_wh.a),
          std::span<const double>(g.d_b), std::span<const double>(g.d_head_w.a),
          std::span<const double>(g.d_head_b)};
}

Vec flatten(const std::vector<std::span<const double>>& parts) {
  Vec out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

Vec flatten_params(const LstmCell& cell, const SoftmaxHead& head) {
  auto& c = const_cast<LstmCell&>(cell);
  auto& h = const_cast<SoftmaxHead&>(head);
  std::vector<std::span<const double>> parts;
  for (auto s : param_refs(c, h)) parts.emplace_back(s.data(), s.size());
  return flatten(parts);
}

void unflatten_params(std::span<const double> flat, LstmCell& cell, SoftmaxHead& head) {
  std::size_t off = 0;
  for (auto dst : param_refs(cell, head)) {
    require(off + dst.size() <= flat.size(), "unflatten_params: size mismatch");
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = flat[off + j];
    off += dst.size();
  }
  require(off == flat.size(), "unflatten_params: size mismatch");
}

double clip_global_norm(const std::vector<std::span<double>>& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& g : grads)
    for (double v : g) sq += v * v;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (const auto& g : grads)
      for (double& v : g) v *= scale;
  }
  return norm;
}

AdaDelta::AdaDelta(double rho, double eps) : rho_(rho), eps_(eps) {}

void AdaDelta::step(const std::vector<std::span<double>>& params,
                    const std::vector<std::span<const double>>& grads) {
  require(params.size() == grads.size(), "adadelta: tensor count mismatch");
  if (eg2_.empty()) {
    for (const auto& p : params) {
      eg2_.emplace_back(p.size(), 0.0);
      edx2_.emplace_back(p.size(), 0.0);
    }
  }
  require(eg2_.size() == params.size(), "adadelta: state shape mismatch");
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto p = params[k];
    auto g = grads[k];
    require(p.size() == g.size(), "adadelta: param/grad shape mismatch");
    require(eg2_[k].size() == p.size(), "adadelta: state shape mismatch");
    for (std::size_t j = 0; j < p.size(); ++j) {
      require(std::isfinite(g[j]), "adadelta: non-finite gradient");
      eg2_[k][j] = rho_ * eg2_[k][j] + (1.0 - rho_) * g[j] * g[j];
      const double dx = -std::sqrt(edx2_[k][j] + eps_) / std::sqrt(eg2_[k][j] + eps_) * g[j];
      edx2_[k][j] = rho_ * edx2_[k][j] + (1.0 - rho_) * dx * dx;
      p[j] += dx;
    }
  }
}

GradCheckReport grad_check(const std::function<double(std::span<const double>)>& f,
                           std::span<double> params,
                           std::span<const double> analytic, double tol,
                           double step) {
  GradCheckReport report;
  for (std::size_t j = 0; j < params.size(); ++j) {
    const double saved = params[j];
    params[j] = saved + step;
    const double fp = f(params);
    params[j] = saved - step;
    const double fm = f(params);
    params[j] = saved;
    const double numeric = (fp - fm) / (2.0 * step);
    const double denom = std::max({std::fabs(numeric), std::fabs(analytic[j]), 1.0});
    const double rel = std::fabs(numeric - analytic[j]) / denom;
    if (rel > report.max_rel_err) {
      report.max_rel_err = rel;
      report.worst_index = j;
    }
  }
  report.pass = report.max_rel_err <= tol;
  return report;
}

}  // namespace sadp
