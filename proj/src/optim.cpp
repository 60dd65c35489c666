/* Copyright 2026 The gshard Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "gshard/optim.hpp"

#include <cmath>

namespace gshard {

namespace {

void check_aligned(const MatrixStore& a, const MatrixStore& b) {
  if (!(*a.shard_map() == *b.shard_map()) || a.dim() != b.dim()) {
    throw ContractError("stores '" + a.name() + "' and '" + b.name() + "' are not co-sharded");
  }
}

}  // namespace

void decay_momentum(rt::Session& s, const MatrixStore& momentum, double mu) { momentum.mult(s, mu); }

void accumulate_gradient(rt::Session& s, const MatrixStore& momentum, const SparseGradient& grad) {
  if (grad.size() > 0) momentum.add(s, grad);
}

void apply_momentum(rt::Session& s, const MatrixStore& model, const MatrixStore& momentum, double lr) {
  model.mult_add(s, momentum, -lr);
}

void sgd_momentum_step(rt::Session& s, const MatrixStore& model, const MatrixStore& momentum,
                       const SparseGradient& grad, double lr, double mu) {
  check_aligned(model, momentum);
  decay_momentum(s, momentum, mu);
  accumulate_gradient(s, momentum, grad);
  apply_momentum(s, model, momentum, lr);
}

void adam_update_row(std::span<double> param, std::span<double> m, std::span<double> v,
                     std::span<const double> g, double t, const AdamParams& p) {
  const double c1 = 1.0 - std::pow(p.beta1, t);
  const double c2 = 1.0 - std::pow(p.beta2, t);
  for (std::size_t j = 0; j < param.size(); ++j) {
    m[j] = p.beta1 * m[j] + (1.0 - p.beta1) * g[j];
    v[j] = p.beta2 * v[j] + (1.0 - p.beta2) * g[j] * g[j];
    const double mhat = m[j] / c1;
    const double vhat = v[j] / c2;
    param[j] -= p.lr * mhat / (std::sqrt(vhat) + p.eps);
  }
}

void adam_step(rt::Session& s, const MatrixStore& model, const MatrixStore& m,
               const MatrixStore& v, const MatrixStore& steps, const SparseGradient& grad,
               const AdamParams& p) {
  check_aligned(model, m);
  check_aligned(model, v);
  if (!(*steps.shard_map() == *model.shard_map()) || steps.dim() != 1) {
    throw ContractError("adam step counters must be an N x 1 store aligned with the model");
  }
  if (grad.size() == 0) return;
  auto pw = model.get_async(s, grad.ids);
  auto pm = m.get_async(s, grad.ids);
  auto pv = v.get_async(s, grad.ids);
  auto pt = steps.get_async(s, grad.ids);
  RowBlock w = pw.wait(), bm = pm.wait(), bv = pv.wait(), bt = pt.wait();
  for (std::size_t i = 0; i < grad.size(); ++i) {
    bt.rows[i] += 1.0;
    adam_update_row(w.row(i), bm.row(i), bv.row(i), grad.row(i), bt.rows[i], p);
  }
  model.put(s, w);
  m.put(s, bm);
  v.put(s, bv);
  steps.put(s, bt);
}

}  // namespace gshard
