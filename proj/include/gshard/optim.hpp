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

#pragma once

#include <cstdint>
#include <span>

#include "gshard/loss.hpp"
#include "gshard/store.hpp"

namespace gshard {

struct AdamParams {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// The three store operations of one momentum step, usable on their own when
// several trainers share the work of a step.
void decay_momentum(rt::Session& s, const MatrixStore& momentum, double mu);
void accumulate_gradient(rt::Session& s, const MatrixStore& momentum, const SparseGradient& grad);
void apply_momentum(rt::Session& s, const MatrixStore& model, const MatrixStore& momentum, double lr);

// momentum *= mu (all rows); momentum[ids] += grad; model -= lr * momentum (all rows).
void sgd_momentum_step(rt::Session& s, const MatrixStore& model, const MatrixStore& momentum,
                       const SparseGradient& grad, double lr, double mu);

// Sparse Adam over the rows in `grad` only. `steps` is an N x 1 store of
// per-row update counts used for bias correction.
void adam_step(rt::Session& s, const MatrixStore& model, const MatrixStore& m,
               const MatrixStore& v, const MatrixStore& steps, const SparseGradient& grad,
               const AdamParams& p);

// One Adam update of a single row in place; `t` is the row's step count
// after this update (>= 1).
void adam_update_row(std::span<double> param, std::span<double> m, std::span<double> v,
                     std::span<const double> g, double t, const AdamParams& p);

}  // namespace gshard
