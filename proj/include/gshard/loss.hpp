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

#include <span>
#include <vector>

#include "gshard/sampling.hpp"
#include "gshard/store.hpp"

namespace gshard {

// Branches on the sign so neither tail overflows.
double sigmoid(double x);
// log(sigmoid(x)) without cancellation for large |x|.
double log_sigmoid(double x);

struct SkipgramTerms {
  double loss = 0.0;
  std::vector<double> g_center;
  std::vector<double> g_context;
  std::vector<double> g_negs;  // k x d, row-major
};

// -log s(u.v) - sum_k log s(-u.w_k) and its exact derivatives.
SkipgramTerms skipgram_loss_grad(std::span<const double> center, std::span<const double> context,
                                 std::span<const double> negs);

// Gradient rows for the ids of a batch; rows of any other id are zero.
using SparseGradient = RowBlock;

struct BatchGrad {
  double loss = 0.0;  // mean over pairs
  SparseGradient grad;
  // Only filled when a separate context matrix is trained.
  SparseGradient context_grad;
};

// How per-pair gradients combine into the batch gradient. The reported loss
// is always the per-pair mean.
enum class GradReduction { kMean, kSum };

// Batch gradient with per-pair terms summed or averaged. Contributions of an
// id appearing in several roles are summed into its single row. With `ctx`
// set, contexts and negatives read (and receive gradient in) the context
// block.
BatchGrad skipgram_batch_grad(const RowBlock& emb, const PairBatch& pairs,
                              const RowBlock* ctx = nullptr,
                              GradReduction reduction = GradReduction::kMean);

// DeepWalk steps per pair, as in word2vec.
inline BatchGrad deepwalk_batch_grad(const RowBlock& emb, const PairBatch& pairs,
                                     const RowBlock* ctx = nullptr) {
  return skipgram_batch_grad(emb, pairs, ctx, GradReduction::kSum);
}

// Edge (source, destination) is the positive pair; the gradient is of the
// mean over edges. Without `ctx` this is first-order proximity; with it,
// second-order.
inline BatchGrad line_batch_grad(const RowBlock& emb, const LineBatch& batch,
                                 const RowBlock* ctx = nullptr) {
  return skipgram_batch_grad(emb, batch.as_pairs(), ctx, GradReduction::kMean);
}

}  // namespace gshard
