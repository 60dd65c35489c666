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

#include "gshard/loss.hpp"

#include <cmath>
#include <unordered_map>

namespace gshard {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid(double x) {
  if (x >= 0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::unordered_map<VertexId, std::size_t> index_of(const RowBlock& b) {
  std::unordered_map<VertexId, std::size_t> idx;
  idx.reserve(b.size() * 2);
  for (std::size_t i = 0; i < b.size(); ++i) idx.emplace(b.ids[i], i);
  return idx;
}

std::size_t need(const std::unordered_map<VertexId, std::size_t>& idx, VertexId v) {
  auto it = idx.find(v);
  if (it == idx.end()) {
    throw ContractError("batch references id " + std::to_string(v) + " missing from the fetched rows");
  }
  return it->second;
}

}  // namespace

SkipgramTerms skipgram_loss_grad(std::span<const double> center, std::span<const double> context,
                                 std::span<const double> negs) {
  const std::size_t d = center.size();
  if (context.size() != d || (d == 0 ? !negs.empty() : negs.size() % d != 0)) {
    throw ContractError("skip-gram operands disagree on dimension");
  }
  const std::size_t k = d == 0 ? 0 : negs.size() / d;
  SkipgramTerms t;
  t.g_center.assign(d, 0.0);
  t.g_context.assign(d, 0.0);
  t.g_negs.assign(k * d, 0.0);

  const double pos = dot(center, context);
  t.loss = -log_sigmoid(pos);
  const double cpos = sigmoid(pos) - 1.0;  // d(-log s(x))/dx
  for (std::size_t j = 0; j < d; ++j) {
    t.g_center[j] += cpos * context[j];
    t.g_context[j] = cpos * center[j];
  }
  for (std::size_t n = 0; n < k; ++n) {
    auto w = negs.subspan(n * d, d);
    const double s = dot(center, w);
    t.loss -= log_sigmoid(-s);
    const double cneg = sigmoid(s);  // d(-log s(-x))/dx
    for (std::size_t j = 0; j < d; ++j) {
      t.g_center[j] += cneg * w[j];
      t.g_negs[n * d + j] = cneg * center[j];
    }
  }
  return t;
}

BatchGrad skipgram_batch_grad(const RowBlock& emb, const PairBatch& pairs, const RowBlock* ctx,
                              GradReduction reduction) {
  const std::size_t d = emb.dim;
  if (ctx && ctx->dim != d) throw ContractError("context rows differ in dimension");
  const RowBlock& out_rows = ctx ? *ctx : emb;
  auto in_idx = index_of(emb);
  auto out_idx = ctx ? index_of(*ctx) : in_idx;

  BatchGrad r;
  r.grad = RowBlock(emb.ids, d);
  if (ctx) r.context_grad = RowBlock(ctx->ids, d);
  SparseGradient& out_grad = ctx ? r.context_grad : r.grad;
  if (pairs.size() == 0) return r;

  const double mean = 1.0 / static_cast<double>(pairs.size());
  const double scale = reduction == GradReduction::kMean ? mean : 1.0;
  std::vector<double> negs(pairs.num_neg * d);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const std::size_t ci = need(in_idx, pairs.centers[p]);
    const std::size_t xi = need(out_idx, pairs.contexts[p]);
    auto neg_ids = pairs.negatives_of(p);
    std::vector<std::size_t> ni(neg_ids.size());
    for (std::size_t n = 0; n < neg_ids.size(); ++n) {
      ni[n] = need(out_idx, neg_ids[n]);
      auto src = out_rows.row(ni[n]);
      std::copy(src.begin(), src.end(), negs.begin() + n * d);
    }
    auto t = skipgram_loss_grad(emb.row(ci), out_rows.row(xi), negs);
    r.loss += t.loss;
    auto gc = r.grad.row(ci);
    auto gx = out_grad.row(xi);
    for (std::size_t j = 0; j < d; ++j) {
      gc[j] += scale * t.g_center[j];
      gx[j] += scale * t.g_context[j];
    }
    for (std::size_t n = 0; n < ni.size(); ++n) {
      auto gn = out_grad.row(ni[n]);
      for (std::size_t j = 0; j < d; ++j) gn[j] += scale * t.g_negs[n * d + j];
    }
  }
  r.loss *= mean;
  return r;
}

}  // namespace gshard
