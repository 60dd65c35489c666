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

#include "gshard/baseline.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <mutex>
#include <thread>

namespace gshard {

DenseModel::DenseModel(std::size_t n, std::size_t d)
    : num_nodes(n), dim(d), matrix(n * d, 0.0), momentum(n * d, 0.0) {}

DenseModel DenseModel::initialized(std::size_t n, std::size_t d, const rt::InitSpec& init,
                                   std::uint64_t seed) {
  DenseModel m(n, d);
  for (VertexId v = 0; v < n; ++v) {
    rt::init_row(init, seed, v, std::span<double>(m.matrix.data() + v * d, d));
  }
  return m;
}

RowBlock DenseModel::gather(std::span<const VertexId> ids) const {
  RowBlock b(std::vector<VertexId>(ids.begin(), ids.end()), dim);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= num_nodes) throw ContractError("row id out of range");
    std::copy_n(matrix.begin() + ids[i] * dim, dim, b.rows.begin() + i * dim);
  }
  return b;
}

void dense_reference_sgd_momentum(DenseModel& model, std::span<const double> grad, double lr,
                                  double mu) {
  if (grad.size() != model.matrix.size()) throw ContractError("gradient shape mismatch");
  for (std::size_t i = 0; i < grad.size(); ++i) {
    model.momentum[i] = mu * model.momentum[i] + grad[i];
    model.matrix[i] -= lr * model.momentum[i];
  }
}

void dense_adam_step(DenseModel& model, std::span<const double> grad, const AdamParams& p) {
  if (grad.size() != model.matrix.size()) throw ContractError("gradient shape mismatch");
  if (model.adam_m.empty()) {
    model.adam_m.assign(grad.size(), 0.0);
    model.adam_v.assign(grad.size(), 0.0);
  }
  model.adam_t++;
  adam_update_row(model.matrix, model.adam_m, model.adam_v, grad,
                  static_cast<double>(model.adam_t), p);
}

std::vector<double> allreduce_mean(const std::vector<std::vector<double>>& grads) {
  if (grads.empty()) throw ContractError("allreduce needs at least one input");
  std::vector<double> out(grads.front().size(), 0.0);
  for (const auto& g : grads) {
    if (g.size() != out.size()) throw ContractError("allreduce inputs differ in shape");
    for (std::size_t i = 0; i < g.size(); ++i) out[i] += g[i];
  }
  for (double& x : out) x /= static_cast<double>(grads.size());
  return out;
}

std::vector<double> allreduce_mean(rt::Session& s, std::uint64_t round, std::uint32_t participants,
                                   std::span<const double> grad, DType dtype) {
  rt::ReduceRequest q;
  q.trainer = s.id();
  q.participants = participants;
  q.round = round;
  q.dtype = dtype;
  q.values.assign(grad.begin(), grad.end());
  auto fut = s.reducer().call(rt::Frame{rt::Opcode::kAdd, 0, rt::encode(q)});
  rt::Frame reply = rt::await_reply(fut, s.timeout());
  auto body = rt::check_reply(reply);
  auto n = body.get<std::uint64_t>();
  if (n != grad.size()) throw ProtocolError("allreduce reply has the wrong length");
  auto out = body.get_values(n, dtype);
  body.expect_end();
  return out;
}

void scatter_add(const SparseGradient& grad, std::span<double> dense) {
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const std::size_t off = grad.ids[i] * grad.dim;
    if (off + grad.dim > dense.size()) throw ContractError("gradient row out of range");
    for (std::size_t j = 0; j < grad.dim; ++j) dense[off + j] += grad.rows[i * grad.dim + j];
  }
}

std::uint64_t hash_values(std::span<const double> values) {
  std::uint64_t h = 1469598103934665603ull;
  for (double v : values) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    for (int k = 0; k < 8; ++k) {
      h ^= (bits >> (8 * k)) & 0xFF;
      h *= 1099511628211ull;
    }
  }
  return h;
}

namespace {

rt::InitSpec model_init(const TrainConfig& cfg) {
  const double a = cfg.init_scale / static_cast<double>(cfg.dim);
  return rt::InitSpec::uniform(-a, a);
}

void apply_dense(const TrainConfig& cfg, DenseModel& m, std::span<const double> grad) {
  if (cfg.optimizer == OptimizerKind::kAdam) {
    dense_adam_step(m, grad, AdamParams{cfg.resolved_lr(), cfg.beta1, cfg.beta2, cfg.eps});
  } else {
    dense_reference_sgd_momentum(m, grad, cfg.resolved_lr(), cfg.momentum);
  }
}

}  // namespace

TrainResult ddp_train(const Graph& g, const TrainConfig& cfg, rt::Cluster& cluster) {
  cfg.validate();
  const std::size_t n = g.num_nodes();
  const std::size_t d = cfg.dim;
  const std::size_t T = cfg.num_trainers;
  auto part = partition_nodes(g, T, cfg.partition);
  const std::size_t iters = iterations_per_epoch(g, cfg, part);
  const DenseModel base_model = DenseModel::initialized(n, d, model_init(cfg), cfg.seed);
  const DenseModel base_ctx(cfg.separate_context ? n : 0, d);
  const std::uint64_t base_round = cluster.barrier_base();
  const std::size_t width = n * d * (cfg.separate_context ? 2 : 1);

  TrainResult result;
  result.replica_hashes.assign(cfg.epochs * iters, std::vector<std::uint64_t>(T, 0));
  std::vector<DenseModel> finals(T);
  std::mutex mu;
  std::vector<std::thread> workers;
  for (std::uint32_t t = 0; t < T; ++t) {
    workers.emplace_back([&, t] {
      rt::Session& s = cluster.trainer(t);
      BatchSource src(g, cfg, part, t);
      DenseModel model = base_model;
      DenseModel ctx = base_ctx;
      std::vector<IterationMetrics> local;
      std::vector<double> dense(width);
      try {
        for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
          for (std::size_t it = 0; it < iters; ++it) {
            const auto t0 = std::chrono::steady_clock::now();
            const std::uint64_t up0 = s.counters().data_sent, down0 = s.counters().data_received;
            const std::uint64_t k = epoch * iters + it;
            TrainBatch batch = src.next(epoch, it);
            RowBlock emb = model.gather(batch.ids);
            RowBlock crows;
            if (cfg.separate_context) crows = ctx.gather(batch.ids);
            BatchGrad bg = skipgram_batch_grad(emb, batch.pairs, cfg.separate_context ? &crows : nullptr,
                                               gradient_reduction(cfg.algorithm));

            std::fill(dense.begin(), dense.end(), 0.0);
            scatter_add(bg.grad, std::span<double>(dense).first(n * d));
            if (cfg.separate_context) scatter_add(bg.context_grad, std::span<double>(dense).subspan(n * d));
            auto mean = allreduce_mean(s, base_round + k, static_cast<std::uint32_t>(T), dense, cfg.dtype);
            apply_dense(cfg, model, std::span<const double>(mean).first(n * d));
            if (cfg.separate_context) apply_dense(cfg, ctx, std::span<const double>(mean).subspan(n * d));

            IterationMetrics m;
            m.iteration = k;
            m.epoch = epoch;
            m.trainer = t;
            m.loss = bg.loss;
            m.rows_up = width / d;
            m.rows_down = width / d;
            m.bytes_up = s.counters().data_sent - up0;
            m.bytes_down = s.counters().data_received - down0;
            m.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
            local.push_back(m);
            result.replica_hashes[k][t] = hash_values(model.matrix);
          }
        }
      } catch (const std::exception& e) {
        spdlog::error("ddp trainer {} stopped: {}", t, e.what());
        std::lock_guard<std::mutex> lk(mu);
        if (result.error.empty()) result.error = "trainer " + std::to_string(t) + ": " + e.what();
      }
      std::lock_guard<std::mutex> lk(mu);
      result.metrics.insert(result.metrics.end(), local.begin(), local.end());
      finals[t] = std::move(model);
    });
  }
  for (auto& w : workers) w.join();
  cluster.advance_barrier_base(cfg.epochs * iters + 1);

  std::sort(result.metrics.begin(), result.metrics.end(), [](const auto& a, const auto& b) {
    return std::tie(a.iteration, a.trainer) < std::tie(b.iteration, b.trainer);
  });
  result.num_nodes = n;
  result.dim = d;
  if (result.ok()) result.embeddings = finals[0].matrix;
  result.accounting = cluster.accounting();
  return result;
}

namespace {

// Momentum step with the rounding a store of element type T applies: mult,
// then add of the gradient rows, then mult_add, each rounded on write.
template <typename T>
void stored_momentum_step(DenseModel& m, const SparseGradient& grad, double lr, double mu) {
  const T decay = static_cast<T>(mu);
  const T step = static_cast<T>(-lr);
  for (double& x : m.momentum) x = static_cast<T>(decay * static_cast<T>(x));
  for (std::size_t i = 0; i < grad.size(); ++i) {
    auto g = grad.row(i);
    double* row = m.momentum.data() + grad.ids[i] * m.dim;
    for (std::size_t j = 0; j < m.dim; ++j) {
      row[j] = static_cast<T>(static_cast<T>(row[j]) + static_cast<T>(g[j]));
    }
  }
  for (std::size_t i = 0; i < m.matrix.size(); ++i) {
    m.matrix[i] = static_cast<T>(static_cast<T>(m.matrix[i]) + step * static_cast<T>(m.momentum[i]));
  }
}

void round_to(DType dtype, std::span<double> xs) {
  if (dtype == DType::kF32) {
    for (double& x : xs) x = static_cast<float>(x);
  }
}

}  // namespace

TrainResult dense_reference_train(const Graph& g, const TrainConfig& cfg_in) {
  TrainConfig cfg = cfg_in;
  cfg.num_trainers = 1;
  cfg.validate();
  const std::size_t n = g.num_nodes();
  const std::size_t d = cfg.dim;
  auto part = partition_nodes(g, 1, cfg.partition);
  const std::size_t iters = iterations_per_epoch(g, cfg, part);
  // Values are rounded wherever the sharded run would store them, so fp32
  // runs can be compared tightly too.
  DenseModel model = DenseModel::initialized(n, d, model_init(cfg), cfg.seed);
  round_to(cfg.dtype, model.matrix);
  DenseModel ctx(cfg.separate_context ? n : 0, d);
  BatchSource src(g, cfg, part, 0);
  const AdamParams adam{cfg.resolved_lr(), cfg.beta1, cfg.beta2, cfg.eps};
  // Sparse Adam state mirrors the sharded optimizer: per-row step counts.
  std::vector<double> am(n * d, 0.0), av(n * d, 0.0), steps(n, 0.0);
  std::vector<double> cam(n * d, 0.0), cav(n * d, 0.0), csteps(n, 0.0);
  auto step = [&](DenseModel& m, const SparseGradient& grad, std::vector<double>& sm,
                  std::vector<double>& sv, std::vector<double>& st) {
    if (cfg.optimizer == OptimizerKind::kAdam) {
      for (std::size_t i = 0; i < grad.size(); ++i) {
        const std::size_t off = grad.ids[i] * d;
        st[grad.ids[i]] += 1.0;
        auto w = std::span<double>(m.matrix).subspan(off, d);
        auto mr = std::span<double>(sm).subspan(off, d);
        auto vr = std::span<double>(sv).subspan(off, d);
        adam_update_row(w, mr, vr, grad.row(i), st[grad.ids[i]], adam);
        round_to(cfg.dtype, w);
        round_to(cfg.dtype, mr);
        round_to(cfg.dtype, vr);
      }
      return;
    }
    if (cfg.dtype == DType::kF32) {
      stored_momentum_step<float>(m, grad, cfg.resolved_lr(), cfg.momentum);
    } else {
      stored_momentum_step<double>(m, grad, cfg.resolved_lr(), cfg.momentum);
    }
  };

  TrainResult result;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t it = 0; it < iters; ++it) {
      TrainBatch batch = src.next(epoch, it);
      RowBlock emb = model.gather(batch.ids);
      RowBlock crows;
      if (cfg.separate_context) crows = ctx.gather(batch.ids);
      BatchGrad bg = skipgram_batch_grad(emb, batch.pairs, cfg.separate_context ? &crows : nullptr,
                                               gradient_reduction(cfg.algorithm));
      step(model, bg.grad, am, av, steps);
      if (cfg.separate_context) step(ctx, bg.context_grad, cam, cav, csteps);
      IterationMetrics m;
      m.iteration = epoch * iters + it;
      m.epoch = epoch;
      m.loss = bg.loss;
      m.rows_down = emb.size() + crows.size();
      m.rows_up = bg.grad.size() + bg.context_grad.size();
      result.metrics.push_back(m);
    }
  }
  result.num_nodes = n;
  result.dim = d;
  result.embeddings = std::move(model.matrix);
  return result;
}

}  // namespace gshard
