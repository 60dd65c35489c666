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

#include "gshard/train.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "gshard/baseline.hpp"
#include "gshard/loss.hpp"

namespace gshard {

Algorithm parse_algorithm(const std::string& s) {
  if (s == "deepwalk") return Algorithm::kDeepWalk;
  if (s == "line") return Algorithm::kLine;
  throw ConfigError("unknown algorithm '" + s + "' (expected deepwalk|line)");
}

OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "sgd_momentum") return OptimizerKind::kSgdMomentum;
  if (s == "adam") return OptimizerKind::kAdam;
  throw ConfigError("unknown optimizer '" + s + "' (expected sgd_momentum|adam)");
}

TrainMode parse_mode(const std::string& s) {
  if (s == "graphscale") return TrainMode::kGraphscale;
  if (s == "ddp") return TrainMode::kDdp;
  throw ConfigError("unknown mode '" + s + "' (expected graphscale|ddp)");
}

UpdateMode parse_update_mode(const std::string& s) {
  if (s == "designated") return UpdateMode::kDesignated;
  if (s == "per_trainer") return UpdateMode::kPerTrainer;
  throw ConfigError("unknown update mode '" + s + "' (expected designated|per_trainer)");
}

const char* algorithm_name(Algorithm a) { return a == Algorithm::kDeepWalk ? "deepwalk" : "line"; }
GradReduction gradient_reduction(Algorithm a) {
  return a == Algorithm::kDeepWalk ? GradReduction::kSum : GradReduction::kMean;
}
const char* optimizer_name(OptimizerKind o) {
  return o == OptimizerKind::kSgdMomentum ? "sgd_momentum" : "adam";
}
const char* mode_name(TrainMode m) { return m == TrainMode::kGraphscale ? "graphscale" : "ddp"; }
const char* update_mode_name(UpdateMode u) {
  return u == UpdateMode::kDesignated ? "designated" : "per_trainer";
}

double TrainConfig::resolved_lr() const {
  if (lr) return *lr;
  return algorithm == Algorithm::kDeepWalk ? 0.01 : 1.0;
}

std::size_t TrainConfig::sparsity_bound() const {
  return algorithm == Algorithm::kDeepWalk ? batch_size * walk_len : batch_size * (2 + num_neg);
}

void TrainConfig::validate() const {
  std::vector<std::string> errs;
  if (batch_size < 1) errs.push_back("batch_size must be >= 1");
  if (epochs < 1) errs.push_back("epochs must be >= 1");
  if (walk_len < 1) errs.push_back("walk_len must be >= 1");
  if (window < 1) errs.push_back("window must be >= 1");
  if (dim < 1) errs.push_back("dim must be >= 1");
  if (!(resolved_lr() > 0)) errs.push_back("lr must be > 0");
  if (!(momentum >= 0 && momentum < 1)) errs.push_back("momentum must be in [0, 1)");
  if (!(beta1 >= 0 && beta1 < 1)) errs.push_back("beta1 must be in [0, 1)");
  if (!(beta2 >= 0 && beta2 < 1)) errs.push_back("beta2 must be in [0, 1)");
  if (!(eps > 0)) errs.push_back("eps must be > 0");
  if (num_trainers < 1) errs.push_back("num_trainers must be >= 1");
  if (num_shards < 1) errs.push_back("num_shards must be >= 1");
  if (!(init_scale >= 0)) errs.push_back("init_scale must be >= 0");
  if (!errs.empty()) {
    std::ostringstream os;
    os << "invalid training config:";
    for (const auto& e : errs) os << "\n  " << e;
    throw ConfigError(os.str());
  }
}

// ---- batches ----

namespace {

std::vector<std::uint64_t> edges_from(const Graph& g, const std::vector<VertexId>& members) {
  std::vector<std::uint64_t> pool;
  for (VertexId v : members) {
    for (std::uint64_t e = g.offsets()[v]; e < g.offsets()[v + 1]; ++e) pool.push_back(e);
  }
  return pool;
}

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

}  // namespace

std::size_t iterations_per_epoch(const Graph& g, const TrainConfig& cfg, const NodePartition& part) {
  std::size_t most = 0;
  for (std::uint32_t p = 0; p < part.num_parts; ++p) {
    auto members = part.members(p);
    std::size_t work = cfg.algorithm == Algorithm::kDeepWalk ? members.size()
                                                             : edges_from(g, members).size();
    most = std::max(most, work);
  }
  return std::max<std::size_t>(1, ceil_div(most, cfg.batch_size));
}

BatchSource::BatchSource(const Graph& g, const TrainConfig& cfg, const NodePartition& part,
                         std::uint32_t trainer)
    : g_(g), cfg_(cfg), rng_(trainer_rng(cfg.seed, trainer)), members_(part.members(trainer)) {
  iters_ = gshard::iterations_per_epoch(g, cfg, part);
  if (cfg.algorithm == Algorithm::kLine) {
    edge_pool_ = edges_from(g, members_);
    negatives_ = build_negative_table(g, cfg.neg_exponent);
  }
}

TrainBatch BatchSource::next(std::size_t epoch, std::size_t it) {
  TrainBatch b;
  if (cfg_.algorithm == Algorithm::kDeepWalk) {
    if (members_.empty()) return b;
    if (epoch != shuffled_epoch_) {
      order_ = members_;
      std::shuffle(order_.begin(), order_.end(), rng_);
      shuffled_epoch_ = epoch;
    }
    std::vector<VertexId> sources(cfg_.batch_size);
    for (std::size_t k = 0; k < cfg_.batch_size; ++k) {
      sources[k] = order_[(it * cfg_.batch_size + k) % order_.size()];
    }
    auto walks = walk_batch(g_, sources, cfg_.walk_len, rng_);
    b.pairs = deepwalk_pairs(g_, walks, cfg_.window, cfg_.num_neg, rng_, cfg_.neg_exponent);
    // Walk nodes can be absent from the pairs (length-1 walks); only rows
    // the loss reads are fetched.
    b.ids = b.pairs.unique_ids();
  } else {
    if (edge_pool_.empty()) return b;
    auto lb = line_batch(g_, edge_pool_, cfg_.batch_size, cfg_.num_neg, negatives_, rng_);
    b.ids = lb.unique_ids();
    b.pairs = lb.as_pairs();
  }
  return b;
}

std::vector<double> mean_loss_by_iteration(const std::vector<IterationMetrics>& metrics) {
  std::uint64_t last = 0;
  for (const auto& m : metrics) last = std::max(last, m.iteration);
  if (metrics.empty()) return {};
  std::vector<double> sum(last + 1, 0.0);
  std::vector<std::size_t> cnt(last + 1, 0);
  for (const auto& m : metrics) {
    sum[m.iteration] += m.loss;
    cnt[m.iteration]++;
  }
  std::vector<double> out;
  for (std::size_t i = 0; i <= last; ++i) {
    if (cnt[i]) out.push_back(sum[i] / static_cast<double>(cnt[i]));
  }
  return out;
}

std::vector<double> moving_average(const std::vector<double>& xs, std::size_t window) {
  if (window == 0) throw ContractError("smoothing window must be >= 1");
  std::vector<double> out(xs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    acc += xs[i];
    if (i >= window) acc -= xs[i - window];
    out[i] = acc / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

// ---- sharded training ----

namespace {

std::atomic<std::uint64_t> g_run_counter{0};

struct Stores {
  MatrixStore model, momentum, m, v, steps;
  bool has_ctx = false;
  MatrixStore ctx, ctx_momentum, ctx_m, ctx_v, ctx_steps;
};

// Creates the per-run stores. They all share one shard map.
Stores create_stores(rt::Session& s, const TrainConfig& cfg, std::size_t n) {
  auto map = ShardMap::make(cfg.shard_scheme, n, cfg.num_shards);
  const std::string p = "run" + std::to_string(g_run_counter++) + "/";
  const double a = cfg.init_scale / static_cast<double>(cfg.dim);
  const auto init = rt::InitSpec::uniform(-a, a);
  const auto zeros = rt::InitSpec::zeros();
  auto mk = [&](const std::string& name, std::size_t dim, rt::InitSpec spec) {
    return MatrixStore::create(s, p + name, dim, map, spec, cfg.seed, cfg.dtype);
  };
  const bool adam = cfg.optimizer == OptimizerKind::kAdam;
  auto model = mk("model", cfg.dim, init);
  auto opt1 = mk(adam ? "adam_m" : "momentum", cfg.dim, zeros);
  Stores st{model, opt1, opt1, opt1, opt1, false, model, model, model, model, model};
  if (adam) {
    st.m = opt1;
    st.v = mk("adam_v", cfg.dim, zeros);
    st.steps = mk("adam_steps", 1, zeros);
  }
  if (cfg.separate_context) {
    st.has_ctx = true;
    st.ctx = mk("context", cfg.dim, zeros);
    if (adam) {
      st.ctx_m = mk("context_adam_m", cfg.dim, zeros);
      st.ctx_v = mk("context_adam_v", cfg.dim, zeros);
      st.ctx_steps = mk("context_adam_steps", 1, zeros);
    } else {
      st.ctx_momentum = mk("context_momentum", cfg.dim, zeros);
    }
  }
  return st;
}

void scale_rows(SparseGradient& g, double f) {
  for (double& x : g.rows) x *= f;
}

}  // namespace

TrainResult train(const Graph& g, const TrainConfig& cfg, rt::Cluster& cluster) {
  cfg.validate();
  if (!cluster.running()) throw Error("cluster is not running");
  if (cluster.options().num_shards != cfg.num_shards ||
      cluster.options().num_trainers != cfg.num_trainers) {
    throw ConfigError("cluster shape does not match num_shards/num_trainers");
  }
  if (cfg.num_trainers > g.num_nodes()) throw ConfigError("more trainers than nodes");
  if (cfg.mode == TrainMode::kDdp) return ddp_train(g, cfg, cluster);

  const std::size_t n = g.num_nodes();
  const std::size_t T = cfg.num_trainers;
  auto part = partition_nodes(g, T, cfg.partition);
  Stores st = create_stores(cluster.driver(), cfg, n);
  const std::size_t iters = iterations_per_epoch(g, cfg, part);
  const bool designated = cfg.update == UpdateMode::kDesignated && T > 1 &&
                          cfg.optimizer == OptimizerKind::kSgdMomentum;
  const std::uint64_t rounds_per_iter = designated ? 3 : 1;
  const std::uint64_t base = cluster.barrier_base();
  const double lr = cfg.resolved_lr();
  // Per-trainer issuing: T decays of share_mu make one decay of mu, and
  // share_lr keeps each gradient's total contribution lr / (1 - mu).
  const double share_mu = std::pow(cfg.momentum, 1.0 / static_cast<double>(T));
  const double share_lr = cfg.momentum > 0 ? lr * (1.0 - share_mu) / (1.0 - cfg.momentum) : lr;
  const AdamParams adam{lr, cfg.beta1, cfg.beta2, cfg.eps};
  const auto participants = static_cast<std::uint32_t>(T);

  TrainResult result;
  std::mutex mu;
  std::vector<std::thread> workers;
  for (std::uint32_t t = 0; t < T; ++t) {
    workers.emplace_back([&, t] {
      rt::Session& s = cluster.trainer(t);
      BatchSource src(g, cfg, part, t);
      std::uint64_t round = base;
      auto sync = [&] { barrier(s, BarrierToken{round++, participants}); };
      std::vector<IterationMetrics> local;
      try {
        for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
          for (std::size_t it = 0; it < iters; ++it) {
            const auto t0 = std::chrono::steady_clock::now();
            const std::uint64_t up0 = s.counters().data_sent, down0 = s.counters().data_received;
            TrainBatch batch = src.next(epoch, it);

            auto pe = st.model.get_async(s, batch.ids);
            std::optional<PendingRows> pc;
            if (st.has_ctx) pc.emplace(st.ctx.get_async(s, batch.ids));
            RowBlock emb = pe.wait();
            RowBlock ctx;
            if (pc) ctx = pc->wait();
            BatchGrad bg = skipgram_batch_grad(emb, batch.pairs, st.has_ctx ? &ctx : nullptr,
                                               gradient_reduction(cfg.algorithm));

            IterationMetrics m;
            m.iteration = epoch * iters + it;
            m.epoch = epoch;
            m.trainer = t;
            m.loss = bg.loss;
            m.rows_down = emb.size() + ctx.size();
            m.rows_up = bg.grad.size() + bg.context_grad.size();

            if (cfg.optimizer == OptimizerKind::kAdam) {
              adam_step(s, st.model, st.m, st.v, st.steps, bg.grad, adam);
              if (st.has_ctx) adam_step(s, st.ctx, st.ctx_m, st.ctx_v, st.ctx_steps, bg.context_grad, adam);
              sync();
            } else if (designated) {
              scale_rows(bg.grad, 1.0 / static_cast<double>(T));
              scale_rows(bg.context_grad, 1.0 / static_cast<double>(T));
              if (t == 0) {
                decay_momentum(s, st.momentum, cfg.momentum);
                if (st.has_ctx) decay_momentum(s, st.ctx_momentum, cfg.momentum);
              }
              sync();
              accumulate_gradient(s, st.momentum, bg.grad);
              if (st.has_ctx) accumulate_gradient(s, st.ctx_momentum, bg.context_grad);
              sync();
              if (t == 0) {
                apply_momentum(s, st.model, st.momentum, lr);
                if (st.has_ctx) apply_momentum(s, st.ctx, st.ctx_momentum, lr);
              }
              sync();
            } else {
              // Every trainer issues the whole step unsynchronized, which
              // together approximates one trainer with a batch of T * B.
              // Averaged losses therefore also average across trainers.
              if (gradient_reduction(cfg.algorithm) == GradReduction::kMean) {
                scale_rows(bg.grad, 1.0 / static_cast<double>(T));
                scale_rows(bg.context_grad, 1.0 / static_cast<double>(T));
              }
              sgd_momentum_step(s, st.model, st.momentum, bg.grad, share_lr, share_mu);
              if (st.has_ctx) {
                sgd_momentum_step(s, st.ctx, st.ctx_momentum, bg.context_grad, share_lr, share_mu);
              }
              sync();
            }
            m.bytes_up = s.counters().data_sent - up0;
            m.bytes_down = s.counters().data_received - down0;
            m.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
            local.push_back(m);
          }
        }
      } catch (const std::exception& e) {
        spdlog::error("trainer {} stopped: {}", t, e.what());
        abort_barrier(s, BarrierToken{round, participants});
        std::lock_guard<std::mutex> lk(mu);
        if (result.error.empty()) result.error = "trainer " + std::to_string(t) + ": " + e.what();
      }
      std::lock_guard<std::mutex> lk(mu);
      result.metrics.insert(result.metrics.end(), local.begin(), local.end());
    });
  }
  for (auto& w : workers) w.join();
  cluster.advance_barrier_base(cfg.epochs * iters * rounds_per_iter + 1);

  std::sort(result.metrics.begin(), result.metrics.end(), [](const auto& a, const auto& b) {
    return std::tie(a.iteration, a.trainer) < std::tie(b.iteration, b.trainer);
  });
  result.num_nodes = n;
  result.dim = cfg.dim;
  if (result.ok()) result.embeddings = st.model.export_dense(cluster.driver());
  result.accounting = cluster.accounting();
  return result;
}

TrainResult train(const Graph& g, const TrainConfig& cfg, rt::ClusterOptions options) {
  cfg.validate();
  options.num_shards = cfg.num_shards;
  options.num_trainers = cfg.num_trainers;
  rt::Cluster cluster(std::move(options));
  cluster.start();
  return train(g, cfg, cluster);
}

}  // namespace gshard
