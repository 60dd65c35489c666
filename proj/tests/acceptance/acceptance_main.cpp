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

// Runs every acceptance criterion and prints one PASS/FAIL line for each.
// Exit status is nonzero if any criterion fails.

#include <spdlog/spdlog.h>

#include <Eigen/Dense>
#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "gshard/baseline.hpp"
#include "gshard/fetch.hpp"
#include "gshard/fixtures.hpp"
#include "gshard/loss.hpp"
#include "gshard/train.hpp"
#include "model_checker.hpp"
#include "oracles.hpp"

namespace gshard {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double final_smoothed_loss(const TrainResult& r, std::size_t window = 50) {
  auto smooth = moving_average(mean_loss_by_iteration(r.metrics), window);
  return smooth.empty() ? 0.0 : smooth.back();
}

// ---------------------------------------------------------------------------
// 1. Sharded momentum SGD against the dense optimizer oracle.

struct OracleRun {
  double max_diff = 0;
  std::size_t iterations = 0;
  rt::AccountingSnapshot accounting;
  std::vector<double> embeddings;
};

OracleRun optimizer_oracle(rt::Transport transport) {
  static const Graph g = fixtures::sbm(100, 2, 0.3, 0.05, 3).graph();
  TrainConfig cfg;
  cfg.dim = 8;
  cfg.dtype = DType::kF64;
  cfg.batch_size = 10;  // 10 iterations per epoch
  cfg.epochs = 20;
  cfg.num_shards = 4;
  cfg.shard_scheme = ShardScheme::kHash;
  cfg.seed = 17;
  rt::ClusterOptions o;
  o.transport = transport;
  auto sharded = train(g, cfg, o);
  if (!sharded.ok()) throw Error(sharded.error);

  // Replay the identical batch stream through a dense model that only knows
  // dense_reference_sgd_momentum.
  auto part = partition_nodes(g, 1, cfg.partition);
  BatchSource src(g, cfg, part, 0);
  const double a = cfg.init_scale / static_cast<double>(cfg.dim);
  DenseModel dense = DenseModel::initialized(g.num_nodes(), cfg.dim, rt::InitSpec::uniform(-a, a), cfg.seed);
  std::vector<double> full(dense.matrix.size());
  OracleRun out;
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    for (std::size_t it = 0; it < src.iterations_per_epoch(); ++it) {
      auto batch = src.next(e, it);
      auto emb = dense.gather(batch.ids);
      auto bg = skipgram_batch_grad(emb, batch.pairs, nullptr, gradient_reduction(cfg.algorithm));
      std::fill(full.begin(), full.end(), 0.0);
      scatter_add(bg.grad, full);
      dense_reference_sgd_momentum(dense, full, cfg.resolved_lr(), cfg.momentum);
      ++out.iterations;
    }
  }
  out.max_diff = testing::max_abs_diff(sharded.embeddings, dense.matrix);
  out.accounting = sharded.accounting;
  out.embeddings = std::move(sharded.embeddings);
  return out;
}

Outcome criterion1() {
  auto t0 = Clock::now();
  auto r = optimizer_oracle(rt::Transport::kInproc);
  const double secs = seconds_since(t0);
  return {r.iterations == 200 && r.max_diff <= 1e-12 && secs < 10,
          fmt("%zu iterations, max |sharded - dense| = %.3g, %.2fs", r.iterations, r.max_diff, secs)};
}

// ---------------------------------------------------------------------------
// 2. Loss parity between graphscale and data-parallel training.

const fixtures::Fixture& sbm200() {
  static const auto f = fixtures::sbm(200, 2, 0.3, 0.02, 1);
  return f;
}

Outcome criterion2() {
  auto t0 = Clock::now();
  const Graph g = sbm200().graph();
  double gs = 0, ddp = 0;
  const int seeds = 5;
  for (int seed = 0; seed < seeds; ++seed) {
    TrainConfig cfg;
    cfg.batch_size = 64;
    cfg.num_trainers = 4;
    cfg.num_shards = 2;
    cfg.epochs = 4;
    cfg.seed = static_cast<std::uint64_t>(seed);
    auto a = train(g, cfg);
    cfg.mode = TrainMode::kDdp;
    auto b = train(g, cfg);
    if (!a.ok() || !b.ok()) return {false, a.error + b.error};
    gs += final_smoothed_loss(a) / seeds;
    ddp += final_smoothed_loss(b) / seeds;
  }
  const double rel = std::abs(gs - ddp) / ddp;
  const double secs = seconds_since(t0);
  return {rel <= 0.05 && secs < 120,
          fmt("graphscale %.5f vs ddp %.5f (relative gap %.4f), %.1fs", gs, ddp, rel, secs)};
}

// ---------------------------------------------------------------------------
// 3. Sparse gradients and the communication ratio to dense allreduce.

struct SparsityRun {
  std::uint64_t max_rows_up = 0;
  std::uint64_t max_gs_bytes = 0;
  std::uint64_t min_ddp_up = ~0ull, max_ddp_up = 0, ddp_down = 0;
  std::vector<IterationMetrics> gs_metrics;
  rt::AccountingSnapshot gs_accounting, ddp_accounting;
};

const Graph& graph10k() {
  static const Graph g = fixtures::power_law(10000, 5, 4).graph();
  return g;
}

SparsityRun sparsity(rt::Transport transport) {
  TrainConfig cfg;
  cfg.dim = 16;
  cfg.batch_size = 128;
  cfg.walk_len = 5;
  cfg.epochs = 1;
  cfg.num_shards = 4;
  cfg.seed = 2;
  rt::ClusterOptions o;
  o.transport = transport;
  SparsityRun out;
  auto gs = train(graph10k(), cfg, o);
  if (!gs.ok()) throw Error(gs.error);
  for (const auto& m : gs.metrics) {
    out.max_rows_up = std::max(out.max_rows_up, m.rows_up);
    out.max_gs_bytes = std::max(out.max_gs_bytes, m.bytes_up + m.bytes_down);
  }
  out.gs_metrics = gs.metrics;
  out.gs_accounting = gs.accounting;

  // A few dense iterations pin the data-parallel payload.
  TrainConfig dcfg = cfg;
  dcfg.mode = TrainMode::kDdp;
  dcfg.batch_size = 2500;  // 4 iterations; the payload does not depend on B
  auto ddp = train(graph10k(), dcfg, o);
  if (!ddp.ok()) throw Error(ddp.error);
  for (const auto& m : ddp.metrics) {
    out.min_ddp_up = std::min(out.min_ddp_up, m.bytes_up);
    out.max_ddp_up = std::max(out.max_ddp_up, m.bytes_up);
    out.ddp_down = std::max(out.ddp_down, m.bytes_down);
  }
  out.ddp_accounting = ddp.accounting;
  return out;
}

Outcome criterion3() {
  auto t0 = Clock::now();
  auto r = sparsity(rt::Transport::kInproc);
  const std::uint64_t ddp_payload = 10000ull * 16 * 4;
  const double ratio = static_cast<double>(r.max_gs_bytes) / static_cast<double>(2 * ddp_payload);
  const double secs = seconds_since(t0);
  const bool ddp_exact = r.min_ddp_up == ddp_payload && r.max_ddp_up == ddp_payload && r.ddp_down == ddp_payload;
  return {r.max_rows_up <= 640 && ddp_exact && ratio <= 0.10 && secs < 60,
          fmt("max rows up %llu (bound 640), ddp payload %llu B/direction, worst graphscale/ddp %.4f, %.1fs",
              static_cast<unsigned long long>(r.max_rows_up), static_cast<unsigned long long>(r.max_ddp_up),
              ratio, secs)};
}

// ---------------------------------------------------------------------------
// 4. Deduplicated fetch against naive fetch.

struct FetchRun {
  BenchResult bench;
  rt::AccountingSnapshot accounting;
};

FetchRun fetch_run(rt::Transport transport) {
  static const Graph g = fixtures::power_law(5000, 5, 6).graph();
  rt::ClusterOptions o;
  o.num_shards = 4;
  o.num_trainers = 1;
  o.transport = transport;
  auto cluster = rt::start_cluster(o);
  auto store = MatrixStore::create(cluster->driver(), "features", 16, ShardMap::range(5000, 4),
                                   rt::InitSpec::uniform(-1, 1), 5, DType::kF32);
  cluster->reset_accounting();
  BenchConfig cfg;
  cfg.fanout = FanoutSpec{{15, 10}};
  cfg.batch_size = 512;
  cfg.trials = 3;
  cfg.seed = 9;
  cfg.strategies = {FetchStrategy::kNaive, FetchStrategy::kDeduped};
  FetchRun out{bench_fetch(g, store, *cluster, cfg), {}};
  out.accounting = cluster->accounting();
  return out;
}

Outcome criterion4() {
  auto t0 = Clock::now();
  auto r = fetch_run(rt::Transport::kInproc);
  const auto& naive = r.bench.of(FetchStrategy::kNaive);
  const auto& dedup = r.bench.of(FetchStrategy::kDeduped);
  double min_ratio = 1e300;
  for (const auto& rec : r.bench.records) {
    if (rec.report.strategy == FetchStrategy::kNaive) {
      min_ratio = std::min(min_ratio, static_cast<double>(rec.report.vertices_fetched) /
                                          static_cast<double>(rec.report.unique_vertices));
    }
  }
  const double secs = seconds_since(t0);
  return {r.bench.features_identical && dedup.max_requests <= 4 && min_ratio >= 1.5 && secs < 30,
          fmt("features identical %s, deduped requests <= %llu, naive requests %.0f, "
              "naive/unique >= %.2f, %.1fs",
              r.bench.features_identical ? "yes" : "no", static_cast<unsigned long long>(dedup.max_requests),
              naive.mean_requests, min_ratio, secs)};
}

// ---------------------------------------------------------------------------
// 5. Four trainers writing without locks against one trainer.

Outcome criterion5() {
  auto t0 = Clock::now();
  // Ten planted communities so the loss actually moves within the run. The
  // single trainer converges in about 10 epochs; the run is twice that.
  static const Graph g = fixtures::sbm(200, 10, 0.5, 0.005, 1).graph();
  const int seeds = 5;
  double one = 0, designated = 0, per_trainer = 0;
  for (int seed = 0; seed < seeds; ++seed) {
    TrainConfig cfg;
    cfg.dim = 16;
    cfg.epochs = 20;
    cfg.num_shards = 2;
    cfg.seed = static_cast<std::uint64_t>(seed);
    cfg.batch_size = 100;  // 2 iterations per epoch, 100 walks per iteration
    auto a = train(g, cfg);
    if (!a.ok()) return {false, a.error};
    one += final_smoothed_loss(a, 10) / seeds;
    cfg.num_trainers = 4;
    cfg.batch_size = 25;  // 4 x 25 walks per iteration
    for (auto mode : {UpdateMode::kDesignated, UpdateMode::kPerTrainer}) {
      cfg.update = mode;
      auto b = train(g, cfg);
      if (!b.ok()) return {false, b.error};
      if (a.metrics.size() * 4 != b.metrics.size()) return {false, "sample budgets differ"};
      (mode == UpdateMode::kDesignated ? designated : per_trainer) += final_smoothed_loss(b, 10) / seeds;
    }
  }
  const double gap_d = std::abs(designated - one) / one;
  const double gap_p = std::abs(per_trainer - one) / one;
  const double secs = seconds_since(t0);
  return {gap_d <= 0.10 && gap_p <= 0.10 && secs < 120,
          fmt("1 trainer %.5f; 4 trainers designated %.5f (gap %.4f), per_trainer %.5f (gap %.4f), %.1fs",
              one, designated, gap_d, per_trainer, gap_p, secs)};
}

// ---------------------------------------------------------------------------
// 6. Analytic gradients against central finite differences.

double norm_rel_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
}

Outcome criterion6() {
  auto t0 = Clock::now();
  const std::size_t d = 8, k = 5;
  testing::Gen gen(2024);
  double worst_dw = 0, worst_line = 0;
  for (int p = 0; p < 100; ++p) {
    // DeepWalk: one (center, context) pair with k negatives.
    auto x = gen.reals(d * (2 + k), -1.0, 1.0);
    auto f = [&](const std::vector<double>& v) {
      std::span<const double> s(v);
      return skipgram_loss_grad(s.first(d), s.subspan(d, d), s.subspan(2 * d)).loss;
    };
    std::span<const double> s(x);
    auto t = skipgram_loss_grad(s.first(d), s.subspan(d, d), s.subspan(2 * d));
    std::vector<double> analytic = t.g_center;
    analytic.insert(analytic.end(), t.g_context.begin(), t.g_context.end());
    analytic.insert(analytic.end(), t.g_negs.begin(), t.g_negs.end());
    worst_dw = std::max(worst_dw, norm_rel_error(analytic, testing::numeric_gradient(f, x)));

    // LINE: one edge with k negatives, through the batch gradient.
    LineBatch lb;
    lb.sources = {0};
    lb.destinations = {1};
    lb.num_neg = k;
    for (VertexId w = 2; w < 2 + k; ++w) lb.negatives.push_back(w);
    auto ids = lb.unique_ids();
    auto y = gen.reals(ids.size() * d, -1.0, 1.0);
    auto fl = [&](const std::vector<double>& v) {
      RowBlock emb(ids, d);
      emb.rows = v;
      return line_batch_grad(emb, lb).loss;
    };
    RowBlock emb(ids, d);
    emb.rows = y;
    worst_line = std::max(worst_line,
                          norm_rel_error(line_batch_grad(emb, lb).grad.rows, testing::numeric_gradient(fl, y)));
  }
  const double secs = seconds_since(t0);
  return {worst_dw <= 1e-6 && worst_line <= 1e-6 && secs < 5,
          fmt("worst relative error DeepWalk %.2e, LINE %.2e over 100 points each, %.2fs", worst_dw,
              worst_line, secs)};
}

// ---------------------------------------------------------------------------
// 7. Embeddings separate the planted blocks.

// Least squares on one half of the nodes (even or odd ids), accuracy on the
// other half, averaged over both splits.
double held_out_accuracy(const std::vector<double>& emb, std::size_t n, std::size_t d,
                         const std::vector<std::uint32_t>& labels) {
  Eigen::MatrixXd x(n, d + 1);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) x(i, j) = emb[i * d + j];
    x(i, d) = 1.0;
    y(i) = labels[i] == 0 ? -1.0 : 1.0;
  }
  std::size_t right = 0, total = 0;
  for (std::size_t fold = 0; fold < 2; ++fold) {
    std::vector<Eigen::Index> fit, test;
    for (std::size_t i = 0; i < n; ++i) (i % 2 == fold ? fit : test).push_back(static_cast<Eigen::Index>(i));
    Eigen::MatrixXd a = x(fit, Eigen::all);
    Eigen::VectorXd b = y(fit);
    Eigen::VectorXd w = a.colPivHouseholderQr().solve(b);
    for (auto i : test) {
      right += ((x.row(i) * w)(0) > 0) == (y(i) > 0);
      ++total;
    }
  }
  return static_cast<double>(right) / static_cast<double>(total);
}

Outcome criterion7() {
  auto t0 = Clock::now();
  const auto& fx = sbm200();
  const Graph g = fx.graph();
  TrainConfig cfg;
  cfg.dim = 16;
  cfg.batch_size = 64;
  cfg.epochs = 20;
  cfg.lr = 0.002;
  cfg.num_shards = 2;
  cfg.seed = 1;
  auto r = train(g, cfg);
  if (!r.ok()) return {false, r.error};
  const double acc = held_out_accuracy(r.embeddings, r.num_nodes, r.dim, fx.labels);

  // Control: the untrained initial rows should not separate the blocks.
  const double a = cfg.init_scale / static_cast<double>(cfg.dim);
  auto init = DenseModel::initialized(g.num_nodes(), cfg.dim, rt::InitSpec::uniform(-a, a), cfg.seed);
  const double base = held_out_accuracy(init.matrix, g.num_nodes(), cfg.dim, fx.labels);
  const double secs = seconds_since(t0);
  return {acc >= 0.9 && secs < 120,
          fmt("held-out accuracy %.3f (untrained rows %.3f), %.1fs", acc, base, secs)};
}

// ---------------------------------------------------------------------------
// 8. Barrier visibility over every interleaving.

Outcome criterion8() {
  auto t0 = Clock::now();
  testing::ModelCheckConfig cfg;
  cfg.trainers = 2;
  cfg.shards = 2;
  cfg.iterations = 1;
  auto r = testing::check_barrier_visibility(cfg);
  testing::ModelCheckConfig neg = cfg;
  neg.wait_for_write_acks = false;
  auto control = testing::check_barrier_visibility(neg);
  const double secs = seconds_since(t0);
  const bool ok = r.exhausted && r.violations == 0 && r.deadlocks == 0 && r.completed > 0 &&
                  control.violations > 0 && secs < 60;
  return {ok, fmt("%llu states, %llu violations, %llu deadlocks; without write acks %llu violations, %.1fs",
                  static_cast<unsigned long long>(r.states), static_cast<unsigned long long>(r.violations),
                  static_cast<unsigned long long>(r.deadlocks),
                  static_cast<unsigned long long>(control.violations), secs)};
}

// ---------------------------------------------------------------------------
// 9. Criteria 1, 3 and 4 again over TCP loopback.

bool same_metrics(const std::vector<IterationMetrics>& a, const std::vector<IterationMetrics>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].loss != b[i].loss || a[i].rows_up != b[i].rows_up || a[i].rows_down != b[i].rows_down ||
        a[i].bytes_up != b[i].bytes_up || a[i].bytes_down != b[i].bytes_down) {
      return false;
    }
  }
  return true;
}

bool same_reports(const BenchResult& a, const BenchResult& b) {
  if (a.records.size() != b.records.size()) return false;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const auto& x = a.records[i].report;
    const auto& y = b.records[i].report;
    if (x.strategy != y.strategy || x.requests != y.requests || x.vertices_fetched != y.vertices_fetched ||
        x.unique_vertices != y.unique_vertices || x.cross_partition_visits != y.cross_partition_visits ||
        x.bytes_up != y.bytes_up || x.bytes_down != y.bytes_down) {
      return false;
    }
  }
  return a.features_identical == b.features_identical;
}

Outcome criterion9() {
  auto t0 = Clock::now();
  std::ostringstream why;
  bool ok = true;
  auto check = [&](bool cond, const char* what) {
    if (!cond) {
      ok = false;
      why << what << " differs; ";
    }
  };

  auto o_in = optimizer_oracle(rt::Transport::kInproc);
  auto o_tcp = optimizer_oracle(rt::Transport::kTcp);
  check(o_tcp.max_diff <= 1e-12, "criterion 1 tolerance");
  check(o_in.embeddings == o_tcp.embeddings, "criterion 1 model");
  check(o_in.accounting == o_tcp.accounting, "criterion 1 accounting");

  auto s_in = sparsity(rt::Transport::kInproc);
  auto s_tcp = sparsity(rt::Transport::kTcp);
  check(s_tcp.max_rows_up <= 640 && s_tcp.max_ddp_up == 640000, "criterion 3 bounds");
  check(same_metrics(s_in.gs_metrics, s_tcp.gs_metrics), "criterion 3 metrics");
  check(s_in.gs_accounting == s_tcp.gs_accounting, "criterion 3 graphscale accounting");
  check(s_in.ddp_accounting == s_tcp.ddp_accounting, "criterion 3 ddp accounting");

  auto f_in = fetch_run(rt::Transport::kInproc);
  auto f_tcp = fetch_run(rt::Transport::kTcp);
  check(f_tcp.bench.features_identical && f_tcp.bench.of(FetchStrategy::kDeduped).max_requests <= 4,
        "criterion 4 bounds");
  check(same_reports(f_in.bench, f_tcp.bench), "criterion 4 reports");
  check(f_in.accounting == f_tcp.accounting, "criterion 4 accounting");

  const double secs = seconds_since(t0);
  std::string detail = ok ? "models, metrics, fetch reports and per-endpoint accounting identical" : why.str();
  return {ok, detail + fmt(", %.1fs", secs)};
}

}  // namespace
}  // namespace gshard

int main() {
  spdlog::set_level(spdlog::level::warn);
  using gshard::Outcome;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"optimizer oracle equivalence", gshard::criterion1},
      {"loss parity with ddp", gshard::criterion2},
      {"sparsity and communication ratio", gshard::criterion3},
      {"fetch equivalence and consolidation", gshard::criterion4},
      {"hogwild tolerance", gshard::criterion5},
      {"gradient correctness", gshard::criterion6},
      {"embedding usefulness", gshard::criterion7},
      {"barrier visibility", gshard::criterion8},
      {"transport equivalence", gshard::criterion9},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
