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

#include "gshard/fetch.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <chrono>
#include <mutex>
#include <thread>
#include <unordered_map>
#include <unordered_set>

namespace gshard {

FetchStrategy parse_fetch_strategy(const std::string& s) {
  if (s == "naive") return FetchStrategy::kNaive;
  if (s == "per_hop") return FetchStrategy::kPerHop;
  if (s == "deduped") return FetchStrategy::kDeduped;
  throw ConfigError("unknown fetch strategy '" + s + "' (expected naive|per_hop|deduped)");
}

const char* fetch_strategy_name(FetchStrategy s) {
  switch (s) {
    case FetchStrategy::kNaive: return "naive";
    case FetchStrategy::kPerHop: return "per_hop";
    case FetchStrategy::kDeduped: return "deduped";
  }
  return "?";
}

RowBlock FetchResult::by_occurrence(const std::vector<VertexId>& occurrences) const {
  std::unordered_map<VertexId, std::size_t> at;
  at.reserve(rows.size() * 2);
  for (std::size_t i = 0; i < rows.size(); ++i) at.emplace(rows.ids[i], i);
  RowBlock out(occurrences, rows.dim);
  for (std::size_t i = 0; i < occurrences.size(); ++i) {
    auto it = at.find(occurrences[i]);
    if (it == at.end()) throw ContractError("fetched rows miss node " + std::to_string(occurrences[i]));
    auto src = rows.row(it->second);
    std::copy(src.begin(), src.end(), out.rows.begin() + i * rows.dim);
  }
  return out;
}

namespace {

// Measures the wire traffic a fetch causes on its session.
class Meter {
 public:
  explicit Meter(rt::Session& s)
      : s_(s),
        frames0_(s.counters().frames_sent),
        up0_(s.counters().data_sent),
        down0_(s.counters().data_received),
        t0_(std::chrono::steady_clock::now()) {}

  void finish(FetchReport& r) const {
    r.requests = s_.counters().frames_sent - frames0_;
    r.bytes_up = s_.counters().data_sent - up0_;
    r.bytes_down = s_.counters().data_received - down0_;
    r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  rt::Session& s_;
  std::uint64_t frames0_, up0_, down0_;
  std::chrono::steady_clock::time_point t0_;
};

std::uint64_t remote_count(const std::vector<VertexId>& ids, const NodePartition& p, std::uint32_t home) {
  std::uint64_t c = 0;
  for (VertexId v : ids) c += p.part_of(v) != home;
  return c;
}

// Seeds, then the distinct sampled neighbors of each hop.
std::vector<std::vector<VertexId>> hop_sets(const SampledSubgraph& sub) {
  std::vector<std::vector<VertexId>> hops;
  std::unordered_set<VertexId> seen;
  std::vector<VertexId> h0;
  for (VertexId v : sub.seeds) {
    if (seen.insert(v).second) h0.push_back(v);
  }
  hops.push_back(std::move(h0));
  for (const auto& layer : sub.layers) {
    seen.clear();
    std::vector<VertexId> h;
    for (const auto& [src, dst] : layer) {
      if (seen.insert(dst).second) h.push_back(dst);
    }
    hops.push_back(std::move(h));
  }
  return hops;
}

}  // namespace

FetchResult fetch_naive(rt::Session& s, const MatrixStore& features, const SampledSubgraph& sub,
                        const NodePartition& partition, std::uint32_t home_part) {
  FetchResult r;
  r.report.strategy = FetchStrategy::kNaive;
  auto occ = sub.occurrences();
  Meter meter(s);
  r.rows = features.get_each(s, occ).wait();
  meter.finish(r.report);
  r.report.vertices_fetched = occ.size();
  r.report.unique_vertices = sub.unique_nodes.size();
  r.report.cross_partition_visits = remote_count(occ, partition, home_part);
  return r;
}

FetchResult fetch_per_hop(rt::Session& s, const MatrixStore& features, const SampledSubgraph& sub,
                          const NodePartition& partition, std::uint32_t home_part) {
  FetchResult r;
  r.report.strategy = FetchStrategy::kPerHop;
  auto hops = hop_sets(sub);
  Meter meter(s);
  std::vector<PendingRows> pending;
  for (const auto& h : hops) {
    if (!h.empty()) pending.push_back(features.get_async(s, h));
  }
  r.rows.dim = features.dim();
  for (auto& p : pending) {
    RowBlock b = p.wait();
    r.rows.ids.insert(r.rows.ids.end(), b.ids.begin(), b.ids.end());
    r.rows.rows.insert(r.rows.rows.end(), b.rows.begin(), b.rows.end());
  }
  meter.finish(r.report);
  r.report.vertices_fetched = r.rows.size();
  r.report.unique_vertices = sub.unique_nodes.size();
  r.report.cross_partition_visits = remote_count(r.rows.ids, partition, home_part);
  return r;
}

FetchResult fetch_deduped(rt::Session& s, const MatrixStore& features, const SampledSubgraph& sub,
                          const NodePartition& partition, std::uint32_t home_part) {
  FetchResult r;
  r.report.strategy = FetchStrategy::kDeduped;
  Meter meter(s);
  r.rows = features.get(s, sub.unique_nodes);
  meter.finish(r.report);
  r.report.vertices_fetched = r.rows.size();
  r.report.unique_vertices = sub.unique_nodes.size();
  r.report.cross_partition_visits = remote_count(sub.unique_nodes, partition, home_part);
  return r;
}

FetchResult fetch(FetchStrategy strategy, rt::Session& s, const MatrixStore& features,
                  const SampledSubgraph& sub, const NodePartition& partition, std::uint32_t home_part) {
  switch (strategy) {
    case FetchStrategy::kNaive: return fetch_naive(s, features, sub, partition, home_part);
    case FetchStrategy::kPerHop: return fetch_per_hop(s, features, sub, partition, home_part);
    case FetchStrategy::kDeduped: return fetch_deduped(s, features, sub, partition, home_part);
  }
  throw ContractError("bad fetch strategy");
}

std::vector<Matrix> random_weights(const std::vector<std::size_t>& dims, std::uint64_t seed) {
  if (dims.size() < 2) throw ContractError("need at least one layer");
  Rng rng(seed);
  std::vector<Matrix> out;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    Matrix w{2 * dims[k], dims[k + 1], {}};
    const double a = 1.0 / std::sqrt(static_cast<double>(w.rows));
    std::uniform_real_distribution<double> u(-a, a);
    w.data.resize(w.rows * w.cols);
    for (double& x : w.data) x = u(rng);
    out.push_back(std::move(w));
  }
  return out;
}

RowBlock mean_forward(const RowBlock& features, const SampledSubgraph& sub,
                      const std::vector<Matrix>& weights) {
  const std::size_t h = weights.size();
  if (h == 0) throw ContractError("mean_forward needs at least one layer");
  if (h > sub.layers.size()) throw ContractError("more layers than sampled hops");

  std::unordered_map<VertexId, std::size_t> at;
  for (std::size_t i = 0; i < features.size(); ++i) at.emplace(features.ids[i], i);
  // Current representation of every subgraph node, indexed like unique_nodes.
  const auto& nodes = sub.unique_nodes;
  std::unordered_map<VertexId, std::size_t> pos;
  for (std::size_t i = 0; i < nodes.size(); ++i) pos.emplace(nodes[i], i);
  std::size_t dim = features.dim;
  std::vector<double> cur(nodes.size() * dim);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    auto it = at.find(nodes[i]);
    if (it == at.end()) throw ContractError("features miss node " + std::to_string(nodes[i]));
    std::copy_n(features.rows.begin() + it->second * dim, dim, cur.begin() + i * dim);
  }

  for (std::size_t k = 1; k <= h; ++k) {
    const Matrix& w = weights[k - 1];
    if (w.rows != 2 * dim) throw ContractError("layer " + std::to_string(k) + " weight has wrong input size");
    const auto& edges = sub.layers[h - k];
    std::vector<double> agg(nodes.size() * dim, 0.0);
    std::vector<std::size_t> cnt(nodes.size(), 0);
    for (const auto& [src, dst] : edges) {
      const std::size_t a = pos.at(src), b = pos.at(dst);
      for (std::size_t j = 0; j < dim; ++j) agg[a * dim + j] += cur[b * dim + j];
      cnt[a]++;
    }
    std::vector<double> next(nodes.size() * w.cols, 0.0);
    std::vector<double> in(2 * dim);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      for (std::size_t j = 0; j < dim; ++j) {
        in[j] = cur[i * dim + j];
        in[dim + j] = cnt[i] ? agg[i * dim + j] / static_cast<double>(cnt[i]) : cur[i * dim + j];
      }
      for (std::size_t o = 0; o < w.cols; ++o) {
        double acc = 0.0;
        for (std::size_t j = 0; j < 2 * dim; ++j) acc += in[j] * w.data[j * w.cols + o];
        next[i * w.cols + o] = std::max(0.0, acc);
      }
    }
    cur = std::move(next);
    dim = w.cols;
  }

  RowBlock out(sub.seeds, dim);
  for (std::size_t i = 0; i < sub.seeds.size(); ++i) {
    std::copy_n(cur.begin() + pos.at(sub.seeds[i]) * dim, dim, out.rows.begin() + i * dim);
  }
  return out;
}

const StrategySummary& BenchResult::of(FetchStrategy s) const {
  for (const auto& x : summary) {
    if (x.strategy == s) return x;
  }
  throw ContractError(std::string("no summary for strategy ") + fetch_strategy_name(s));
}

BenchResult bench_fetch(const Graph& g, const MatrixStore& features, rt::Cluster& cluster,
                        const BenchConfig& cfg) {
  cfg.fanout.validate();
  if (cfg.trials < 1) throw ConfigError("trials must be >= 1");
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (cfg.strategies.empty()) throw ConfigError("no fetch strategies selected");
  const std::size_t T = cluster.options().num_trainers;
  auto part = partition_nodes(g, T, cfg.partition);

  BenchResult result;
  std::mutex mu;
  std::exception_ptr failure;
  std::vector<std::thread> workers;
  for (std::uint32_t t = 0; t < T; ++t) {
    workers.emplace_back([&, t] {
      try {
        rt::Session& s = cluster.trainer(t);
        Rng rng = trainer_rng(cfg.seed, t);
        auto members = part.members(t);
        std::vector<BenchRecord> local;
        bool same = true;
        for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
          std::vector<VertexId> seeds;
          if (members.size() >= cfg.batch_size) {
            std::sample(members.begin(), members.end(), std::back_inserter(seeds), cfg.batch_size, rng);
          } else {
            seeds = members;
          }
          auto sub = fanout_sample(g, seeds, cfg.fanout, rng);
          auto occ = sub.occurrences();
          std::optional<RowBlock> reference;
          for (auto strategy : cfg.strategies) {
            auto r = fetch(strategy, s, features, sub, part, t);
            auto rows = r.by_occurrence(occ);
            if (!reference) {
              reference = std::move(rows);
            } else if (rows.rows != reference->rows) {
              same = false;
            }
            local.push_back({t, trial, occ.size(), r.report});
          }
        }
        std::lock_guard<std::mutex> lk(mu);
        result.records.insert(result.records.end(), local.begin(), local.end());
        result.features_identical = result.features_identical && same;
      } catch (...) {
        std::lock_guard<std::mutex> lk(mu);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  if (failure) std::rethrow_exception(failure);

  std::stable_sort(result.records.begin(), result.records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.trial, a.trainer) < std::tie(b.trial, b.trainer);
  });
  double dup = 0;
  std::size_t dup_n = 0;
  for (auto strategy : cfg.strategies) {
    StrategySummary sm{strategy};
    double occ = 0, secs = 0;
    std::size_t n = 0;
    for (const auto& r : result.records) {
      if (r.report.strategy != strategy) continue;
      ++n;
      sm.mean_requests += static_cast<double>(r.report.requests);
      sm.mean_vertices_fetched += static_cast<double>(r.report.vertices_fetched);
      sm.mean_bytes += static_cast<double>(r.report.bytes());
      sm.max_requests = std::max(sm.max_requests, r.report.requests);
      occ += static_cast<double>(r.occurrences);
      secs += r.report.wall_ms / 1000.0;
      if (strategy == cfg.strategies.front() && r.report.unique_vertices > 0) {
        dup += static_cast<double>(r.occurrences) / static_cast<double>(r.report.unique_vertices);
        ++dup_n;
      }
    }
    if (n) {
      sm.mean_requests /= static_cast<double>(n);
      sm.mean_vertices_fetched /= static_cast<double>(n);
      sm.mean_bytes /= static_cast<double>(n);
    }
    sm.throughput = secs > 0 ? occ / secs : 0;
    result.summary.push_back(sm);
  }
  result.duplicate_ratio = dup_n ? dup / static_cast<double>(dup_n) : 0;
  return result;
}

MatrixStore load_feature_store(rt::Session& s, const Graph& g, ShardScheme scheme, std::size_t shards,
                               std::size_t dim, std::uint64_t seed, DType dtype) {
  auto map = ShardMap::make(scheme, g.num_nodes(), shards);
  if (!g.has_features()) {
    return MatrixStore::create(s, "features", dim, map, rt::InitSpec::uniform(-1, 1), seed, dtype);
  }
  const std::size_t d = g.feature_dim();
  auto store = MatrixStore::create(s, "features", d, map, rt::InitSpec::zeros(), 0, dtype);
  const auto f = g.features();
  const std::size_t chunk = 4096;
  for (std::size_t b = 0; b < g.num_nodes(); b += chunk) {
    const std::size_t e = std::min(g.num_nodes(), b + chunk);
    std::vector<VertexId> ids(e - b);
    for (std::size_t v = b; v < e; ++v) ids[v - b] = v;
    RowBlock block(ids, d);
    std::copy(f.begin() + static_cast<std::ptrdiff_t>(b * d), f.begin() + static_cast<std::ptrdiff_t>(e * d),
              block.rows.begin());
    store.put(s, block);
  }
  return store;
}

}  // namespace gshard
