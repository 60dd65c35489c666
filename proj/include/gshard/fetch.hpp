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
#include <string>
#include <vector>

#include "gshard/cluster.hpp"
#include "gshard/graph.hpp"
#include "gshard/sampling.hpp"
#include "gshard/store.hpp"

namespace gshard {

// naive: one request per vertex occurrence. per_hop: one consolidated round
// per hop. deduped: one consolidated round for the whole subgraph.
enum class FetchStrategy { kNaive, kPerHop, kDeduped };
FetchStrategy parse_fetch_strategy(const std::string& s);
const char* fetch_strategy_name(FetchStrategy s);

struct FetchReport {
  FetchStrategy strategy = FetchStrategy::kDeduped;
  std::uint64_t requests = 0;           // GET frames on the wire
  std::uint64_t vertices_fetched = 0;   // rows delivered, with multiplicity
  std::uint64_t unique_vertices = 0;
  std::uint64_t cross_partition_visits = 0;
  std::uint64_t bytes_up = 0;    // id payload sent
  std::uint64_t bytes_down = 0;  // row payload received
  double wall_ms = 0.0;

  std::uint64_t bytes() const { return bytes_up + bytes_down; }
};

struct FetchResult {
  // Rows as fetched: one per occurrence (naive), per hop entry (per_hop),
  // or per unique node (deduped).
  RowBlock rows;
  FetchReport report;

  // One row per entry of `occurrences`, looked up by id.
  RowBlock by_occurrence(const std::vector<VertexId>& occurrences) const;
};

// `home_part` is the partition of the requesting trainer; occurrences owned
// by other parts count as cross-partition visits.
FetchResult fetch_naive(rt::Session& s, const MatrixStore& features, const SampledSubgraph& sub,
                        const NodePartition& partition, std::uint32_t home_part);
FetchResult fetch_per_hop(rt::Session& s, const MatrixStore& features, const SampledSubgraph& sub,
                          const NodePartition& partition, std::uint32_t home_part);
FetchResult fetch_deduped(rt::Session& s, const MatrixStore& features, const SampledSubgraph& sub,
                          const NodePartition& partition, std::uint32_t home_part);
FetchResult fetch(FetchStrategy strategy, rt::Session& s, const MatrixStore& features,
                  const SampledSubgraph& sub, const NodePartition& partition, std::uint32_t home_part);

// Row-major rows x cols.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;
};

// Fixed-seed uniform weights for layer sizes dims[0] -> dims[1] -> ...;
// layer k has shape (2 * dims[k]) x dims[k+1].
std::vector<Matrix> random_weights(const std::vector<std::size_t>& dims, std::uint64_t seed);

// Mean aggregation with self-concatenation and ReLU. Layer k (1-based) of an
// h-layer model aggregates over the edges of hop h-k+1. `features` must hold
// a row for every node of the subgraph. Returns one row per seed.
RowBlock mean_forward(const RowBlock& features, const SampledSubgraph& sub,
                      const std::vector<Matrix>& weights);

struct BenchConfig {
  FanoutSpec fanout{{15, 10}};
  std::size_t batch_size = 512;  // seeds per trainer per trial
  std::size_t trials = 3;
  std::uint64_t seed = 0;
  PartitionScheme partition = PartitionScheme::kRange;
  std::vector<FetchStrategy> strategies{FetchStrategy::kNaive, FetchStrategy::kPerHop,
                                        FetchStrategy::kDeduped};
};

struct BenchRecord {
  std::uint32_t trainer = 0;
  std::size_t trial = 0;
  std::uint64_t occurrences = 0;
  FetchReport report;
};

struct StrategySummary {
  FetchStrategy strategy;
  double mean_requests = 0;
  double mean_vertices_fetched = 0;
  double mean_bytes = 0;
  std::uint64_t max_requests = 0;
  // Feature rows of the computation graph served per second.
  double throughput = 0;
};

struct BenchResult {
  std::vector<BenchRecord> records;  // ordered by (trial, trainer, strategy)
  std::vector<StrategySummary> summary;
  double duplicate_ratio = 0;  // occurrences / unique nodes, averaged
  bool features_identical = true;

  const StrategySummary& of(FetchStrategy s) const;
};

// Every trainer samples its own seeds from its partition each trial and
// fetches the same subgraph with every strategy.
BenchResult bench_fetch(const Graph& g, const MatrixStore& features, rt::Cluster& cluster,
                        const BenchConfig& cfg);

// Creates the "features" store for a benchmark. Uses the graph's own
// feature rows when it has them, otherwise `dim` columns drawn uniformly
// from [-1, 1] with `seed`.
MatrixStore load_feature_store(rt::Session& s, const Graph& g, ShardScheme scheme, std::size_t shards,
                               std::size_t dim, std::uint64_t seed, DType dtype);

}  // namespace gshard
