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
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "gshard/graph.hpp"

namespace gshard {

using Rng = std::mt19937_64;

// Each trainer owns an independent stream.
inline Rng trainer_rng(std::uint64_t seed, std::uint32_t trainer) { return Rng(seed ^ trainer); }

// Uniform walk from `start`; stops early at a sink. Length is at most walk_len.
std::vector<VertexId> random_walk(const Graph& g, VertexId start, std::size_t walk_len, Rng& rng);

struct WalkBatch {
  std::vector<std::vector<VertexId>> walks;
  std::size_t source_count = 0;

  std::size_t distinct_nodes() const;
};

WalkBatch walk_batch(const Graph& g, std::span<const VertexId> sources, std::size_t walk_len,
                     Rng& rng);

// (walk[i], walk[j]) for every j != i with |i - j| <= window, ordered by i then j.
std::vector<std::pair<VertexId, VertexId>> skipgram_pairs(std::span<const VertexId> walk,
                                                          std::size_t window);

// Vose alias table over a finite weighted set of vertices.
class AliasTable {
 public:
  AliasTable() = default;
  // values[i] is drawn with probability weights[i] / sum(weights).
  AliasTable(std::span<const double> weights, std::vector<VertexId> values);

  VertexId sample(Rng& rng) const;
  std::size_t size() const { return values_.size(); }
  std::span<const VertexId> values() const { return values_; }
  // Normalized probability of values()[i].
  double probability(std::size_t i) const { return probs_.at(i); }

 private:
  std::vector<double> accept_;
  std::vector<std::uint32_t> alias_;
  std::vector<VertexId> values_;
  std::vector<double> probs_;
};

// Weight of v is out_degree(v)^exponent; zero-degree nodes are never drawn.
AliasTable build_negative_table(const Graph& g, double exponent = 0.75);

std::vector<VertexId> sample_negatives(const AliasTable& table, std::size_t k, Rng& rng);

// Skip-gram training pairs; negatives is row-major (size() x num_neg).
struct PairBatch {
  std::vector<VertexId> centers;
  std::vector<VertexId> contexts;
  std::vector<VertexId> negatives;
  std::size_t num_neg = 0;

  std::size_t size() const { return centers.size(); }
  std::span<const VertexId> negatives_of(std::size_t i) const {
    return std::span<const VertexId>(negatives).subspan(i * num_neg, num_neg);
  }
  // Every id referenced, deduplicated in first-appearance order.
  std::vector<VertexId> unique_ids() const;
};

// DeepWalk pairs over a walk batch. Negatives are drawn from the batch's own
// walk nodes (weighted by degree^exponent) so a batch never touches more than
// B * walk_len distinct rows.
PairBatch deepwalk_pairs(const Graph& g, const WalkBatch& walks, std::size_t window,
                         std::size_t num_neg, Rng& rng, double exponent = 0.75);

struct LineBatch {
  std::vector<VertexId> sources;
  std::vector<VertexId> destinations;
  std::vector<VertexId> negatives;  // row-major (B x num_neg)
  std::size_t num_neg = 0;

  std::size_t size() const { return sources.size(); }
  std::vector<VertexId> unique_ids() const;
  PairBatch as_pairs() const;
};

// B edges drawn uniformly from the whole edge set.
LineBatch line_batch(const Graph& g, std::size_t batch_size, std::size_t num_neg,
                     const AliasTable& negatives, Rng& rng);
// B edges drawn uniformly from `edge_pool` (CSR edge indices).
LineBatch line_batch(const Graph& g, std::span<const std::uint64_t> edge_pool,
                     std::size_t batch_size, std::size_t num_neg, const AliasTable& negatives,
                     Rng& rng);

// Source vertex of CSR edge index e.
VertexId edge_source(const Graph& g, std::uint64_t e);

struct FanoutSpec {
  std::vector<std::size_t> fanouts;

  void validate() const;
  std::string to_string() const;  // "[15,10]"
  static FanoutSpec parse(const std::string& s);
};

struct SampledSubgraph {
  // layers[i] holds the (frontier node, sampled neighbor) edges of hop i+1.
  std::vector<std::vector<std::pair<VertexId, VertexId>>> layers;
  std::vector<VertexId> unique_nodes;
  std::vector<VertexId> seeds;

  // Seeds followed by every sampled neighbor, with multiplicity.
  std::vector<VertexId> occurrences() const;
};

// Hop i samples min(F_i, degree) neighbors without replacement for each
// distinct node reached at hop i-1 (the seeds for hop 1).
SampledSubgraph fanout_sample(const Graph& g, std::span<const VertexId> seeds,
                              const FanoutSpec& spec, Rng& rng);

}  // namespace gshard
