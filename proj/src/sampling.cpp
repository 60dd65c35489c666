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

#include "gshard/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace gshard {

namespace {

std::vector<VertexId> dedup_in_order(std::initializer_list<std::span<const VertexId>> parts) {
  std::unordered_set<VertexId> seen;
  std::vector<VertexId> out;
  for (auto part : parts) {
    for (VertexId v : part) {
      if (seen.insert(v).second) out.push_back(v);
    }
  }
  return out;
}

}  // namespace

std::vector<VertexId> random_walk(const Graph& g, VertexId start, std::size_t walk_len, Rng& rng) {
  if (walk_len == 0) throw ContractError("walk_len must be >= 1");
  if (start >= g.num_nodes()) throw ContractError("walk start out of range");
  std::vector<VertexId> walk{start};
  walk.reserve(walk_len);
  while (walk.size() < walk_len) {
    auto nbrs = g.neighbors(walk.back());
    if (nbrs.empty()) break;
    std::uniform_int_distribution<std::size_t> pick(0, nbrs.size() - 1);
    walk.push_back(nbrs[pick(rng)]);
  }
  return walk;
}

std::size_t WalkBatch::distinct_nodes() const {
  std::unordered_set<VertexId> seen;
  for (const auto& w : walks) seen.insert(w.begin(), w.end());
  return seen.size();
}

WalkBatch walk_batch(const Graph& g, std::span<const VertexId> sources, std::size_t walk_len,
                     Rng& rng) {
  if (sources.empty()) throw ContractError("walk_batch needs at least one source");
  WalkBatch b;
  b.source_count = sources.size();
  b.walks.reserve(sources.size());
  for (VertexId s : sources) b.walks.push_back(random_walk(g, s, walk_len, rng));
  return b;
}

std::vector<std::pair<VertexId, VertexId>> skipgram_pairs(std::span<const VertexId> walk,
                                                          std::size_t window) {
  if (window == 0) throw ContractError("window must be >= 1");
  std::vector<std::pair<VertexId, VertexId>> out;
  const std::size_t n = walk.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t lo = i >= window ? i - window : 0;
    std::size_t hi = std::min(n - 1, i + window);
    for (std::size_t j = lo; j <= hi; ++j) {
      if (j != i) out.emplace_back(walk[i], walk[j]);
    }
  }
  return out;
}

AliasTable::AliasTable(std::span<const double> weights, std::vector<VertexId> values)
    : values_(std::move(values)) {
  const std::size_t n = weights.size();
  if (n == 0 || n != values_.size()) throw ContractError("alias table needs matching non-empty inputs");
  double total = 0;
  for (double w : weights) {
    if (!(w >= 0) || !std::isfinite(w)) throw ContractError("alias weights must be finite and >= 0");
    total += w;
  }
  if (total <= 0) throw ContractError("alias weights are all zero");

  probs_.resize(n);
  accept_.assign(n, 0.0);
  alias_.assign(n, 0);
  std::vector<double> scaled(n);
  std::vector<std::uint32_t> small, large;
  for (std::size_t i = 0; i < n; ++i) {
    probs_[i] = weights[i] / total;
    scaled[i] = probs_[i] * static_cast<double>(n);
    (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
  }
  while (!small.empty() && !large.empty()) {
    auto s = small.back();
    small.pop_back();
    auto l = large.back();
    accept_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  for (auto i : large) accept_[i] = 1.0;
  // Leftovers here are rounding residue; they keep their own column.
  for (auto i : small) accept_[i] = probs_[i] > 0 ? 1.0 : 0.0;
}

VertexId AliasTable::sample(Rng& rng) const {
  std::uniform_int_distribution<std::size_t> col(0, values_.size() - 1);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::size_t i = col(rng);
  return coin(rng) < accept_[i] ? values_[i] : values_[alias_[i]];
}

AliasTable build_negative_table(const Graph& g, double exponent) {
  const std::size_t n = g.num_nodes();
  if (n == 0) throw ContractError("negative table needs a non-empty graph");
  std::vector<double> w(n);
  std::vector<VertexId> ids(n);
  bool any = false;
  for (std::size_t v = 0; v < n; ++v) {
    ids[v] = v;
    std::size_t deg = g.out_degree(v);
    w[v] = deg > 0 ? std::pow(static_cast<double>(deg), exponent) : 0.0;
    any = any || deg > 0;
  }
  if (!any) throw ContractError("negative table needs at least one node with degree > 0");
  return AliasTable(w, std::move(ids));
}

std::vector<VertexId> sample_negatives(const AliasTable& table, std::size_t k, Rng& rng) {
  std::vector<VertexId> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(table.sample(rng));
  return out;
}

std::vector<VertexId> PairBatch::unique_ids() const {
  return dedup_in_order({centers, contexts, negatives});
}

PairBatch deepwalk_pairs(const Graph& g, const WalkBatch& walks, std::size_t window,
                         std::size_t num_neg, Rng& rng, double exponent) {
  PairBatch b;
  b.num_neg = num_neg;
  for (const auto& w : walks.walks) {
    for (auto [c, x] : skipgram_pairs(w, window)) {
      b.centers.push_back(c);
      b.contexts.push_back(x);
    }
  }
  if (b.size() == 0 || num_neg == 0) return b;

  std::vector<VertexId> pool;
  {
    std::unordered_set<VertexId> seen;
    for (const auto& w : walks.walks) {
      for (VertexId v : w) {
        if (seen.insert(v).second) pool.push_back(v);
      }
    }
  }
  std::vector<double> weights(pool.size());
  bool any = false;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    std::size_t deg = g.out_degree(pool[i]);
    weights[i] = deg > 0 ? std::pow(static_cast<double>(deg), exponent) : 0.0;
    any = any || deg > 0;
  }
  if (!any) std::fill(weights.begin(), weights.end(), 1.0);
  AliasTable table(weights, std::move(pool));
  b.negatives.reserve(b.size() * num_neg);
  for (std::size_t i = 0; i < b.size() * num_neg; ++i) b.negatives.push_back(table.sample(rng));
  return b;
}

std::vector<VertexId> LineBatch::unique_ids() const {
  return dedup_in_order({sources, destinations, negatives});
}

PairBatch LineBatch::as_pairs() const {
  PairBatch p;
  p.centers = sources;
  p.contexts = destinations;
  p.negatives = negatives;
  p.num_neg = num_neg;
  return p;
}

VertexId edge_source(const Graph& g, std::uint64_t e) {
  auto offs = g.offsets();
  auto it = std::upper_bound(offs.begin(), offs.end(), e);
  return static_cast<VertexId>(std::distance(offs.begin(), it) - 1);
}

namespace {

LineBatch line_batch_impl(const Graph& g, std::size_t pool_size,
                          const std::function<std::uint64_t(std::size_t)>& edge_at,
                          std::size_t batch_size, std::size_t num_neg,
                          const AliasTable& negatives, Rng& rng) {
  if (pool_size == 0) throw ContractError("line_batch needs at least one edge");
  LineBatch b;
  b.num_neg = num_neg;
  b.sources.reserve(batch_size);
  b.destinations.reserve(batch_size);
  b.negatives.reserve(batch_size * num_neg);
  std::uniform_int_distribution<std::size_t> pick(0, pool_size - 1);
  for (std::size_t i = 0; i < batch_size; ++i) {
    std::uint64_t e = edge_at(pick(rng));
    b.sources.push_back(edge_source(g, e));
    b.destinations.push_back(g.targets()[e]);
    for (std::size_t k = 0; k < num_neg; ++k) b.negatives.push_back(negatives.sample(rng));
  }
  return b;
}

}  // namespace

LineBatch line_batch(const Graph& g, std::size_t batch_size, std::size_t num_neg,
                     const AliasTable& negatives, Rng& rng) {
  return line_batch_impl(
      g, g.num_edges(), [](std::size_t i) { return static_cast<std::uint64_t>(i); }, batch_size,
      num_neg, negatives, rng);
}

LineBatch line_batch(const Graph& g, std::span<const std::uint64_t> edge_pool,
                     std::size_t batch_size, std::size_t num_neg, const AliasTable& negatives,
                     Rng& rng) {
  return line_batch_impl(
      g, edge_pool.size(), [&](std::size_t i) { return edge_pool[i]; }, batch_size, num_neg,
      negatives, rng);
}

void FanoutSpec::validate() const {
  if (fanouts.empty()) throw ContractError("fanout needs at least one hop");
  for (auto f : fanouts) {
    if (f == 0) throw ContractError("every fanout must be >= 1");
  }
}

std::string FanoutSpec::to_string() const {
  std::ostringstream s;
  s << '[';
  for (std::size_t i = 0; i < fanouts.size(); ++i) s << (i ? "," : "") << fanouts[i];
  s << ']';
  return s.str();
}

FanoutSpec FanoutSpec::parse(const std::string& text) {
  FanoutSpec spec;
  std::string cleaned;
  for (char c : text) {
    if (c == '[' || c == ']' || std::isspace(static_cast<unsigned char>(c))) continue;
    cleaned += c;
  }
  std::stringstream ss(cleaned);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) throw ConfigError("bad fanout '" + text + "'");
    try {
      std::size_t pos = 0;
      long long v = std::stoll(tok, &pos);
      if (pos != tok.size() || v <= 0) throw ConfigError("");
      spec.fanouts.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw ConfigError("bad fanout '" + text + "'");
    }
  }
  if (spec.fanouts.empty()) throw ConfigError("bad fanout '" + text + "'");
  return spec;
}

std::vector<VertexId> SampledSubgraph::occurrences() const {
  std::vector<VertexId> out(seeds);
  for (const auto& layer : layers) {
    for (const auto& e : layer) out.push_back(e.second);
  }
  return out;
}

SampledSubgraph fanout_sample(const Graph& g, std::span<const VertexId> seeds,
                              const FanoutSpec& spec, Rng& rng) {
  spec.validate();
  if (seeds.empty()) throw ContractError("fanout_sample needs at least one seed");
  SampledSubgraph sub;
  sub.seeds.assign(seeds.begin(), seeds.end());
  std::unordered_set<VertexId> seen;
  for (VertexId s : seeds) {
    if (s >= g.num_nodes()) throw ContractError("seed out of range");
    if (seen.insert(s).second) sub.unique_nodes.push_back(s);
  }

  std::vector<VertexId> frontier = sub.unique_nodes;
  std::vector<VertexId> picked;
  for (std::size_t fanout : spec.fanouts) {
    std::vector<std::pair<VertexId, VertexId>> layer;
    std::vector<VertexId> next;
    std::unordered_set<VertexId> in_next;
    for (VertexId v : frontier) {
      auto nbrs = g.neighbors(v);
      picked.clear();
      std::sample(nbrs.begin(), nbrs.end(), std::back_inserter(picked), fanout, rng);
      for (VertexId u : picked) {
        layer.emplace_back(v, u);
        if (seen.insert(u).second) sub.unique_nodes.push_back(u);
        if (in_next.insert(u).second) next.push_back(u);
      }
    }
    sub.layers.push_back(std::move(layer));
    frontier = std::move(next);
  }
  return sub;
}

}  // namespace gshard
