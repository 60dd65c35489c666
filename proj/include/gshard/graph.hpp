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
#include <filesystem>
#include <istream>
#include <span>
#include <string>
#include <vector>

#include "gshard/common.hpp"

namespace gshard {

// Immutable CSR adjacency. Vertex ids are dense in [0, N); the external id
// each one was ingested under is kept in external_ids().
class Graph {
 public:
  Graph() = default;
  Graph(std::vector<std::uint64_t> offsets, std::vector<VertexId> targets, bool directed,
        std::vector<std::uint64_t> external_ids = {});

  // Builds from an edge list over dense ids [0, num_nodes). Parallel edges
  // are dropped; undirected graphs store both directions.
  static Graph from_edges(std::size_t num_nodes,
                          std::span<const std::pair<VertexId, VertexId>> edges, bool directed);

  std::size_t num_nodes() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t num_edges() const { return targets_.size(); }
  bool directed() const { return directed_; }

  std::span<const VertexId> neighbors(VertexId v) const;
  std::size_t out_degree(VertexId v) const;

  std::span<const std::uint64_t> offsets() const { return offsets_; }
  std::span<const VertexId> targets() const { return targets_; }
  std::span<const std::uint64_t> external_ids() const { return external_ids_; }

  bool has_features() const { return feature_dim_ > 0; }
  std::size_t feature_dim() const { return feature_dim_; }
  std::span<const float> features() const { return features_; }
  void set_features(std::vector<float> features, std::size_t dim);

  bool operator==(const Graph& other) const = default;

 private:
  std::vector<std::uint64_t> offsets_{0};
  std::vector<VertexId> targets_;
  bool directed_ = false;
  std::vector<std::uint64_t> external_ids_;
  std::vector<float> features_;
  std::size_t feature_dim_ = 0;
};

// Parses "u v" lines ('#' comments and blank lines skipped). External ids
// are compacted to [0, N) in first-appearance order.
Graph load_edge_list(std::istream& in, bool directed);
Graph load_edge_list_file(const std::filesystem::path& path, bool directed);

// Binary CSR cache: "GSCR", version byte, u64 N, u64 |E|, offsets, targets,
// then a directed byte and the external id table.
void write_csr_cache(const Graph& g, std::ostream& out);
void write_csr_cache_file(const Graph& g, const std::filesystem::path& path);
Graph read_csr_cache(std::istream& in);
Graph read_csr_cache_file(const std::filesystem::path& path);

enum class PartitionScheme { kRange, kHash };
PartitionScheme parse_partition_scheme(const std::string& s);
const char* partition_scheme_name(PartitionScheme s);

struct NodePartition {
  std::size_t num_parts = 0;
  std::vector<std::uint32_t> assignment;

  std::uint32_t part_of(VertexId v) const { return assignment.at(v); }
  std::vector<VertexId> members(std::uint32_t part) const;
};

// Range blocks are balanced (sizes differ by at most one) so no part is
// empty while num_parts <= N.
NodePartition partition_nodes(const Graph& g, std::size_t num_parts, PartitionScheme scheme);

// Part owning v under the balanced range scheme.
std::uint32_t range_part(VertexId v, std::size_t n, std::size_t parts);
// First id of a balanced range block.
std::uint64_t range_begin(std::size_t part, std::size_t n, std::size_t parts);

}  // namespace gshard
