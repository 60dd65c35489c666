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
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "gshard/graph.hpp"

namespace gshard::fixtures {

// A generated graph plus the raw edge list it was built from, so callers can
// check ingestion against the generator's own counts.
struct Fixture {
  std::size_t num_nodes = 0;
  std::vector<std::pair<VertexId, VertexId>> edges;
  std::vector<std::uint32_t> labels;  // planted block per node; empty if none
  bool directed = false;

  Graph graph() const { return Graph::from_edges(num_nodes, edges, directed); }
  // "u v" lines, one per generated edge.
  void write_edge_list(std::ostream& out) const;
};

Fixture path(std::size_t n);
Fixture star(std::size_t leaves);  // node 0 is the center
Fixture cycle(std::size_t n, bool directed);

// Stochastic block model with equal-size blocks.
Fixture sbm(std::size_t n, std::size_t blocks, double p_in, double p_out, std::uint64_t seed);

// Barabasi-Albert preferential attachment, `m` edges per arriving node.
Fixture power_law(std::size_t n, std::size_t m, std::uint64_t seed);

// Near-regular random graph from the configuration model; self-loops and
// parallel edges produced by the pairing are dropped.
Fixture regular(std::size_t n, std::size_t degree, std::uint64_t seed);

// Dispatches on a fixture name: path|star|cycle|sbm|power_law|regular.
struct GenerateParams {
  std::size_t nodes = 200;
  std::size_t blocks = 2;
  double p_in = 0.3;
  double p_out = 0.02;
  std::size_t m = 5;
  std::size_t degree = 10;
  bool directed = false;
  std::uint64_t seed = 0;
};
Fixture generate(const std::string& name, const GenerateParams& params);

}  // namespace gshard::fixtures
