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

#include "gshard/fixtures.hpp"

#include <algorithm>
#include <random>
#include <set>

namespace gshard::fixtures {

void Fixture::write_edge_list(std::ostream& out) const {
  out << "# " << num_nodes << " nodes, " << edges.size() << " edges\n";
  for (auto [u, v] : edges) out << u << ' ' << v << '\n';
}

Fixture path(std::size_t n) {
  Fixture f;
  f.num_nodes = n;
  for (std::size_t i = 0; i + 1 < n; ++i) f.edges.emplace_back(i, i + 1);
  return f;
}

Fixture star(std::size_t leaves) {
  Fixture f;
  f.num_nodes = leaves + 1;
  for (std::size_t i = 1; i <= leaves; ++i) f.edges.emplace_back(0, i);
  return f;
}

Fixture cycle(std::size_t n, bool directed) {
  Fixture f;
  f.num_nodes = n;
  f.directed = directed;
  for (std::size_t i = 0; i < n; ++i) f.edges.emplace_back(i, (i + 1) % n);
  return f;
}

Fixture sbm(std::size_t n, std::size_t blocks, double p_in, double p_out, std::uint64_t seed) {
  if (blocks == 0 || blocks > n) throw ContractError("sbm needs 1 <= blocks <= n");
  Fixture f;
  f.num_nodes = n;
  f.labels.resize(n);
  for (std::size_t v = 0; v < n; ++v) f.labels[v] = range_part(v, n, blocks);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) {
      double p = f.labels[u] == f.labels[v] ? p_in : p_out;
      if (coin(rng) < p) f.edges.emplace_back(u, v);
    }
  }
  return f;
}

Fixture power_law(std::size_t n, std::size_t m, std::uint64_t seed) {
  if (m == 0 || n <= m) throw ContractError("power_law needs n > m >= 1");
  Fixture f;
  f.num_nodes = n;
  std::mt19937_64 rng(seed);
  // Endpoint list: drawing uniformly from it is degree-proportional.
  std::vector<VertexId> endpoints;
  for (std::size_t u = 0; u <= m; ++u) {
    for (std::size_t v = u + 1; v <= m; ++v) {
      f.edges.emplace_back(u, v);
      endpoints.push_back(u);
      endpoints.push_back(v);
    }
  }
  for (std::size_t v = m + 1; v < n; ++v) {
    std::set<VertexId> chosen;
    while (chosen.size() < m) {
      std::uniform_int_distribution<std::size_t> pick(0, endpoints.size() - 1);
      chosen.insert(endpoints[pick(rng)]);
    }
    for (VertexId u : chosen) {
      f.edges.emplace_back(u, v);
      endpoints.push_back(u);
      endpoints.push_back(v);
    }
  }
  return f;
}

Fixture regular(std::size_t n, std::size_t degree, std::uint64_t seed) {
  if (degree == 0 || degree >= n || (n * degree) % 2 != 0) {
    throw ContractError("regular needs 0 < degree < n and n*degree even");
  }
  Fixture f;
  f.num_nodes = n;
  std::mt19937_64 rng(seed);
  std::vector<VertexId> stubs;
  stubs.reserve(n * degree);
  for (std::size_t v = 0; v < n; ++v) stubs.insert(stubs.end(), degree, v);
  std::shuffle(stubs.begin(), stubs.end(), rng);
  std::set<std::pair<VertexId, VertexId>> seen;
  for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) {
    VertexId u = std::min(stubs[i], stubs[i + 1]);
    VertexId v = std::max(stubs[i], stubs[i + 1]);
    if (u == v || !seen.emplace(u, v).second) continue;
    f.edges.emplace_back(u, v);
  }
  return f;
}

Fixture generate(const std::string& name, const GenerateParams& p) {
  if (name == "path") return path(p.nodes);
  if (name == "star") return star(p.nodes > 0 ? p.nodes - 1 : 0);
  if (name == "cycle") return cycle(p.nodes, p.directed);
  if (name == "sbm") return sbm(p.nodes, p.blocks, p.p_in, p.p_out, p.seed);
  if (name == "power_law") return power_law(p.nodes, p.m, p.seed);
  if (name == "regular") return regular(p.nodes, p.degree, p.seed);
  throw ConfigError("unknown fixture '" + name +
                    "' (expected path|star|cycle|sbm|power_law|regular)");
}

}  // namespace gshard::fixtures
