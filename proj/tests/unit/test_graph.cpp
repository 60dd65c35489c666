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

#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "gshard/fixtures.hpp"
#include "gshard/graph.hpp"
#include "oracles.hpp"

namespace gshard {
namespace {

Graph parse(const std::string& text, bool directed) {
  std::istringstream in(text);
  return load_edge_list(in, directed);
}

std::vector<VertexId> nbrs(const Graph& g, VertexId v) {
  auto s = g.neighbors(v);
  return {s.begin(), s.end()};
}

TEST(EdgeList, PathGraphUndirected) {
  auto g = parse("0 1\n1 2", false);
  EXPECT_EQ(g.num_nodes(), 3u);
  EXPECT_EQ(g.num_edges(), 4u);
  EXPECT_EQ(nbrs(g, 1), (std::vector<VertexId>{0, 2}));
}

TEST(EdgeList, DuplicateEdgesDropped) {
  auto g = parse("0 1\n0 1", true);
  EXPECT_EQ(g.num_nodes(), 2u);
  EXPECT_EQ(g.num_edges(), 1u);
}

TEST(EdgeList, IdsCompactedInFirstAppearanceOrder) {
  auto g = parse("# comment\n\n900 5\n5 17\n", true);
  ASSERT_EQ(g.num_nodes(), 3u);
  EXPECT_EQ(std::vector<std::uint64_t>(g.external_ids().begin(), g.external_ids().end()),
            (std::vector<std::uint64_t>{900, 5, 17}));
  EXPECT_EQ(nbrs(g, 0), std::vector<VertexId>{1});
  EXPECT_EQ(nbrs(g, 1), std::vector<VertexId>{2});
}

TEST(EdgeList, SelfLoopKept) {
  auto g = parse("3 3\n3 4", false);
  EXPECT_EQ(nbrs(g, 0), (std::vector<VertexId>{0, 1}));
}

TEST(EdgeList, MalformedLineReportsLineNumber) {
  try {
    parse("0 1\n1 2\n1 x\n", false);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(parse("0 1\n-1 2\n", false), ParseError);
  EXPECT_THROW(parse("0 1 2\n", false), ParseError);
}

TEST(EdgeList, EmptyInputRejected) {
  EXPECT_THROW(parse("", false), Error);
  EXPECT_THROW(parse("# only comments\n\n", false), Error);
}

TEST(EdgeList, SbmFixtureRoundTripsThroughText) {
  auto fx = fixtures::sbm(200, 2, 0.3, 0.02, 4);
  std::stringstream text;
  fx.write_edge_list(text);
  auto g = load_edge_list(text, false);
  EXPECT_EQ(g.num_nodes(), 200u);
  // The generator emits each undirected edge once.
  EXPECT_EQ(g.num_edges(), 2 * fx.edges.size());
}

TEST(Neighbors, SinkStarAndBounds) {
  auto g = parse("0 1\n", true);
  EXPECT_TRUE(g.neighbors(1).empty());
  EXPECT_THROW(g.neighbors(2), ContractError);
  auto star = fixtures::star(7).graph();
  EXPECT_EQ(star.neighbors(0).size(), 7u);
}

TEST(CsrCache, RoundTripPreservesGraph) {
  auto g = parse("10 20\n20 30\n30 10\n", true);
  std::stringstream buf;
  write_csr_cache(g, buf);
  const auto bytes = buf.str();
  ASSERT_GE(bytes.size(), 21u);
  EXPECT_EQ(bytes.substr(0, 4), "GSCR");
  std::uint64_t n = 0;
  std::memcpy(&n, bytes.data() + 5, 8);
  EXPECT_EQ(n, 3u);
  EXPECT_EQ(read_csr_cache(buf), g);
  std::istringstream bad("GSCX");
  EXPECT_THROW(read_csr_cache(bad), Error);
}

TEST(Partition, RangeAndHashExamples) {
  auto g = fixtures::path(10).graph();
  auto r = partition_nodes(g, 2, PartitionScheme::kRange);
  for (VertexId v = 0; v < 10; ++v) EXPECT_EQ(r.part_of(v), v < 5 ? 0u : 1u);
  auto h = partition_nodes(g, 4, PartitionScheme::kHash);
  EXPECT_EQ(h.part_of(7), 3u);
  auto five = partition_nodes(fixtures::path(5).graph(), 5, PartitionScheme::kRange);
  for (std::uint32_t p = 0; p < 5; ++p) EXPECT_EQ(five.members(p).size(), 1u);
  EXPECT_THROW(partition_nodes(g, 0, PartitionScheme::kRange), Error);
}

TEST(Properties, CsrInvariantsAndSymmetry) {
  auto failure = testing::for_all(40, 3, [](testing::Gen& gen, std::ostream& why) {
    const std::size_t n = gen.size(1, 60);
    const bool directed = gen.coin();
    std::vector<std::pair<VertexId, VertexId>> edges;
    const std::size_t m = gen.size(0, 4 * n);
    for (std::size_t i = 0; i < m; ++i) edges.emplace_back(gen.u64(0, n - 1), gen.u64(0, n - 1));
    auto g = Graph::from_edges(n, edges, directed);
    auto off = g.offsets();
    if (off.front() != 0 || off.back() != g.num_edges()) {
      why << "offset bounds";
      return false;
    }
    std::size_t sum = 0;
    std::set<std::pair<VertexId, VertexId>> present;
    for (VertexId v = 0; v < n; ++v) {
      if (off[v] > off[v + 1]) {
        why << "offsets decrease at " << v;
        return false;
      }
      if (g.neighbors(v).size() != g.out_degree(v)) return false;
      sum += g.out_degree(v);
      for (VertexId u : g.neighbors(v)) {
        if (u >= n || !present.insert({v, u}).second) {
          why << "bad or duplicate target " << v << "->" << u;
          return false;
        }
      }
    }
    if (sum != g.num_edges()) return false;
    // Oracle: the set of input edges (plus reverses when undirected).
    std::set<std::pair<VertexId, VertexId>> expect;
    for (auto [a, b] : edges) {
      expect.insert({a, b});
      if (!directed) expect.insert({b, a});
    }
    if (expect != present) {
      why << "edge set mismatch";
      return false;
    }
    for (std::size_t parts = 1; parts <= std::min<std::size_t>(n, 6); ++parts) {
      for (auto scheme : {PartitionScheme::kRange, PartitionScheme::kHash}) {
        auto p = partition_nodes(g, parts, scheme);
        std::size_t total = 0;
        for (std::uint32_t k = 0; k < parts; ++k) {
          const auto sz = p.members(k).size();
          if (sz == 0) {
            why << "empty part";
            return false;
          }
          total += sz;
        }
        if (total != n || p.assignment.size() != n) return false;
      }
    }
    return true;
  });
  EXPECT_EQ(failure, "");
}

TEST(Fixtures, GeneratorsAreDeterministicAndShaped) {
  EXPECT_EQ(fixtures::sbm(100, 2, 0.2, 0.01, 1).edges, fixtures::sbm(100, 2, 0.2, 0.01, 1).edges);
  EXPECT_NE(fixtures::sbm(100, 2, 0.2, 0.01, 1).edges, fixtures::sbm(100, 2, 0.2, 0.01, 2).edges);
  auto sbm = fixtures::sbm(200, 2, 0.3, 0.02, 7);
  std::size_t in = 0;
  for (auto [a, b] : sbm.edges) in += sbm.labels[a] == sbm.labels[b];
  EXPECT_GT(in, 5 * (sbm.edges.size() - in));
  auto reg = fixtures::regular(300, 6, 2).graph();
  for (VertexId v = 0; v < 300; ++v) EXPECT_LE(reg.out_degree(v), 6u);
  auto pl = fixtures::power_law(300, 3, 2).graph();
  std::size_t maxdeg = 0;
  for (VertexId v = 0; v < 300; ++v) maxdeg = std::max(maxdeg, pl.out_degree(v));
  EXPECT_GT(maxdeg, 20u);
  EXPECT_THROW(fixtures::generate("nope", {}), Error);
}

}  // namespace
}  // namespace gshard
