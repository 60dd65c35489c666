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

#include "gshard/graph.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <unordered_map>

namespace gshard {

static_assert(std::endian::native == std::endian::little, "binary formats assume little endian");

const char* dtype_name(DType t) { return t == DType::kF32 ? "fp32" : "fp64"; }

DType parse_dtype(const std::string& s) {
  if (s == "fp32") return DType::kF32;
  if (s == "fp64") return DType::kF64;
  throw ConfigError("unknown dtype '" + s + "' (expected fp32|fp64)");
}

Graph::Graph(std::vector<std::uint64_t> offsets, std::vector<VertexId> targets, bool directed,
             std::vector<std::uint64_t> external_ids)
    : offsets_(std::move(offsets)),
      targets_(std::move(targets)),
      directed_(directed),
      external_ids_(std::move(external_ids)) {
  if (offsets_.empty() || offsets_.front() != 0 || offsets_.back() != targets_.size()) {
    throw ContractError("CSR offsets must start at 0 and end at |E|");
  }
  if (!std::is_sorted(offsets_.begin(), offsets_.end())) {
    throw ContractError("CSR offsets must be non-decreasing");
  }
  const std::size_t n = offsets_.size() - 1;
  for (VertexId t : targets_) {
    if (t >= n) throw ContractError("CSR target out of range");
  }
  if (external_ids_.empty()) {
    external_ids_.resize(n);
    for (std::size_t i = 0; i < n; ++i) external_ids_[i] = i;
  } else if (external_ids_.size() != n) {
    throw ContractError("external id table size must equal N");
  }
}

Graph Graph::from_edges(std::size_t num_nodes,
                        std::span<const std::pair<VertexId, VertexId>> edges, bool directed) {
  std::vector<std::pair<VertexId, VertexId>> all;
  all.reserve(directed ? edges.size() : 2 * edges.size());
  for (auto [u, v] : edges) {
    if (u >= num_nodes || v >= num_nodes) throw ContractError("edge endpoint out of range");
    all.emplace_back(u, v);
    if (!directed && u != v) all.emplace_back(v, u);
  }
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());

  std::vector<std::uint64_t> offsets(num_nodes + 1, 0);
  std::vector<VertexId> targets;
  targets.reserve(all.size());
  for (auto [u, v] : all) {
    ++offsets[u + 1];
    targets.push_back(v);
  }
  for (std::size_t i = 0; i < num_nodes; ++i) offsets[i + 1] += offsets[i];
  return Graph(std::move(offsets), std::move(targets), directed);
}

std::span<const VertexId> Graph::neighbors(VertexId v) const {
  if (v >= num_nodes()) throw ContractError("vertex " + std::to_string(v) + " out of range");
  return std::span<const VertexId>(targets_).subspan(offsets_[v], offsets_[v + 1] - offsets_[v]);
}

std::size_t Graph::out_degree(VertexId v) const { return neighbors(v).size(); }

void Graph::set_features(std::vector<float> features, std::size_t dim) {
  if (dim == 0 || features.size() != dim * num_nodes()) {
    throw ContractError("feature matrix must be N x dim");
  }
  features_ = std::move(features);
  feature_dim_ = dim;
}

namespace {

bool parse_u64(std::string_view tok, std::uint64_t& out) {
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

Graph load_edge_list(std::istream& in, bool directed) {
  std::unordered_map<std::uint64_t, VertexId> dense;
  std::vector<std::uint64_t> external;
  std::vector<std::pair<VertexId, VertexId>> edges;
  auto intern = [&](std::uint64_t ext) {
    auto [it, inserted] = dense.try_emplace(ext, external.size());
    if (inserted) external.push_back(ext);
    return it->second;
  };

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto toks = split_ws(line);
    if (toks.empty() || toks.front().front() == '#') continue;
    std::uint64_t u = 0, v = 0;
    if (toks.size() != 2 || !parse_u64(toks[0], u) || !parse_u64(toks[1], v)) {
      throw ParseError("expected two non-negative integer vertex ids, got '" + line + "'",
                       lineno);
    }
    VertexId du = intern(u);
    VertexId dv = intern(v);
    edges.emplace_back(du, dv);
  }
  if (edges.empty()) throw ParseError("edge list is empty", lineno);

  Graph csr = Graph::from_edges(external.size(), edges, directed);
  return Graph(std::vector<std::uint64_t>(csr.offsets().begin(), csr.offsets().end()),
               std::vector<VertexId>(csr.targets().begin(), csr.targets().end()), directed,
               std::move(external));
}

Graph load_edge_list_file(const std::filesystem::path& path, bool directed) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open edge list " + path.string());
  return load_edge_list(in, directed);
}

namespace {

constexpr char kCsrMagic[4] = {'G', 'S', 'C', 'R'};
constexpr std::uint8_t kCsrVersion = 1;

template <typename T>
void put_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void put_array(std::ostream& out, std::span<const T> v) {
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
}

template <typename T>
T get_pod(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw Error("truncated CSR cache");
  return v;
}

template <typename T>
std::vector<T> get_array(std::istream& in, std::uint64_t n) {
  std::vector<T> v(n);
  if (!in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)))) {
    throw Error("truncated CSR cache");
  }
  return v;
}

}  // namespace

void write_csr_cache(const Graph& g, std::ostream& out) {
  out.write(kCsrMagic, 4);
  put_pod<std::uint8_t>(out, kCsrVersion);
  put_pod<std::uint64_t>(out, g.num_nodes());
  put_pod<std::uint64_t>(out, g.num_edges());
  put_array(out, g.offsets());
  put_array(out, g.targets());
  put_pod<std::uint8_t>(out, g.directed() ? 1 : 0);
  put_array(out, g.external_ids());
}

void write_csr_cache_file(const Graph& g, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  write_csr_cache(g, out);
  if (!out) throw Error("write failed for " + path.string());
}

Graph read_csr_cache(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kCsrMagic, 4) != 0) {
    throw Error("not a CSR cache (bad magic)");
  }
  auto version = get_pod<std::uint8_t>(in);
  if (version != kCsrVersion) throw Error("unsupported CSR cache version " + std::to_string(version));
  auto n = get_pod<std::uint64_t>(in);
  auto e = get_pod<std::uint64_t>(in);
  auto offsets = get_array<std::uint64_t>(in, n + 1);
  auto targets = get_array<VertexId>(in, e);
  bool directed = get_pod<std::uint8_t>(in) != 0;
  auto external = get_array<std::uint64_t>(in, n);
  return Graph(std::move(offsets), std::move(targets), directed, std::move(external));
}

Graph read_csr_cache_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open CSR cache " + path.string());
  return read_csr_cache(in);
}

PartitionScheme parse_partition_scheme(const std::string& s) {
  if (s == "range") return PartitionScheme::kRange;
  if (s == "hash") return PartitionScheme::kHash;
  throw ConfigError("unknown partition scheme '" + s + "' (expected range|hash)");
}

const char* partition_scheme_name(PartitionScheme s) {
  return s == PartitionScheme::kRange ? "range" : "hash";
}

std::uint64_t range_begin(std::size_t part, std::size_t n, std::size_t parts) {
  return static_cast<std::uint64_t>(part) * n / parts;
}

std::uint32_t range_part(VertexId v, std::size_t n, std::size_t parts) {
  return static_cast<std::uint32_t>(((v + 1) * parts - 1) / n);
}

std::vector<VertexId> NodePartition::members(std::uint32_t part) const {
  std::vector<VertexId> out;
  for (std::size_t v = 0; v < assignment.size(); ++v) {
    if (assignment[v] == part) out.push_back(v);
  }
  return out;
}

NodePartition partition_nodes(const Graph& g, std::size_t num_parts, PartitionScheme scheme) {
  if (num_parts == 0) throw ContractError("num_parts must be >= 1");
  const std::size_t n = g.num_nodes();
  NodePartition p;
  p.num_parts = num_parts;
  p.assignment.resize(n);
  for (std::size_t v = 0; v < n; ++v) {
    p.assignment[v] = scheme == PartitionScheme::kRange
                          ? range_part(v, n, num_parts)
                          : static_cast<std::uint32_t>(v % num_parts);
  }
  return p;
}

}  // namespace gshard
