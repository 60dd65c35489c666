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

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "gshard/cluster.hpp"
#include "gshard/graph.hpp"
#include "gshard/protocol.hpp"

namespace gshard {

enum class ShardScheme { kRange, kHash, kTable };
ShardScheme parse_shard_scheme(const std::string& s);
const char* shard_scheme_name(ShardScheme s);

struct RowLocation {
  std::uint32_t shard;
  std::uint64_t row;
};

// Maps every row key to (shard, local row). Range and hash maps are closed
// form over dense ids [0, N); table maps accept arbitrary keys.
class ShardMap {
 public:
  static std::shared_ptr<const ShardMap> range(std::size_t n, std::size_t shards);
  static std::shared_ptr<const ShardMap> hash(std::size_t n, std::size_t shards);
  // keys must be distinct; owner[i] is the shard of keys[i].
  static std::shared_ptr<const ShardMap> table(std::vector<VertexId> keys,
                                               std::vector<std::uint32_t> owner,
                                               std::size_t shards);
  static std::shared_ptr<const ShardMap> make(ShardScheme scheme, std::size_t n, std::size_t shards);

  ShardScheme scheme() const { return scheme_; }
  std::size_t num_shards() const { return shards_; }
  std::size_t num_rows() const { return n_; }
  std::size_t rows_on(std::size_t shard) const;

  bool contains(VertexId id) const;
  // Throws ContractError for unknown ids.
  RowLocation locate(VertexId id) const;
  std::uint32_t shard_of(VertexId id) const { return locate(id).shard; }
  // Every key in map order: shard 0 rows, then shard 1 rows, ...
  std::vector<VertexId> keys() const;

  rt::ShardIndex index_for(std::size_t shard) const;
  bool operator==(const ShardMap& o) const;

 private:
  ShardMap(ShardScheme scheme, std::size_t n, std::size_t shards);

  ShardScheme scheme_;
  std::size_t n_;
  std::size_t shards_;
  std::vector<std::vector<VertexId>> table_keys_;  // kTable: sorted per shard
  std::unordered_map<VertexId, RowLocation> table_loc_;
};

// Ordered ids with one row per id, row-major.
struct RowBlock {
  std::vector<VertexId> ids;
  std::size_t dim = 0;
  std::vector<double> rows;

  RowBlock() = default;
  RowBlock(std::vector<VertexId> ids_in, std::size_t dim_in)
      : ids(std::move(ids_in)), dim(dim_in), rows(ids.size() * dim_in, 0.0) {}
  std::size_t size() const { return ids.size(); }
  std::span<double> row(std::size_t i) { return {rows.data() + i * dim, dim}; }
  std::span<const double> row(std::size_t i) const { return {rows.data() + i * dim, dim}; }
};

struct BarrierToken {
  std::uint64_t iteration = 0;
  std::uint32_t participants = 1;
};

// Collects the replies of requests fanned out over several links.
class ReplyGather {
 public:
  explicit ReplyGather(std::size_t n);
  rt::Connection::Callback slot(std::size_t i);
  // Blocks until every slot completed; rethrows the first failure, including
  // error statuses, as exceptions.
  std::vector<rt::Frame> wait(std::chrono::milliseconds timeout);

 private:
  struct State {
    std::mutex mu;
    std::condition_variable cv;
    std::vector<rt::Frame> frames;
    std::size_t remaining;
    std::exception_ptr error;
  };
  std::shared_ptr<State> st_;
};

// A GET whose shard requests are in flight.
class PendingRows {
 public:
  RowBlock wait();

 private:
  friend class MatrixStore;
  PendingRows(std::size_t n, std::chrono::milliseconds timeout) : gather_(n), timeout_(timeout) {}

  ReplyGather gather_;
  std::chrono::milliseconds timeout_;
  RowBlock block_;
  std::vector<std::vector<std::size_t>> positions_;  // per request: block rows it fills
};

// Client handle of a logically N x dim matrix spread over the storage
// shards. Holds metadata only; every operation goes through a session.
class MatrixStore {
 public:
  static MatrixStore create(rt::Session& s, const std::string& name, std::size_t dim,
                            std::shared_ptr<const ShardMap> map,
                            rt::InitSpec init = rt::InitSpec::zeros(), std::uint64_t seed = 0,
                            DType dtype = DType::kF32);

  const std::string& name() const { return name_; }
  std::uint32_t id() const { return id_; }
  std::size_t num_rows() const { return map_->num_rows(); }
  std::size_t dim() const { return dim_; }
  DType dtype() const { return dtype_; }
  const std::shared_ptr<const ShardMap>& shard_map() const { return map_; }

  // ids must be distinct and known to the map (checked before dispatch).
  // At most one request per touched shard.
  RowBlock get(rt::Session& s, std::span<const VertexId> ids) const;
  PendingRows get_async(rt::Session& s, std::span<const VertexId> ids) const;
  // One single-row request per entry; duplicates allowed. Models clients
  // without request consolidation.
  PendingRows get_each(rt::Session& s, std::span<const VertexId> ids) const;

  void put(rt::Session& s, const RowBlock& block) const;
  void add(rt::Session& s, const RowBlock& block) const;
  // Scales every row on every shard; control messages only.
  void mult(rt::Session& s, double scalar) const;
  // this += scalar * source, shard-locally. Stores must share a shard map.
  void mult_add(rt::Session& s, const MatrixStore& source, double scalar) const;

  // Whole matrix in map key order (dense id order for range/hash maps).
  std::vector<double> export_dense(rt::Session& s) const;

 private:
  MatrixStore() = default;
  void write(rt::Session& s, const RowBlock& block, rt::Opcode op) const;
  void check_ids(std::span<const VertexId> ids) const;
  void broadcast(rt::Session& s, rt::Opcode op, const std::vector<std::uint8_t>& payload) const;

  std::string name_;
  std::uint32_t id_ = 0;
  std::size_t dim_ = 0;
  DType dtype_ = DType::kF32;
  std::shared_ptr<const ShardMap> map_;
};

// Blocks until all participants arrived and every shard drained the writes
// sent before arrival. Throws BarrierAborted if the round was abandoned.
void barrier(rt::Session& s, const BarrierToken& token);
// Abandons the current round on behalf of a failing trainer.
void abort_barrier(rt::Session& s, const BarrierToken& token);

}  // namespace gshard
