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
#include <span>
#include <string>
#include <vector>

#include "gshard/common.hpp"
#include "gshard/wire.hpp"

namespace gshard::rt {

// How a matrix is filled at creation. Uniform rows are a pure function of
// (seed, global row id), so every sharding of the same matrix agrees.
struct InitSpec {
  enum class Kind : std::uint8_t { kZeros = 0, kUniform = 1, kConstant = 2 };
  Kind kind = Kind::kZeros;
  double a = 0.0;  // uniform low bound, or the constant
  double b = 0.0;  // uniform high bound

  static InitSpec zeros() { return {}; }
  static InitSpec uniform(double lo, double hi) { return {Kind::kUniform, lo, hi}; }
  static InitSpec constant(double c) { return {Kind::kConstant, c, 0.0}; }
};

void init_row(const InitSpec& init, std::uint64_t seed, VertexId id, std::span<double> out);

// What a shard needs to translate global ids into local rows.
struct ShardIndex {
  enum class Kind : std::uint8_t { kRange = 0, kSortedKeys = 1 };
  Kind kind = Kind::kRange;
  std::uint64_t begin = 0;         // kRange
  std::uint64_t count = 0;         // kRange
  std::vector<VertexId> keys;      // kSortedKeys, ascending

  std::uint64_t rows() const { return kind == Kind::kRange ? count : keys.size(); }
  // Local row of `id`, or -1 when this shard does not own it.
  std::int64_t local_row(VertexId id) const;
  // Global id stored at local row `r`.
  VertexId global_id(std::uint64_t r) const;
  bool operator==(const ShardIndex&) const = default;
};

struct CreateRequest {
  std::uint32_t store_id = 0;
  std::string name;
  std::uint32_t dim = 0;
  DType dtype = DType::kF32;
  ShardIndex index;
  InitSpec init;
  std::uint64_t seed = 0;
};

// PUT / ADD bodies, and GET bodies with no values.
struct RowsRequest {
  std::uint32_t store_id = 0;
  DType dtype = DType::kF32;
  std::vector<VertexId> ids;
  std::vector<double> values;  // ids.size() * dim, row-major
};

struct MultRequest {
  std::uint32_t store_id = 0;
  double scalar = 0.0;
};

struct MultAddRequest {
  std::uint32_t target_id = 0;
  std::uint32_t source_id = 0;
  double scalar = 0.0;
};

// BARRIER frames. Trainers send kArrive/kAbort to the coordinator; the
// coordinator sends kFlush to every shard before releasing a round.
struct BarrierRequest {
  enum class Kind : std::uint8_t { kArrive = 0, kAbort = 1, kFlush = 2 };
  Kind kind = Kind::kArrive;
  std::uint64_t iteration = 0;
  std::uint32_t participants = 0;
  std::uint32_t trainer = 0;
};

// Dense contribution to the allreduce root, sent as an ADD frame whose store
// id is kDenseReduceStore. The reply carries the elementwise mean.
inline constexpr std::uint32_t kDenseReduceStore = 0xFFFFFFFFu;
struct ReduceRequest {
  std::uint32_t trainer = 0;
  std::uint32_t participants = 0;
  std::uint64_t round = 0;
  DType dtype = DType::kF32;
  std::vector<double> values;
};

std::vector<std::uint8_t> encode(const CreateRequest& r);
std::vector<std::uint8_t> encode(const RowsRequest& r);
std::vector<std::uint8_t> encode(const MultRequest& r);
std::vector<std::uint8_t> encode(const MultAddRequest& r);
std::vector<std::uint8_t> encode(const BarrierRequest& r);
std::vector<std::uint8_t> encode(const ReduceRequest& r);

CreateRequest decode_create(std::span<const std::uint8_t> payload);
// `dim` is needed to size the value block; GET bodies carry none.
RowsRequest decode_rows(std::span<const std::uint8_t> payload, bool with_values, std::size_t dim);
std::uint32_t peek_store_id(std::span<const std::uint8_t> payload);
MultRequest decode_mult(std::span<const std::uint8_t> payload);
MultAddRequest decode_mult_add(std::span<const std::uint8_t> payload);
BarrierRequest decode_barrier(std::span<const std::uint8_t> payload);
ReduceRequest decode_reduce(std::span<const std::uint8_t> payload);

// GET reply body: dtype u8, count u32, dim u32, values.
std::vector<std::uint8_t> encode_rows_reply(DType dtype, std::size_t count, std::size_t dim,
                                            std::span<const double> values);
struct RowsReply {
  DType dtype;
  std::size_t count;
  std::size_t dim;
  std::vector<double> values;
};
RowsReply decode_rows_reply(ByteReader& body);

// Bytes of row data and vertex ids in a payload; framing and control
// fields are excluded. This is the "payload" figure used by accounting.
inline std::uint64_t data_bytes(std::size_t num_ids, std::size_t num_values, DType dtype) {
  return 8 * num_ids + dtype_size(dtype) * num_values;
}

// Row-data bytes carried by a whole frame, derived from its layout: ids and
// values of GET/PUT/ADD requests, values of GET and allreduce replies.
std::uint64_t frame_data_bytes(const Frame& f, bool is_reply);

// FNV-1a of the store name; shards reject collisions.
std::uint32_t store_id_for(const std::string& name);

}  // namespace gshard::rt
