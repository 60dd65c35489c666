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

#include "gshard/protocol.hpp"

#include <algorithm>
#include <random>

namespace gshard::rt {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

DType read_dtype(ByteReader& r) {
  auto t = r.get<std::uint8_t>();
  if (t > 1) throw ProtocolError("bad dtype byte");
  return static_cast<DType>(t);
}

}  // namespace

void init_row(const InitSpec& init, std::uint64_t seed, VertexId id, std::span<double> out) {
  switch (init.kind) {
    case InitSpec::Kind::kZeros:
      std::fill(out.begin(), out.end(), 0.0);
      return;
    case InitSpec::Kind::kConstant:
      std::fill(out.begin(), out.end(), init.a);
      return;
    case InitSpec::Kind::kUniform: {
      std::mt19937_64 rng(splitmix64(seed ^ splitmix64(id)));
      std::uniform_real_distribution<double> u(init.a, init.b);
      for (double& x : out) x = u(rng);
      return;
    }
  }
}

std::int64_t ShardIndex::local_row(VertexId id) const {
  if (kind == Kind::kRange) {
    return id >= begin && id - begin < count ? static_cast<std::int64_t>(id - begin) : -1;
  }
  auto it = std::lower_bound(keys.begin(), keys.end(), id);
  if (it == keys.end() || *it != id) return -1;
  return it - keys.begin();
}

VertexId ShardIndex::global_id(std::uint64_t r) const {
  return kind == Kind::kRange ? begin + r : keys.at(r);
}

std::vector<std::uint8_t> encode(const CreateRequest& r) {
  ByteWriter w;
  w.put<std::uint32_t>(r.store_id);
  w.put_string(r.name);
  w.put<std::uint32_t>(r.dim);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(r.dtype));
  w.put<std::uint8_t>(static_cast<std::uint8_t>(r.index.kind));
  if (r.index.kind == ShardIndex::Kind::kRange) {
    w.put<std::uint64_t>(r.index.begin);
    w.put<std::uint64_t>(r.index.count);
  } else {
    w.put_ids(r.index.keys);
  }
  w.put<std::uint8_t>(static_cast<std::uint8_t>(r.init.kind));
  w.put<double>(r.init.a);
  w.put<double>(r.init.b);
  w.put<std::uint64_t>(r.seed);
  return w.take();
}

CreateRequest decode_create(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  CreateRequest c;
  c.store_id = r.get<std::uint32_t>();
  c.name = r.get_string();
  c.dim = r.get<std::uint32_t>();
  c.dtype = read_dtype(r);
  auto kind = r.get<std::uint8_t>();
  if (kind > 1) throw ProtocolError("bad shard index kind");
  c.index.kind = static_cast<ShardIndex::Kind>(kind);
  if (c.index.kind == ShardIndex::Kind::kRange) {
    c.index.begin = r.get<std::uint64_t>();
    c.index.count = r.get<std::uint64_t>();
  } else {
    c.index.keys = r.get_ids();
    if (!std::is_sorted(c.index.keys.begin(), c.index.keys.end())) {
      throw ProtocolError("shard keys must be sorted");
    }
  }
  auto init = r.get<std::uint8_t>();
  if (init > 2) throw ProtocolError("bad init kind");
  c.init.kind = static_cast<InitSpec::Kind>(init);
  c.init.a = r.get<double>();
  c.init.b = r.get<double>();
  c.seed = r.get<std::uint64_t>();
  r.expect_end();
  return c;
}

std::vector<std::uint8_t> encode(const RowsRequest& r) {
  ByteWriter w;
  w.put<std::uint32_t>(r.store_id);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(r.dtype));
  w.put_ids(r.ids);
  w.put_values(r.values, r.dtype);
  return w.take();
}

std::uint32_t peek_store_id(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  return r.get<std::uint32_t>();
}

RowsRequest decode_rows(std::span<const std::uint8_t> payload, bool with_values, std::size_t dim) {
  ByteReader r(payload);
  RowsRequest q;
  q.store_id = r.get<std::uint32_t>();
  q.dtype = read_dtype(r);
  q.ids = r.get_ids();
  if (with_values) {
    if (r.remaining() != q.ids.size() * dim * dtype_size(q.dtype)) {
      throw ProtocolError("row block size does not match store dimension");
    }
    q.values = r.get_values(q.ids.size() * dim, q.dtype);
  }
  r.expect_end();
  return q;
}

std::vector<std::uint8_t> encode(const MultRequest& r) {
  ByteWriter w;
  w.put<std::uint32_t>(r.store_id);
  w.put<double>(r.scalar);
  return w.take();
}

MultRequest decode_mult(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  MultRequest m;
  m.store_id = r.get<std::uint32_t>();
  m.scalar = r.get<double>();
  r.expect_end();
  return m;
}

std::vector<std::uint8_t> encode(const MultAddRequest& r) {
  ByteWriter w;
  w.put<std::uint32_t>(r.target_id);
  w.put<std::uint32_t>(r.source_id);
  w.put<double>(r.scalar);
  return w.take();
}

MultAddRequest decode_mult_add(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  MultAddRequest m;
  m.target_id = r.get<std::uint32_t>();
  m.source_id = r.get<std::uint32_t>();
  m.scalar = r.get<double>();
  r.expect_end();
  return m;
}

std::vector<std::uint8_t> encode(const BarrierRequest& r) {
  ByteWriter w;
  w.put<std::uint8_t>(static_cast<std::uint8_t>(r.kind));
  w.put<std::uint64_t>(r.iteration);
  w.put<std::uint32_t>(r.participants);
  w.put<std::uint32_t>(r.trainer);
  return w.take();
}

BarrierRequest decode_barrier(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  BarrierRequest b;
  auto kind = r.get<std::uint8_t>();
  if (kind > 2) throw ProtocolError("bad barrier kind");
  b.kind = static_cast<BarrierRequest::Kind>(kind);
  b.iteration = r.get<std::uint64_t>();
  b.participants = r.get<std::uint32_t>();
  b.trainer = r.get<std::uint32_t>();
  r.expect_end();
  return b;
}

std::vector<std::uint8_t> encode(const ReduceRequest& r) {
  ByteWriter w;
  w.put<std::uint32_t>(kDenseReduceStore);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(r.dtype));
  w.put<std::uint32_t>(r.trainer);
  w.put<std::uint32_t>(r.participants);
  w.put<std::uint64_t>(r.round);
  w.put<std::uint64_t>(r.values.size());
  w.put_values(r.values, r.dtype);
  return w.take();
}

ReduceRequest decode_reduce(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  if (r.get<std::uint32_t>() != kDenseReduceStore) throw ProtocolError("not a reduce request");
  ReduceRequest q;
  q.dtype = read_dtype(r);
  q.trainer = r.get<std::uint32_t>();
  q.participants = r.get<std::uint32_t>();
  q.round = r.get<std::uint64_t>();
  auto n = r.get<std::uint64_t>();
  q.values = r.get_values(n, q.dtype);
  r.expect_end();
  return q;
}

std::vector<std::uint8_t> encode_rows_reply(DType dtype, std::size_t count, std::size_t dim,
                                            std::span<const double> values) {
  ByteWriter w;
  w.put<std::uint8_t>(static_cast<std::uint8_t>(dtype));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(count));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(dim));
  w.put_values(values, dtype);
  return w.take();
}

RowsReply decode_rows_reply(ByteReader& body) {
  RowsReply out;
  out.dtype = read_dtype(body);
  out.count = body.get<std::uint32_t>();
  out.dim = body.get<std::uint32_t>();
  out.values = body.get_values(out.count * out.dim, out.dtype);
  body.expect_end();
  return out;
}

std::uint64_t frame_data_bytes(const Frame& f, bool is_reply) {
  const std::size_t n = f.payload.size();
  auto minus = [n](std::size_t header) -> std::uint64_t { return n > header ? n - header : 0; };
  if (is_reply) {
    if (n == 0 || f.payload[0] != static_cast<std::uint8_t>(Status::kOk)) return 0;
    if (f.opcode == Opcode::kGet) return minus(10);        // status, dtype, count, dim
    if (f.opcode == Opcode::kAdd && n > 1) return minus(9);  // status, value count
    return 0;
  }
  switch (f.opcode) {
    case Opcode::kGet:
    case Opcode::kPut:
    case Opcode::kAdd:
      if (n >= 4 && peek_store_id(f.payload) == kDenseReduceStore) return minus(29);
      return minus(9);  // store id, dtype, id count
    default:
      return 0;
  }
}

std::uint32_t store_id_for(const std::string& name) {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : name) {
    h ^= c;
    h *= 16777619u;
  }
  // Reserved for the allreduce root.
  return h == kDenseReduceStore ? h - 1 : h;
}

}  // namespace gshard::rt
