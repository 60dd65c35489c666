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

#include "gshard/store.hpp"

#include <algorithm>
#include <unordered_set>

namespace gshard {

using rt::Frame;
using rt::Opcode;

ShardScheme parse_shard_scheme(const std::string& s) {
  if (s == "range") return ShardScheme::kRange;
  if (s == "hash") return ShardScheme::kHash;
  if (s == "table") return ShardScheme::kTable;
  throw ConfigError("unknown shard scheme '" + s + "' (expected range|hash|table)");
}

const char* shard_scheme_name(ShardScheme s) {
  switch (s) {
    case ShardScheme::kRange: return "range";
    case ShardScheme::kHash: return "hash";
    case ShardScheme::kTable: return "table";
  }
  return "?";
}

ShardMap::ShardMap(ShardScheme scheme, std::size_t n, std::size_t shards)
    : scheme_(scheme), n_(n), shards_(shards) {}

namespace {

void check_counts(std::size_t n, std::size_t shards) {
  if (n == 0) throw ContractError("shard map needs at least one row");
  if (shards == 0) throw ContractError("shard map needs at least one shard");
  if (shards > n) {
    throw ContractError("cannot split " + std::to_string(n) + " rows over " +
                        std::to_string(shards) + " shards");
  }
}

}  // namespace

std::shared_ptr<const ShardMap> ShardMap::range(std::size_t n, std::size_t shards) {
  check_counts(n, shards);
  return std::shared_ptr<const ShardMap>(new ShardMap(ShardScheme::kRange, n, shards));
}

std::shared_ptr<const ShardMap> ShardMap::hash(std::size_t n, std::size_t shards) {
  check_counts(n, shards);
  return std::shared_ptr<const ShardMap>(new ShardMap(ShardScheme::kHash, n, shards));
}

std::shared_ptr<const ShardMap> ShardMap::table(std::vector<VertexId> keys,
                                                std::vector<std::uint32_t> owner,
                                                std::size_t shards) {
  if (keys.size() != owner.size()) throw ContractError("table map: keys and owners differ in length");
  check_counts(keys.size(), shards);
  auto* m = new ShardMap(ShardScheme::kTable, keys.size(), shards);
  std::shared_ptr<const ShardMap> out(m);
  m->table_keys_.resize(shards);
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (owner[i] >= shards) throw ContractError("table map: owner out of range");
    m->table_keys_[owner[i]].push_back(keys[i]);
  }
  for (std::uint32_t s = 0; s < shards; ++s) {
    auto& k = m->table_keys_[s];
    std::sort(k.begin(), k.end());
    for (std::uint64_t r = 0; r < k.size(); ++r) {
      if (!m->table_loc_.emplace(k[r], RowLocation{s, r}).second) {
        throw ContractError("table map: duplicate key " + std::to_string(k[r]));
      }
    }
  }
  return out;
}

std::shared_ptr<const ShardMap> ShardMap::make(ShardScheme scheme, std::size_t n, std::size_t shards) {
  switch (scheme) {
    case ShardScheme::kRange: return range(n, shards);
    case ShardScheme::kHash: return hash(n, shards);
    case ShardScheme::kTable: {
      std::vector<VertexId> keys(n);
      std::vector<std::uint32_t> owner(n);
      for (std::size_t i = 0; i < n; ++i) {
        keys[i] = i;
        owner[i] = static_cast<std::uint32_t>(i % shards);
      }
      return table(std::move(keys), std::move(owner), shards);
    }
  }
  throw ContractError("bad shard scheme");
}

std::size_t ShardMap::rows_on(std::size_t shard) const {
  if (shard >= shards_) throw ContractError("shard out of range");
  switch (scheme_) {
    case ShardScheme::kRange: return range_begin(shard + 1, n_, shards_) - range_begin(shard, n_, shards_);
    case ShardScheme::kHash: return n_ > shard ? (n_ - shard - 1) / shards_ + 1 : 0;
    case ShardScheme::kTable: return table_keys_[shard].size();
  }
  return 0;
}

bool ShardMap::contains(VertexId id) const {
  if (scheme_ == ShardScheme::kTable) return table_loc_.count(id) > 0;
  return id < n_;
}

RowLocation ShardMap::locate(VertexId id) const {
  switch (scheme_) {
    case ShardScheme::kRange:
      if (id < n_) {
        auto s = range_part(id, n_, shards_);
        return {s, id - range_begin(s, n_, shards_)};
      }
      break;
    case ShardScheme::kHash:
      if (id < n_) return {static_cast<std::uint32_t>(id % shards_), id / shards_};
      break;
    case ShardScheme::kTable: {
      auto it = table_loc_.find(id);
      if (it != table_loc_.end()) return it->second;
      break;
    }
  }
  throw ContractError("row id " + std::to_string(id) + " is not in the shard map");
}

std::vector<VertexId> ShardMap::keys() const {
  std::vector<VertexId> out;
  out.reserve(n_);
  if (scheme_ == ShardScheme::kTable) {
    for (const auto& k : table_keys_) out.insert(out.end(), k.begin(), k.end());
  } else {
    for (VertexId v = 0; v < n_; ++v) out.push_back(v);
  }
  return out;
}

rt::ShardIndex ShardMap::index_for(std::size_t shard) const {
  rt::ShardIndex idx;
  switch (scheme_) {
    case ShardScheme::kRange:
      idx.kind = rt::ShardIndex::Kind::kRange;
      idx.begin = range_begin(shard, n_, shards_);
      idx.count = rows_on(shard);
      break;
    case ShardScheme::kHash:
      idx.kind = rt::ShardIndex::Kind::kSortedKeys;
      for (VertexId v = shard; v < n_; v += shards_) idx.keys.push_back(v);
      break;
    case ShardScheme::kTable:
      idx.kind = rt::ShardIndex::Kind::kSortedKeys;
      idx.keys = table_keys_.at(shard);
      break;
  }
  return idx;
}

bool ShardMap::operator==(const ShardMap& o) const {
  return scheme_ == o.scheme_ && n_ == o.n_ && shards_ == o.shards_ && table_keys_ == o.table_keys_;
}

// ---- reply gathering ----

ReplyGather::ReplyGather(std::size_t n) : st_(std::make_shared<State>()) {
  st_->frames.resize(n);
  st_->remaining = n;
}

rt::Connection::Callback ReplyGather::slot(std::size_t i) {
  return [st = st_, i](std::optional<Frame> reply, std::exception_ptr err) {
    std::lock_guard<std::mutex> lk(st->mu);
    if (err) {
      if (!st->error) st->error = err;
    } else {
      st->frames[i] = std::move(*reply);
    }
    if (--st->remaining == 0) st->cv.notify_all();
  };
}

std::vector<Frame> ReplyGather::wait(std::chrono::milliseconds timeout) {
  std::unique_lock<std::mutex> lk(st_->mu);
  if (!st_->cv.wait_for(lk, timeout, [&] { return st_->remaining == 0; })) {
    throw TimeoutError("no reply within " + std::to_string(timeout.count()) + " ms");
  }
  if (st_->error) std::rethrow_exception(st_->error);
  for (const auto& f : st_->frames) rt::check_reply(f);
  return std::move(st_->frames);
}

RowBlock PendingRows::wait() {
  auto frames = gather_.wait(timeout_);
  for (std::size_t q = 0; q < frames.size(); ++q) {
    auto body = rt::check_reply(frames[q]);
    auto reply = rt::decode_rows_reply(body);
    const auto& pos = positions_[q];
    if (reply.count != pos.size() || reply.dim != block_.dim) {
      throw ProtocolError("GET reply shape does not match the request");
    }
    for (std::size_t k = 0; k < pos.size(); ++k) {
      std::copy_n(reply.values.begin() + k * block_.dim, block_.dim,
                  block_.rows.begin() + pos[k] * block_.dim);
    }
  }
  return std::move(block_);
}

// ---- store operations ----

MatrixStore MatrixStore::create(rt::Session& s, const std::string& name, std::size_t dim,
                                std::shared_ptr<const ShardMap> map, rt::InitSpec init,
                                std::uint64_t seed, DType dtype) {
  if (dim == 0) throw ContractError("store dimension must be >= 1");
  if (!map) throw ContractError("store needs a shard map");
  if (map->num_shards() != s.num_shards()) {
    throw ContractError("shard map has " + std::to_string(map->num_shards()) +
                        " shards but the cluster has " + std::to_string(s.num_shards()));
  }
  MatrixStore m;
  m.name_ = name;
  m.id_ = rt::store_id_for(name);
  m.dim_ = dim;
  m.dtype_ = dtype;
  m.map_ = std::move(map);

  ReplyGather g(s.num_shards());
  for (std::size_t sh = 0; sh < s.num_shards(); ++sh) {
    rt::CreateRequest c;
    c.store_id = m.id_;
    c.name = name;
    c.dim = static_cast<std::uint32_t>(dim);
    c.dtype = dtype;
    c.index = m.map_->index_for(sh);
    c.init = init;
    c.seed = seed;
    s.shard(sh).send(Frame{Opcode::kCreate, 0, rt::encode(c)}, g.slot(sh));
  }
  g.wait(s.timeout());
  return m;
}

void MatrixStore::check_ids(std::span<const VertexId> ids) const {
  std::unordered_set<VertexId> seen;
  seen.reserve(ids.size() * 2);
  for (VertexId v : ids) {
    if (!map_->contains(v)) {
      throw ContractError("row id " + std::to_string(v) + " is out of range for store '" + name_ + "'");
    }
    if (!seen.insert(v).second) {
      throw ContractError("duplicate row id " + std::to_string(v) + " in request to '" + name_ + "'");
    }
  }
}

PendingRows MatrixStore::get_async(rt::Session& s, std::span<const VertexId> ids) const {
  check_ids(ids);
  std::vector<std::vector<VertexId>> per_shard(map_->num_shards());
  std::vector<std::vector<std::size_t>> pos(map_->num_shards());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto sh = map_->shard_of(ids[i]);
    per_shard[sh].push_back(ids[i]);
    pos[sh].push_back(i);
  }
  std::size_t touched = 0;
  for (const auto& p : per_shard) touched += !p.empty();

  PendingRows pending(touched, s.timeout());
  pending.block_ = RowBlock(std::vector<VertexId>(ids.begin(), ids.end()), dim_);
  std::size_t q = 0;
  for (std::size_t sh = 0; sh < per_shard.size(); ++sh) {
    if (per_shard[sh].empty()) continue;
    rt::RowsRequest r{id_, dtype_, std::move(per_shard[sh]), {}};
    pending.positions_.push_back(std::move(pos[sh]));
    s.shard(sh).send(Frame{Opcode::kGet, 0, rt::encode(r)}, pending.gather_.slot(q++));
  }
  return pending;
}

RowBlock MatrixStore::get(rt::Session& s, std::span<const VertexId> ids) const {
  return get_async(s, ids).wait();
}

PendingRows MatrixStore::get_each(rt::Session& s, std::span<const VertexId> ids) const {
  for (VertexId v : ids) {
    if (!map_->contains(v)) throw ContractError("row id " + std::to_string(v) + " is out of range");
  }
  PendingRows pending(ids.size(), s.timeout());
  pending.block_ = RowBlock(std::vector<VertexId>(ids.begin(), ids.end()), dim_);
  pending.positions_.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    rt::RowsRequest r{id_, dtype_, {ids[i]}, {}};
    pending.positions_.push_back({i});
    s.shard(map_->shard_of(ids[i])).send(Frame{Opcode::kGet, 0, rt::encode(r)},
                                         pending.gather_.slot(i));
  }
  return pending;
}

void MatrixStore::write(rt::Session& s, const RowBlock& block, Opcode op) const {
  if (block.dim != dim_ || block.rows.size() != block.ids.size() * dim_) {
    throw ContractError("row block of dimension " + std::to_string(block.dim) +
                        " does not match store '" + name_ + "' of dimension " + std::to_string(dim_));
  }
  check_ids(block.ids);
  std::vector<rt::RowsRequest> per_shard(map_->num_shards());
  for (std::size_t i = 0; i < block.ids.size(); ++i) {
    auto& r = per_shard[map_->shard_of(block.ids[i])];
    r.ids.push_back(block.ids[i]);
    auto row = block.row(i);
    r.values.insert(r.values.end(), row.begin(), row.end());
  }
  std::size_t touched = 0;
  for (const auto& r : per_shard) touched += !r.ids.empty();
  ReplyGather g(touched);
  std::size_t q = 0;
  for (std::size_t sh = 0; sh < per_shard.size(); ++sh) {
    auto& r = per_shard[sh];
    if (r.ids.empty()) continue;
    r.store_id = id_;
    r.dtype = dtype_;
    s.shard(sh).send(Frame{op, 0, rt::encode(r)}, g.slot(q++));
  }
  g.wait(s.timeout());
}

void MatrixStore::put(rt::Session& s, const RowBlock& block) const { write(s, block, Opcode::kPut); }
void MatrixStore::add(rt::Session& s, const RowBlock& block) const { write(s, block, Opcode::kAdd); }

void MatrixStore::broadcast(rt::Session& s, Opcode op, const std::vector<std::uint8_t>& payload) const {
  ReplyGather g(s.num_shards());
  for (std::size_t sh = 0; sh < s.num_shards(); ++sh) {
    s.shard(sh).send(Frame{op, 0, payload}, g.slot(sh));
  }
  g.wait(s.timeout());
}

void MatrixStore::mult(rt::Session& s, double scalar) const {
  broadcast(s, Opcode::kMult, rt::encode(rt::MultRequest{id_, scalar}));
}

void MatrixStore::mult_add(rt::Session& s, const MatrixStore& source, double scalar) const {
  if (!(*map_ == *source.map_) || dim_ != source.dim_ || dtype_ != source.dtype_) {
    throw ContractError("mult_add needs stores with one shard map, dimension and dtype ('" + name_ +
                        "' vs '" + source.name_ + "')");
  }
  broadcast(s, Opcode::kMultAdd, rt::encode(rt::MultAddRequest{id_, source.id_, scalar}));
}

std::vector<double> MatrixStore::export_dense(rt::Session& s) const {
  constexpr std::size_t kChunk = 1 << 15;
  auto keys = map_->keys();
  std::vector<double> out;
  out.reserve(keys.size() * dim_);
  for (std::size_t i = 0; i < keys.size(); i += kChunk) {
    std::span<const VertexId> part(keys.data() + i, std::min(kChunk, keys.size() - i));
    auto block = get(s, part);
    out.insert(out.end(), block.rows.begin(), block.rows.end());
  }
  return out;
}

namespace {

Frame barrier_call(rt::Session& s, rt::BarrierRequest::Kind kind, const BarrierToken& t) {
  rt::BarrierRequest b{kind, t.iteration, t.participants, s.id()};
  auto fut = s.coordinator().call(Frame{Opcode::kBarrier, 0, rt::encode(b)});
  // The coordinator enforces its own round timeout and answers with an
  // abort; the client deadline only guards against a dead coordinator.
  Frame reply = rt::await_reply(fut, s.timeout() * 2);
  rt::check_reply(reply);
  return reply;
}

}  // namespace

void barrier(rt::Session& s, const BarrierToken& token) {
  if (token.participants == 0) throw ContractError("barrier needs at least one participant");
  barrier_call(s, rt::BarrierRequest::Kind::kArrive, token);
}

void abort_barrier(rt::Session& s, const BarrierToken& token) {
  try {
    barrier_call(s, rt::BarrierRequest::Kind::kAbort, token);
  } catch (const Error&) {
    // The round or the coordinator may already be gone; best effort.
  }
}

}  // namespace gshard
