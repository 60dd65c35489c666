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

#include "gshard/actors.hpp"

#include <algorithm>
#include <type_traits>

namespace gshard::rt {

double ShardCore::Table::at(std::uint64_t row, std::size_t col) const {
  return std::visit([&](const auto& v) { return static_cast<double>(v[row * dim + col]); }, data);
}

const ShardCore::Table* ShardCore::table(std::uint32_t store_id) const {
  auto it = tables_.find(store_id);
  return it == tables_.end() ? nullptr : &it->second;
}

ShardCore::Table& ShardCore::lookup(std::uint32_t store_id) {
  auto it = tables_.find(store_id);
  if (it == tables_.end()) throw ContractError("unknown store id " + std::to_string(store_id));
  return it->second;
}

Frame ShardCore::handle(const Frame& f) {
  try {
    Frame reply;
    switch (f.opcode) {
      case Opcode::kCreate: reply = do_create(f); break;
      case Opcode::kGet: reply = do_get(f); break;
      case Opcode::kPut: reply = do_write(f, false); break;
      case Opcode::kAdd: reply = do_write(f, true); break;
      case Opcode::kMult: reply = do_mult(f); break;
      case Opcode::kMultAdd: reply = do_mult_add(f); break;
      case Opcode::kBarrier: {
        auto b = decode_barrier(f.payload);
        if (b.kind != BarrierRequest::Kind::kFlush) {
          throw ProtocolError("shards only accept flush markers");
        }
        // Serial mailbox: everything received earlier is already applied.
        reply = make_reply(f);
        break;
      }
      case Opcode::kShutdown:
        shutdown_ = true;
        reply = make_reply(f);
        break;
    }
    ++applied_;
    return reply;
  } catch (const std::exception& e) {
    return make_error(f, Status::kError, e.what());
  }
}

Frame ShardCore::do_create(const Frame& f) {
  auto c = decode_create(f.payload);
  if (tables_.count(c.store_id) || names_.count(c.name)) {
    throw ContractError("store '" + c.name + "' already exists");
  }
  if (c.dim == 0) throw ContractError("store dimension must be >= 1");
  Table t;
  t.name = c.name;
  t.dim = c.dim;
  t.dtype = c.dtype;
  t.index = std::move(c.index);
  const std::uint64_t rows = t.index.rows();
  std::vector<double> row(c.dim);
  auto fill = [&](auto& vec) {
    using T = typename std::decay_t<decltype(vec)>::value_type;
    vec.resize(rows * c.dim);
    for (std::uint64_t r = 0; r < rows; ++r) {
      init_row(c.init, c.seed, t.index.global_id(r), row);
      for (std::size_t j = 0; j < c.dim; ++j) vec[r * c.dim + j] = static_cast<T>(row[j]);
    }
  };
  if (c.dtype == DType::kF32) {
    t.data = std::vector<float>();
  } else {
    t.data = std::vector<double>();
  }
  std::visit(fill, t.data);
  names_.insert(t.name);
  tables_.emplace(c.store_id, std::move(t));
  return make_reply(f);
}

Frame ShardCore::do_get(const Frame& f) {
  Table& t = lookup(peek_store_id(f.payload));
  auto q = decode_rows(f.payload, false, t.dim);
  std::vector<double> out(q.ids.size() * t.dim);
  std::visit(
      [&](const auto& vec) {
        for (std::size_t i = 0; i < q.ids.size(); ++i) {
          auto r = t.index.local_row(q.ids[i]);
          if (r < 0) throw ContractError("id " + std::to_string(q.ids[i]) + " not on this shard");
          for (std::size_t j = 0; j < t.dim; ++j) out[i * t.dim + j] = vec[r * t.dim + j];
        }
      },
      t.data);
  return make_reply(f, encode_rows_reply(t.dtype, q.ids.size(), t.dim, out));
}

Frame ShardCore::do_write(const Frame& f, bool accumulate) {
  std::uint32_t id = peek_store_id(f.payload);
  if (id == kDenseReduceStore) throw ProtocolError("dense reduce frame sent to a storage shard");
  Table& t = lookup(id);
  auto q = decode_rows(f.payload, true, t.dim);
  if (q.dtype != t.dtype) throw ContractError("row dtype does not match store");
  // Validate every id before touching anything so a bad block applies nothing.
  std::vector<std::int64_t> rows(q.ids.size());
  for (std::size_t i = 0; i < q.ids.size(); ++i) {
    rows[i] = t.index.local_row(q.ids[i]);
    if (rows[i] < 0) throw ContractError("id " + std::to_string(q.ids[i]) + " not on this shard");
  }
  std::visit(
      [&](auto& vec) {
        using T = typename std::decay_t<decltype(vec)>::value_type;
        for (std::size_t i = 0; i < rows.size(); ++i) {
          T* dst = vec.data() + rows[i] * t.dim;
          const double* src = q.values.data() + i * t.dim;
          for (std::size_t j = 0; j < t.dim; ++j) {
            dst[j] = accumulate ? static_cast<T>(dst[j] + static_cast<T>(src[j]))
                                : static_cast<T>(src[j]);
          }
        }
      },
      t.data);
  return make_reply(f);
}

Frame ShardCore::do_mult(const Frame& f) {
  auto m = decode_mult(f.payload);
  Table& t = lookup(m.store_id);
  std::visit(
      [&](auto& vec) {
        using T = typename std::decay_t<decltype(vec)>::value_type;
        const T s = static_cast<T>(m.scalar);
        for (auto& x : vec) x *= s;
      },
      t.data);
  return make_reply(f);
}

Frame ShardCore::do_mult_add(const Frame& f) {
  auto m = decode_mult_add(f.payload);
  Table& target = lookup(m.target_id);
  const Table& source = lookup(m.source_id);
  if (target.index != source.index || target.dim != source.dim || target.dtype != source.dtype) {
    throw ContractError("mult_add needs co-sharded stores with equal shape and dtype");
  }
  std::visit(
      [&](auto& dst) {
        using T = typename std::decay_t<decltype(dst)>::value_type;
        const auto& src = std::get<std::vector<T>>(source.data);
        const T s = static_cast<T>(m.scalar);
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += s * src[i];
      },
      target.data);
  return make_reply(f);
}

// ---- coordinator ----

std::vector<Action> CoordinatorCore::abort_round(const std::string& why, std::uint64_t iteration) {
  std::vector<Action> out;
  if (round_) iteration = std::max(iteration, round_->iteration);
  aborted_through_ = std::max(aborted_through_.value_or(0), iteration);
  if (round_) {
    for (const auto& w : round_->waiters) {
      out.push_back({Action::Kind::kReply, w.client, 0, make_error(w.request, Status::kAborted, why)});
    }
  }
  round_.reset();
  return out;
}

std::vector<Action> CoordinatorCore::on_request(std::uint64_t client, const Frame& f) {
  std::vector<Action> out;
  auto reply = [&](Frame fr) { out.push_back({Action::Kind::kReply, client, 0, std::move(fr)}); };
  if (f.opcode != Opcode::kBarrier) {
    reply(make_error(f, Status::kError, "coordinator only handles BARRIER"));
    return out;
  }
  BarrierRequest b;
  try {
    b = decode_barrier(f.payload);
  } catch (const std::exception& e) {
    reply(make_error(f, Status::kError, e.what()));
    return out;
  }

  if (b.kind == BarrierRequest::Kind::kAbort) {
    out = abort_round("trainer " + std::to_string(b.trainer) + " aborted the run", b.iteration);
    reply(make_reply(f));
    return out;
  }
  if (b.kind != BarrierRequest::Kind::kArrive) {
    reply(make_error(f, Status::kError, "coordinator does not accept flush markers"));
    return out;
  }
  if (aborted_through_ && b.iteration <= *aborted_through_) {
    reply(make_error(f, Status::kAborted, "run was aborted"));
    return out;
  }
  if (b.participants == 0) {
    reply(make_error(f, Status::kError, "barrier needs >= 1 participant"));
    return out;
  }

  if (!round_) {
    if (last_released_ && b.iteration <= *last_released_) {
      reply(make_error(f, Status::kError,
                       "barrier iteration " + std::to_string(b.iteration) +
                           " is not after released iteration " + std::to_string(*last_released_)));
      return out;
    }
    round_ = Round{b.iteration, b.participants, {}, false, {}};
  } else {
    bool dup = std::any_of(round_->waiters.begin(), round_->waiters.end(),
                           [&](const Waiter& w) { return w.trainer == b.trainer; });
    if (b.iteration != round_->iteration || b.participants != round_->participants || dup ||
        round_->flushing) {
      std::string why = "barrier mismatch: trainer " + std::to_string(b.trainer) +
                        " sent iteration " + std::to_string(b.iteration) + " while round " +
                        std::to_string(round_->iteration) + " is open";
      out = abort_round(why, b.iteration);
      reply(make_error(f, Status::kError, why));
      return out;
    }
  }
  round_->waiters.push_back({client, f, b.trainer});
  if (round_->waiters.size() < round_->participants) return out;

  round_->flushing = true;
  for (std::uint32_t s = 0; s < num_shards_; ++s) {
    Frame flush;
    flush.opcode = Opcode::kBarrier;
    flush.request_id = next_flush_id_++;
    flush.payload = encode(BarrierRequest{BarrierRequest::Kind::kFlush, round_->iteration,
                                          round_->participants, 0});
    round_->pending_flush.insert(flush.request_id);
    out.push_back({Action::Kind::kToShard, 0, s, std::move(flush)});
  }
  auto rel = maybe_release();
  out.insert(out.end(), rel.begin(), rel.end());
  return out;
}

std::vector<Action> CoordinatorCore::on_shard_reply(std::uint32_t shard, const Frame& f) {
  if (!round_ || !round_->pending_flush.erase(f.request_id)) return {};
  try {
    check_reply(f);
  } catch (const std::exception& e) {
    return abort_round("flush failed on shard " + std::to_string(shard) + ": " + e.what(), 0);
  }
  return maybe_release();
}

std::vector<Action> CoordinatorCore::maybe_release() {
  std::vector<Action> out;
  if (!round_ || !round_->flushing || !round_->pending_flush.empty()) return out;
  for (const auto& w : round_->waiters) {
    out.push_back({Action::Kind::kReply, w.client, 0, make_reply(w.request)});
  }
  last_released_ = round_->iteration;
  round_.reset();
  return out;
}

std::vector<Action> CoordinatorCore::on_timeout() {
  if (!round_) return {};
  return abort_round("barrier timed out waiting for participants", 0);
}

// ---- reducer ----

std::vector<Action> ReducerCore::on_request(std::uint64_t client, const Frame& f) {
  std::vector<Action> out;
  auto fail_all = [&](const std::string& why) {
    for (const auto& p : pending_) {
      out.push_back({Action::Kind::kReply, p.client, 0, make_error(p.request, Status::kError, why)});
    }
    out.push_back({Action::Kind::kReply, client, 0, make_error(f, Status::kError, why)});
    pending_.clear();
    round_.reset();
  };
  if (f.opcode != Opcode::kAdd) {
    out.push_back({Action::Kind::kReply, client, 0,
                   make_error(f, Status::kError, "reducer only handles dense ADD")});
    return out;
  }
  ReduceRequest q;
  try {
    q = decode_reduce(f.payload);
  } catch (const std::exception& e) {
    fail_all(e.what());
    return out;
  }
  if (!round_) {
    round_ = q.round;
    participants_ = q.participants;
  }
  bool dup = std::any_of(pending_.begin(), pending_.end(),
                         [&](const Pending& p) { return p.body.trainer == q.trainer; });
  if (q.round != *round_ || q.participants != participants_ || dup || q.participants == 0 ||
      (!pending_.empty() && (pending_.front().body.values.size() != q.values.size() ||
                             pending_.front().body.dtype != q.dtype))) {
    fail_all("allreduce contributions disagree on round, participants, or shape");
    return out;
  }
  pending_.push_back({client, f, std::move(q)});
  if (pending_.size() < participants_) return out;

  std::sort(pending_.begin(), pending_.end(),
            [](const Pending& a, const Pending& b) { return a.body.trainer < b.body.trainer; });
  const std::size_t n = pending_.front().body.values.size();
  std::vector<double> mean(n, 0.0);
  for (const auto& p : pending_) {
    for (std::size_t i = 0; i < n; ++i) mean[i] += p.body.values[i];
  }
  const double inv = static_cast<double>(participants_);
  for (double& x : mean) x /= inv;
  const DType dtype = pending_.front().body.dtype;
  ByteWriter w;
  w.put<std::uint64_t>(n);
  w.put_values(mean, dtype);
  auto body = w.take();
  for (const auto& p : pending_) {
    out.push_back({Action::Kind::kReply, p.client, 0, make_reply(p.request, body)});
  }
  pending_.clear();
  round_.reset();
  return out;
}

}  // namespace gshard::rt
