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
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "gshard/protocol.hpp"
#include "gshard/wire.hpp"

namespace gshard::rt {

// Storage actor state: the rows of every store this shard holds. handle()
// applies one request and returns its reply; it never throws.
class ShardCore {
 public:
  struct Table {
    std::string name;
    std::uint32_t dim = 0;
    DType dtype = DType::kF32;
    ShardIndex index;
    std::variant<std::vector<float>, std::vector<double>> data;

    double at(std::uint64_t row, std::size_t col) const;
    bool operator==(const Table&) const = default;
  };

  Frame handle(const Frame& request);

  bool shutdown_requested() const { return shutdown_; }
  const Table* table(std::uint32_t store_id) const;
  std::uint64_t operations_applied() const { return applied_; }
  bool operator==(const ShardCore&) const = default;

 private:
  Frame do_create(const Frame& f);
  Frame do_get(const Frame& f);
  Frame do_write(const Frame& f, bool accumulate);
  Frame do_mult(const Frame& f);
  Frame do_mult_add(const Frame& f);
  Table& lookup(std::uint32_t store_id);

  std::map<std::uint32_t, Table> tables_;
  std::set<std::string> names_;
  std::uint64_t applied_ = 0;
  bool shutdown_ = false;
};

// Something an event-driven core wants its host to do.
struct Action {
  enum class Kind { kReply, kToShard };
  Kind kind = Kind::kReply;
  std::uint64_t client = 0;  // kReply: opaque handle of the requester
  std::uint32_t shard = 0;   // kToShard
  Frame frame;
};

// Barrier coordinator. A round is released only after every participant has
// arrived and every shard has acknowledged a flush marker sent after the
// last arrival.
class CoordinatorCore {
 public:
  explicit CoordinatorCore(std::size_t num_shards) : num_shards_(num_shards) {}

  std::vector<Action> on_request(std::uint64_t client, const Frame& f);
  std::vector<Action> on_shard_reply(std::uint32_t shard, const Frame& f);
  // Abandons the open round; waiters receive an aborted reply.
  std::vector<Action> on_timeout();

  bool round_open() const { return round_.has_value(); }
  bool aborted() const { return aborted_through_.has_value(); }
  std::optional<std::uint64_t> last_released() const { return last_released_; }
  bool operator==(const CoordinatorCore&) const = default;

 private:
  struct Waiter {
    std::uint64_t client;
    Frame request;
    std::uint32_t trainer;
    bool operator==(const Waiter&) const = default;
  };
  struct Round {
    std::uint64_t iteration = 0;
    std::uint32_t participants = 0;
    std::vector<Waiter> waiters;
    bool flushing = false;
    std::set<std::uint64_t> pending_flush;  // request ids of flush markers in flight
    bool operator==(const Round&) const = default;
  };

  std::vector<Action> abort_round(const std::string& why, std::uint64_t iteration);
  std::vector<Action> maybe_release();

  std::size_t num_shards_;
  std::optional<Round> round_;
  std::optional<std::uint64_t> last_released_;
  std::uint64_t next_flush_id_ = 1;
  // Arrivals at or below this iteration belong to an abandoned run and are
  // refused; a later run on the same coordinator starts above it.
  std::optional<std::uint64_t> aborted_through_;
};

// Allreduce root for the data-parallel baseline: gathers one dense
// contribution per participant, replies to all with the mean. Contributions
// are summed in trainer order so every run and every replica agree bitwise.
class ReducerCore {
 public:
  std::vector<Action> on_request(std::uint64_t client, const Frame& f);

 private:
  struct Pending {
    std::uint64_t client;
    Frame request;
    ReduceRequest body;
  };
  std::optional<std::uint64_t> round_;
  std::uint32_t participants_ = 0;
  std::vector<Pending> pending_;
};

}  // namespace gshard::rt
