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

#include <thread>

#include "gshard/cluster.hpp"
#include "gshard/store.hpp"
#include "oracles.hpp"

namespace gshard {
namespace {

using rt::InitSpec;
using testing::Gen;

// The sharded-store suite runs once per transport.
class StoreTest : public ::testing::TestWithParam<rt::Transport> {
 protected:
  std::unique_ptr<rt::Cluster> start(std::size_t shards, std::size_t trainers = 1) {
    rt::ClusterOptions o;
    o.num_shards = shards;
    o.num_trainers = trainers;
    o.transport = GetParam();
    o.request_timeout = std::chrono::milliseconds(10000);
    o.barrier_timeout = std::chrono::milliseconds(10000);
    return rt::start_cluster(o);
  }
};

TEST_P(StoreTest, ZeroCreatedStoreReadsZero) {
  auto c = start(2);
  auto& s = c->driver();
  auto m = MatrixStore::create(s, "z", 2, ShardMap::range(4, 2));
  std::vector<VertexId> ids{0, 1, 2, 3};
  auto b = m.get(s, ids);
  EXPECT_EQ(b.rows, std::vector<double>(8, 0.0));
}

TEST_P(StoreTest, ConstantInitFillsEveryRow) {
  auto c = start(3);
  auto& s = c->driver();
  auto m = MatrixStore::create(s, "ones", 3, ShardMap::hash(10, 3), InitSpec::constant(1.0));
  auto all = m.export_dense(s);
  EXPECT_EQ(all, std::vector<double>(30, 1.0));
}

TEST_P(StoreTest, UniformInitIsSeedDeterministicAndShardInvariant) {
  auto c = start(4);
  auto& s = c->driver();
  auto a = MatrixStore::create(s, "a", 5, ShardMap::range(40, 4), InitSpec::uniform(-1, 1), 9, DType::kF64);
  auto b = MatrixStore::create(s, "b", 5, ShardMap::range(40, 4), InitSpec::uniform(-1, 1), 9, DType::kF64);
  auto h = MatrixStore::create(s, "h", 5, ShardMap::hash(40, 4), InitSpec::uniform(-1, 1), 9, DType::kF64);
  auto other = MatrixStore::create(s, "o", 5, ShardMap::range(40, 4), InitSpec::uniform(-1, 1), 10, DType::kF64);
  auto va = a.export_dense(s);
  EXPECT_EQ(va, b.export_dense(s));
  EXPECT_EQ(va, h.export_dense(s));
  EXPECT_NE(va, other.export_dense(s));
  for (double x : va) {
    EXPECT_GE(x, -1.0);
    EXPECT_LT(x, 1.0);
  }
}

TEST_P(StoreTest, PutGetRoundTripIsBitExact) {
  auto c = start(3);
  auto& s = c->driver();
  for (DType dt : {DType::kF32, DType::kF64}) {
    auto m = MatrixStore::create(s, std::string("rt") + dtype_name(dt), 4, ShardMap::hash(50, 3),
                                 InitSpec::zeros(), 0, dt);
    Gen g(1);
    RowBlock blk(g.distinct(17, 50), 4);
    for (double& x : blk.rows) x = dt == DType::kF32 ? static_cast<float>(g.real(-5, 5)) : g.real(-5, 5);
    m.put(s, blk);
    auto back = m.get(s, blk.ids);
    EXPECT_EQ(back.ids, blk.ids);
    EXPECT_EQ(back.rows, blk.rows);
  }
}

TEST_P(StoreTest, SecondPutWins) {
  auto c = start(1);
  auto& s = c->driver();
  auto m = MatrixStore::create(s, "w", 1, ShardMap::range(4, 1));
  RowBlock a({3}, 1);
  a.rows = {1.0};
  m.put(s, a);
  a.rows = {2.0};
  m.put(s, a);
  EXPECT_EQ(m.get(s, std::vector<VertexId>{3}).rows[0], 2.0);
}

TEST_P(StoreTest, AddAccumulates) {
  auto c = start(2);
  auto& s = c->driver();
  auto m = MatrixStore::create(s, "acc", 2, ShardMap::range(6, 2), InitSpec::zeros(), 0, DType::kF64);
  RowBlock r({1, 4}, 2);
  r.rows = {0.5, -1.0, 2.0, 3.0};
  RowBlock zero({1, 4}, 2);
  m.add(s, zero);
  EXPECT_EQ(m.get(s, r.ids).rows, std::vector<double>(4, 0.0));
  m.add(s, r);
  m.add(s, r);
  EXPECT_EQ(m.get(s, r.ids).rows, (std::vector<double>{1.0, -2.0, 4.0, 6.0}));
}

TEST_P(StoreTest, ConcurrentAddsToOneCellSum) {
  for (int rep = 0; rep < 3; ++rep) {
    auto c = start(2, 4);
    auto m = MatrixStore::create(c->driver(), "cell", 1, ShardMap::range(2, 2));
    std::vector<std::thread> ts;
    for (std::size_t t = 0; t < 4; ++t) {
      ts.emplace_back([&, t] {
        RowBlock one({1}, 1);
        one.rows = {1.0};
        m.add(c->trainer(t), one);
      });
    }
    for (auto& t : ts) t.join();
    EXPECT_EQ(m.get(c->driver(), std::vector<VertexId>{1}).rows[0], 4.0);
  }
}

TEST_P(StoreTest, ConcurrentDisjointPutsAllLand) {
  auto c = start(3, 4);
  const std::size_t n = 64;
  auto m = MatrixStore::create(c->driver(), "disjoint", 2, ShardMap::hash(n, 3), InitSpec::zeros(), 0, DType::kF64);
  std::vector<std::thread> ts;
  for (std::size_t t = 0; t < 4; ++t) {
    ts.emplace_back([&, t] {
      std::vector<VertexId> mine;
      for (VertexId v = t; v < n; v += 4) mine.push_back(v);
      RowBlock b(mine, 2);
      for (std::size_t i = 0; i < mine.size(); ++i) b.rows[2 * i] = b.rows[2 * i + 1] = static_cast<double>(mine[i]);
      m.put(c->trainer(t), b);
    });
  }
  for (auto& t : ts) t.join();
  auto all = m.export_dense(c->driver());
  for (std::size_t v = 0; v < n; ++v) {
    EXPECT_EQ(all[2 * v], static_cast<double>(v));
    EXPECT_EQ(all[2 * v + 1], static_cast<double>(v));
  }
}

TEST_P(StoreTest, MultScalesEveryRow) {
  auto c = start(2);
  auto& s = c->driver();
  auto m = MatrixStore::create(s, "mult", 3, ShardMap::range(7, 2), InitSpec::constant(1.0), 0, DType::kF64);
  m.mult(s, 0.9);
  m.mult(s, 0.9);
  for (double x : m.export_dense(s)) EXPECT_DOUBLE_EQ(x, 0.81);
  m.mult(s, 0.0);
  for (double x : m.export_dense(s)) EXPECT_EQ(x, 0.0);
}

TEST_P(StoreTest, MultAddMatchesDenseOracle) {
  auto c = start(3);
  auto& s = c->driver();
  Gen g(5);
  auto map = ShardMap::hash(16, 3);
  auto t = MatrixStore::create(s, "T", 4, map, InitSpec::zeros(), 0, DType::kF64);
  auto src = MatrixStore::create(s, "S", 4, map, InitSpec::zeros(), 0, DType::kF64);
  std::vector<VertexId> ids(16);
  for (VertexId i = 0; i < 16; ++i) ids[i] = i;
  RowBlock tv(ids, 4), sv(ids, 4);
  tv.rows = g.reals(64, -1, 1);
  sv.rows = g.reals(64, -1, 1);
  t.put(s, tv);
  src.put(s, sv);
  const double k = -0.37;
  t.mult_add(s, src, k);
  auto got = t.export_dense(s);
  for (std::size_t i = 0; i < 64; ++i) EXPECT_NEAR(got[i], tv.rows[i] + k * sv.rows[i], 1e-15);
  t.mult_add(s, src, 0.0);
  EXPECT_EQ(t.export_dense(s), got);
}

TEST_P(StoreTest, MultAddOnOnesSourceSubtracts) {
  auto c = start(2);
  auto& s = c->driver();
  auto map = ShardMap::range(5, 2);
  auto t = MatrixStore::create(s, "t1", 2, map, InitSpec::zeros(), 0, DType::kF64);
  auto one = MatrixStore::create(s, "s1", 2, map, InitSpec::constant(1.0), 0, DType::kF64);
  t.mult_add(s, one, -0.1);
  for (double x : t.export_dense(s)) EXPECT_DOUBLE_EQ(x, -0.1);
}

TEST_P(StoreTest, MultAddRejectsMisalignedStores) {
  auto c = start(2);
  auto& s = c->driver();
  auto a = MatrixStore::create(s, "ma", 2, ShardMap::range(8, 2));
  auto b = MatrixStore::create(s, "mb", 2, ShardMap::hash(8, 2));
  auto d = MatrixStore::create(s, "md", 3, ShardMap::range(8, 2));
  EXPECT_THROW(a.mult_add(s, b, 1.0), ContractError);
  EXPECT_THROW(a.mult_add(s, d, 1.0), ContractError);
}

TEST_P(StoreTest, ContractViolationsRejectedBeforeDispatch) {
  auto c = start(2);
  auto& s = c->driver();
  auto m = MatrixStore::create(s, "cv", 2, ShardMap::range(8, 2));
  const auto frames = s.counters().frames_sent.load();
  EXPECT_THROW(m.get(s, std::vector<VertexId>{1, 1}), ContractError);
  EXPECT_THROW(m.get(s, std::vector<VertexId>{8}), ContractError);
  RowBlock bad({1}, 3);
  EXPECT_THROW(m.put(s, bad), ContractError);
  EXPECT_THROW(m.add(s, bad), ContractError);
  EXPECT_EQ(s.counters().frames_sent.load(), frames);
}

TEST_P(StoreTest, CreateErrors) {
  auto c = start(2);
  auto& s = c->driver();
  MatrixStore::create(s, "dup", 1, ShardMap::range(4, 2));
  EXPECT_THROW(MatrixStore::create(s, "dup", 1, ShardMap::range(4, 2)), ProtocolError);
  EXPECT_THROW(ShardMap::range(1, 2), ContractError);
  EXPECT_THROW(MatrixStore::create(s, "bad", 1, ShardMap::range(4, 3)), ContractError);
}

TEST_P(StoreTest, GetIssuesOneRequestPerShard) {
  auto c = start(4);
  auto& s = c->driver();
  auto m = MatrixStore::create(s, "feat", 8, ShardMap::hash(5000, 4));
  Gen g(3);
  auto ids = g.distinct(640, 5000);
  const auto before = s.counters().frames_sent.load();
  auto b = m.get(s, ids);
  EXPECT_EQ(s.counters().frames_sent.load() - before, 4u);
  EXPECT_EQ(b.ids, ids);
}

TEST_P(StoreTest, ShadowOracleCompleteness) {
  // Random operation sequences against a dense shadow matrix.
  auto c = start(3);
  auto& s = c->driver();
  int store_no = 0;
  auto failure = testing::for_all(15, 77, [&](Gen& g, std::ostream& why) {
    const std::size_t n = g.size(3, 40), d = g.size(1, 4);
    const std::size_t shards = 3;
    ShardScheme scheme = static_cast<ShardScheme>(g.size(0, 2));
    auto map = ShardMap::make(scheme, n, shards);
    auto m = MatrixStore::create(s, "shadow" + std::to_string(store_no), d, map, InitSpec::zeros(), 0, DType::kF64);
    auto src = MatrixStore::create(s, "shadow_src" + std::to_string(store_no++), d, map,
                                   InitSpec::constant(0.5), 0, DType::kF64);
    std::vector<double> shadow(n * d, 0.0);
    for (int op = 0; op < 25; ++op) {
      const auto kind = g.size(0, 3);
      if (kind <= 1) {
        RowBlock b(g.distinct(g.size(1, n), n), d);
        b.rows = g.reals(b.rows.size(), -2, 2);
        (kind == 0 ? m.put(s, b) : m.add(s, b));
        for (std::size_t i = 0; i < b.size(); ++i) {
          for (std::size_t j = 0; j < d; ++j) {
            double& x = shadow[b.ids[i] * d + j];
            x = kind == 0 ? b.rows[i * d + j] : x + b.rows[i * d + j];
          }
        }
      } else if (kind == 2) {
        const double k = g.real(-1, 1);
        m.mult(s, k);
        for (double& x : shadow) x *= k;
      } else {
        const double k = g.real(-1, 1);
        m.mult_add(s, src, k);
        for (double& x : shadow) x += k * 0.5;
      }
      auto probe = g.distinct(g.size(1, n), n);
      auto got = m.get(s, probe);
      for (std::size_t i = 0; i < probe.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) {
          if (got.rows[i * d + j] != shadow[probe[i] * d + j]) {
            why << "row " << probe[i] << " differs after op " << op;
            return false;
          }
        }
      }
    }
    return true;
  });
  EXPECT_EQ(failure, "");
}

TEST_P(StoreTest, TableMapWithSparseKeys) {
  auto c = start(2);
  auto& s = c->driver();
  auto map = ShardMap::table({1000, 7, 123456789, 42}, {0, 1, 1, 0}, 2);
  auto m = MatrixStore::create(s, "sparse", 1, map, InitSpec::zeros(), 0, DType::kF64);
  RowBlock b({123456789, 42}, 1);
  b.rows = {3.0, 4.0};
  m.put(s, b);
  EXPECT_EQ(m.get(s, std::vector<VertexId>{42, 7, 123456789}).rows, (std::vector<double>{4, 0, 3}));
  EXPECT_THROW(m.get(s, std::vector<VertexId>{8}), ContractError);
}

TEST_P(StoreTest, BarrierMakesWritesVisible) {
  // Each trainer stamps its rows with the iteration number, then after the
  // barrier reads everyone else's rows and checks none is older.
  constexpr std::uint32_t kTrainers = 4;
  constexpr std::uint64_t kRounds = 100;
  auto c = start(2, kTrainers);
  const std::size_t rows_per = 3;
  auto m = MatrixStore::create(c->driver(), "vis", 1, ShardMap::hash(kTrainers * rows_per, 2),
                               InitSpec::zeros(), 0, DType::kF64);
  std::atomic<int> stale{0};
  std::vector<std::thread> ts;
  for (std::uint32_t t = 0; t < kTrainers; ++t) {
    ts.emplace_back([&, t] {
      auto& s = c->trainer(t);
      std::vector<VertexId> mine, others;
      for (VertexId v = 0; v < kTrainers * rows_per; ++v) (v % kTrainers == t ? mine : others).push_back(v);
      for (std::uint64_t it = 1; it <= kRounds; ++it) {
        RowBlock b(mine, 1);
        std::fill(b.rows.begin(), b.rows.end(), static_cast<double>(it));
        m.put(s, b);
        barrier(s, BarrierToken{it, kTrainers});
        for (double x : m.get(s, others).rows) stale += x < static_cast<double>(it);
      }
    });
  }
  for (auto& t : ts) t.join();
  EXPECT_EQ(stale.load(), 0);
}

INSTANTIATE_TEST_SUITE_P(Transports, StoreTest,
                         ::testing::Values(rt::Transport::kInproc, rt::Transport::kTcp),
                         [](const auto& info) { return std::string(rt::transport_name(info.param)); });

TEST(ShardMap, RangeAndHashAreBijections) {
  auto failure = testing::for_all(50, 11, [](Gen& g, std::ostream& why) {
    const std::size_t n = g.size(1, 300);
    const std::size_t s = g.size(1, std::min<std::size_t>(n, 9));
    for (auto scheme : {ShardScheme::kRange, ShardScheme::kHash, ShardScheme::kTable}) {
      auto map = ShardMap::make(scheme, n, s);
      std::vector<std::vector<int>> hit(s);
      std::size_t total = 0;
      for (std::size_t k = 0; k < s; ++k) {
        hit[k].assign(map->rows_on(k), 0);
        total += map->rows_on(k);
        if (map->rows_on(k) == 0) {
          why << "empty shard";
          return false;
        }
      }
      if (total != n) {
        why << "rows sum " << total << " != " << n;
        return false;
      }
      for (VertexId v = 0; v < n; ++v) {
        auto loc = map->locate(v);
        if (loc.shard >= s || loc.row >= hit[loc.shard].size() || hit[loc.shard][loc.row]++) {
          why << shard_scheme_name(scheme) << " collision at " << v;
          return false;
        }
        if (map->index_for(loc.shard).local_row(v) != static_cast<std::int64_t>(loc.row)) {
          why << "shard index disagrees for " << v;
          return false;
        }
      }
    }
    return true;
  });
  EXPECT_EQ(failure, "");
}

}  // namespace
}  // namespace gshard
