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

#include <cmath>

#include "gshard/cluster.hpp"
#include "gshard/fixtures.hpp"
#include "gshard/loss.hpp"
#include "gshard/optim.hpp"
#include "oracles.hpp"

namespace gshard {
namespace {

using testing::Gen;

TEST(Sigmoid, ValuesAndStability) {
  EXPECT_EQ(sigmoid(0.0), 0.5);
  for (double x : {-30.0, -2.5, 0.1, 7.0, 400.0}) EXPECT_NEAR(sigmoid(x), 1.0 - sigmoid(-x), 1e-15);
  EXPECT_EQ(sigmoid(-1000.0), 0.0);
  EXPECT_EQ(sigmoid(1000.0), 1.0);
  EXPECT_TRUE(std::isfinite(log_sigmoid(-1000.0)));
  EXPECT_NEAR(log_sigmoid(-1000.0), -1000.0, 1e-9);
  EXPECT_NEAR(log_sigmoid(0.0), -std::log(2.0), 1e-15);
}

TEST(SkipgramLoss, ZeroDotExamples) {
  std::vector<double> u{1.0, 0.0}, v{0.0, 2.0};
  auto t = skipgram_loss_grad(u, v, std::vector<double>{});
  EXPECT_NEAR(t.loss, std::log(2.0), 1e-15);
  EXPECT_NEAR(t.g_center[0], -0.5 * v[0], 1e-15);
  EXPECT_NEAR(t.g_center[1], -0.5 * v[1], 1e-15);
  std::vector<double> w{0.0, -3.0};
  auto t2 = skipgram_loss_grad(u, v, w);
  EXPECT_NEAR(t2.loss, 2 * std::log(2.0), 1e-15);
}

TEST(SkipgramLoss, FiniteDifferenceAtRandomPoints) {
  auto failure = testing::for_all(100, 1, [](Gen& g, std::ostream& why) {
    const std::size_t d = g.size(1, 8), k = g.size(0, 5);
    auto x = g.reals(d * (2 + k), -1.5, 1.5);
    auto split = [&](const std::vector<double>& p) {
      std::span<const double> s(p);
      return std::make_tuple(s.subspan(0, d), s.subspan(d, d), s.subspan(2 * d));
    };
    auto f = [&](const std::vector<double>& p) {
      auto [u, v, w] = split(p);
      return skipgram_loss_grad(u, v, w).loss;
    };
    auto [u, v, w] = split(x);
    auto t = skipgram_loss_grad(u, v, w);
    std::vector<double> analytic = t.g_center;
    analytic.insert(analytic.end(), t.g_context.begin(), t.g_context.end());
    analytic.insert(analytic.end(), t.g_negs.begin(), t.g_negs.end());
    auto numeric = testing::numeric_gradient(f, x);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (std::abs(analytic[i] - numeric[i]) > 1e-6 * std::max(1.0, std::abs(numeric[i]))) {
        why << "component " << i << ": " << analytic[i] << " vs " << numeric[i];
        return false;
      }
    }
    return true;
  });
  EXPECT_EQ(failure, "");
}

PairBatch random_pairs(Gen& g, std::size_t n, std::size_t pairs, std::size_t num_neg) {
  PairBatch pb;
  pb.num_neg = num_neg;
  for (std::size_t p = 0; p < pairs; ++p) {
    pb.centers.push_back(g.u64(0, n - 1));
    pb.contexts.push_back(g.u64(0, n - 1));
    for (std::size_t k = 0; k < num_neg; ++k) pb.negatives.push_back(g.u64(0, n - 1));
  }
  return pb;
}

RowBlock block_of(const std::vector<double>& dense, std::size_t d, const std::vector<VertexId>& ids) {
  RowBlock b(ids, d);
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (std::size_t j = 0; j < d; ++j) b.rows[i * d + j] = dense[ids[i] * d + j];
  return b;
}

TEST(BatchGrad, ZeroEmbeddingsGiveLn2PerTerm) {
  Gen g(2);
  auto pb = random_pairs(g, 20, 7, 1);
  auto ids = pb.unique_ids();
  RowBlock emb(ids, 4);
  EXPECT_NEAR(deepwalk_batch_grad(emb, pb).loss, 2 * std::log(2.0), 1e-15);
  auto five = random_pairs(g, 20, 3, 5);
  RowBlock emb5(five.unique_ids(), 4);
  EXPECT_NEAR(skipgram_batch_grad(emb5, five).loss, 6 * std::log(2.0), 1e-15);
}

TEST(BatchGrad, SinglePairIsSparse) {
  PairBatch pb;
  pb.num_neg = 1;
  pb.centers = {3};
  pb.contexts = {5};
  pb.negatives = {9};
  Gen g(3);
  std::vector<VertexId> ids{3, 5, 9, 11};
  RowBlock emb(ids, 3);
  emb.rows = g.reals(12, -1, 1);
  auto bg = deepwalk_batch_grad(emb, pb);
  ASSERT_EQ(bg.grad.ids, ids);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(bg.grad.rows[9 + j], 0.0);
  EXPECT_NE(bg.grad.rows[0], 0.0);
}

TEST(BatchGrad, MissingIdIsContractError) {
  PairBatch pb;
  pb.num_neg = 0;
  pb.centers = {0};
  pb.contexts = {1};
  RowBlock emb({0}, 2);
  EXPECT_THROW(deepwalk_batch_grad(emb, pb), ContractError);
}

TEST(BatchGrad, MatchesDenseOracleOn20Nodes) {
  auto graph = fixtures::sbm(20, 2, 0.5, 0.1, 1).graph();
  auto failure = testing::for_all(20, 4, [&](Gen& g, std::ostream& why) {
    const std::size_t d = 5;
    auto dense = g.reals(20 * d, -0.5, 0.5);
    auto ctx_dense = g.reals(20 * d, -0.5, 0.5);
    Rng rng(g.u64(0, 1000));
    // DeepWalk: B=4 walks; LINE: 4 edges with 5 negatives.
    std::vector<VertexId> src = g.distinct(4, 20);
    auto dw = deepwalk_pairs(graph, walk_batch(graph, src, 5, rng), 3, 5, rng);
    auto line = line_batch(graph, 4, 5, build_negative_table(graph), rng).as_pairs();
    for (const PairBatch* pb : {&dw, &line}) {
      for (bool separate : {false, true}) {
        auto ids = pb->unique_ids();
        auto emb = block_of(dense, d, ids);
        auto ctx = block_of(ctx_dense, d, ids);
        auto bg = skipgram_batch_grad(emb, *pb, separate ? &ctx : nullptr);
        auto summed = skipgram_batch_grad(emb, *pb, separate ? &ctx : nullptr, GradReduction::kSum);
        for (std::size_t i = 0; i < bg.grad.rows.size(); ++i) {
          if (std::abs(summed.grad.rows[i] - bg.grad.rows[i] * static_cast<double>(pb->size())) > 1e-10) {
            why << "sum reduction is not pairs x mean";
            return false;
          }
        }
        auto oracle = testing::dense_sgns_grad(dense, separate ? &ctx_dense : nullptr, d, *pb);
        const double loss = testing::dense_sgns_loss(dense, separate ? &ctx_dense : nullptr, d, *pb);
        if (std::abs(bg.loss - loss) > 1e-12) {
          why << "loss " << bg.loss << " vs " << loss;
          return false;
        }
        std::vector<double> got(20 * d, 0.0), got_ctx(20 * d, 0.0);
        for (std::size_t i = 0; i < bg.grad.size(); ++i)
          for (std::size_t j = 0; j < d; ++j) got[bg.grad.ids[i] * d + j] = bg.grad.rows[i * d + j];
        if (testing::max_abs_diff(got, oracle.in) > 1e-10) {
          why << "input gradient differs (separate=" << separate << ")";
          return false;
        }
        if (separate) {
          for (std::size_t i = 0; i < bg.context_grad.size(); ++i)
            for (std::size_t j = 0; j < d; ++j)
              got_ctx[bg.context_grad.ids[i] * d + j] = bg.context_grad.rows[i * d + j];
          if (testing::max_abs_diff(got_ctx, oracle.out) > 1e-10) {
            why << "context gradient differs";
            return false;
          }
        }
      }
    }
    return true;
  });
  EXPECT_EQ(failure, "");
}

TEST(BatchGrad, MeanLossFiniteDifferenceThroughRowBlock) {
  Gen g(6);
  auto pb = random_pairs(g, 12, 6, 3);
  auto ids = pb.unique_ids();
  auto f = [&](const std::vector<double>& rows) {
    RowBlock emb(ids, 3);
    emb.rows = rows;
    return skipgram_batch_grad(emb, pb).loss;
  };
  auto x = g.reals(ids.size() * 3, -1, 1);
  RowBlock emb(ids, 3);
  emb.rows = x;
  auto analytic = skipgram_batch_grad(emb, pb).grad.rows;
  auto numeric = testing::numeric_gradient(f, x);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_LE(testing::rel_error(analytic[i], numeric[i]), 1e-6);
}

class OptimTest : public ::testing::Test {
 protected:
  void SetUp() override {
    rt::ClusterOptions o;
    o.num_shards = 2;
    cluster_ = rt::start_cluster(o);
  }
  rt::Session& s() { return cluster_->driver(); }
  MatrixStore store(const std::string& name, std::size_t n, std::size_t d, double fill = 0.0) {
    return MatrixStore::create(s(), name, d, ShardMap::range(n, 2),
                               rt::InitSpec::constant(fill), 0, DType::kF64);
  }
  std::unique_ptr<rt::Cluster> cluster_;
};

TEST_F(OptimTest, MomentumSingleCellArithmetic) {
  auto model = store("model", 2, 1, 1.0);
  auto mom = store("mom", 2, 1);
  RowBlock g({0}, 1);
  g.rows = {0.5};
  sgd_momentum_step(s(), model, mom, g, 0.1, 0.9);
  EXPECT_NEAR(mom.get(s(), std::vector<VertexId>{0}).rows[0], 0.5, 1e-15);
  EXPECT_NEAR(model.get(s(), std::vector<VertexId>{0}).rows[0], 0.95, 1e-15);
  sgd_momentum_step(s(), model, mom, g, 0.1, 0.9);
  EXPECT_NEAR(mom.get(s(), std::vector<VertexId>{0}).rows[0], 0.95, 1e-15);
  EXPECT_NEAR(model.get(s(), std::vector<VertexId>{0}).rows[0], 0.855, 1e-15);
}

TEST_F(OptimTest, UntouchedRowDecaysGlobally) {
  auto model = store("model2", 2, 1, 0.0);
  auto mom = store("mom2", 2, 1, 1.0);
  RowBlock g({0}, 1);
  g.rows = {0.0};
  sgd_momentum_step(s(), model, mom, g, 0.1, 0.9);
  EXPECT_NEAR(mom.get(s(), std::vector<VertexId>{1}).rows[0], 0.9, 1e-15);
  EXPECT_NEAR(model.get(s(), std::vector<VertexId>{1}).rows[0], -0.09, 1e-15);
}

TEST_F(OptimTest, MomentumStepMovesNoRowDataForGlobalOps) {
  auto model = store("m3", 500, 8);
  auto mom = store("mo3", 500, 8);
  RowBlock g({4, 7}, 8);
  cluster_->reset_accounting();
  sgd_momentum_step(s(), model, mom, g, 0.1, 0.9);
  auto& d = cluster_->accounting().at("driver", 0);
  // Only the add carries data: two rows and their ids.
  EXPECT_EQ(d.data_sent, 2 * 8 * 8 + 2 * 8u);
  EXPECT_EQ(d.data_received, 0u);
}

TEST_F(OptimTest, MismatchedStoresRejected) {
  auto model = store("m4", 4, 2);
  auto mom = store("mo4", 4, 3);
  RowBlock g({0}, 2);
  EXPECT_THROW(sgd_momentum_step(s(), model, mom, g, 0.1, 0.9), ContractError);
}

TEST_F(OptimTest, AdamFirstStepAndSparsity) {
  auto model = store("am", 3, 1);
  auto m = store("am_m", 3, 1);
  auto v = store("am_v", 3, 1);
  auto steps = store("am_t", 3, 1);
  RowBlock g({1}, 1);
  g.rows = {1.0};
  adam_step(s(), model, m, v, steps, g, AdamParams{});
  auto after = model.export_dense(s());
  EXPECT_NEAR(after[1], -0.001, 1e-10);
  EXPECT_EQ(after[0], 0.0);
  EXPECT_EQ(after[2], 0.0);
  EXPECT_EQ(steps.export_dense(s()), (std::vector<double>{0, 1, 0}));
}

TEST_F(OptimTest, AdamFiftyStepsMatchScalarReference) {
  auto model = store("a50", 2, 1);
  auto m = store("a50_m", 2, 1);
  auto v = store("a50_v", 2, 1);
  auto steps = store("a50_t", 2, 1);
  AdamParams p{0.01, 0.9, 0.999, 1e-8};
  testing::ScalarAdam ref{p.lr, p.beta1, p.beta2, p.eps};
  Gen g(9);
  for (int i = 0; i < 50; ++i) {
    RowBlock grad({0}, 1);
    grad.rows = {g.real(-2, 2)};
    adam_step(s(), model, m, v, steps, grad, p);
    ref.step(grad.rows[0]);
  }
  EXPECT_NEAR(model.get(s(), std::vector<VertexId>{0}).rows[0], ref.x, 1e-8);
  EXPECT_EQ(model.get(s(), std::vector<VertexId>{1}).rows[0], 0.0);
}

TEST(AdamRow, PerRowStepCountsCorrectIndependently) {
  // A row seeing its first update late is corrected as a first step.
  std::vector<double> x{0.0}, m{0.0}, v{0.0};
  std::vector<double> g{2.0};
  adam_update_row(x, m, v, g, 1, AdamParams{});
  EXPECT_NEAR(x[0], -0.001, 1e-10);
}

}  // namespace
}  // namespace gshard
