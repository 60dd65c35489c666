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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gshard/cluster.hpp"
#include "gshard/graph.hpp"
#include "gshard/loss.hpp"
#include "gshard/optim.hpp"
#include "gshard/sampling.hpp"
#include "gshard/store.hpp"

namespace gshard {

enum class Algorithm { kDeepWalk, kLine };
enum class OptimizerKind { kSgdMomentum, kAdam };
enum class TrainMode { kGraphscale, kDdp };
// Who issues the global momentum operations when several trainers share a
// model. Designated: trainer 0 once per iteration, on the mean of all
// trainers' gradients. Per-trainer: every trainer for its own batch with no
// coordination, each decaying momentum by mu^(1/T) with a step sized so a
// gradient's total contribution stays lr / (1 - mu). Together this
// approximates one trainer with a T times larger batch.
enum class UpdateMode { kDesignated, kPerTrainer };

Algorithm parse_algorithm(const std::string& s);
OptimizerKind parse_optimizer(const std::string& s);
TrainMode parse_mode(const std::string& s);
UpdateMode parse_update_mode(const std::string& s);
const char* algorithm_name(Algorithm a);
// DeepWalk sums per-pair gradients; LINE averages over edges.
GradReduction gradient_reduction(Algorithm a);
const char* optimizer_name(OptimizerKind o);
const char* mode_name(TrainMode m);
const char* update_mode_name(UpdateMode u);

struct TrainConfig {
  Algorithm algorithm = Algorithm::kDeepWalk;
  std::size_t batch_size = 512;
  std::size_t epochs = 4;
  std::size_t walk_len = 5;
  std::size_t window = 3;
  std::size_t num_neg = 5;
  std::size_t dim = 128;
  std::optional<double> lr;  // unset: 0.01 for DeepWalk, 1.0 for LINE
  double momentum = 0.9;
  OptimizerKind optimizer = OptimizerKind::kSgdMomentum;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t num_trainers = 1;
  std::size_t num_shards = 1;
  TrainMode mode = TrainMode::kGraphscale;
  UpdateMode update = UpdateMode::kDesignated;
  std::uint64_t seed = 0;
  DType dtype = DType::kF32;
  PartitionScheme partition = PartitionScheme::kRange;
  ShardScheme shard_scheme = ShardScheme::kRange;
  bool separate_context = false;
  double neg_exponent = 0.75;
  // Initial rows are uniform in [-init_scale/dim, init_scale/dim].
  double init_scale = 0.5;

  double resolved_lr() const;
  // Rows a single batch can touch: B*walk_len or B*(2+num_neg).
  std::size_t sparsity_bound() const;
  // Throws ConfigError listing every problem at once.
  void validate() const;
};

struct IterationMetrics {
  std::uint64_t iteration = 0;  // global index across epochs
  std::uint64_t epoch = 0;
  std::uint32_t trainer = 0;
  double loss = 0.0;
  std::uint64_t rows_up = 0;
  std::uint64_t rows_down = 0;
  std::uint64_t bytes_up = 0;
  std::uint64_t bytes_down = 0;
  double wall_ms = 0.0;
};

struct TrainResult {
  std::vector<IterationMetrics> metrics;  // ordered by (iteration, trainer)
  std::size_t num_nodes = 0;
  std::size_t dim = 0;
  std::vector<double> embeddings;  // num_nodes x dim
  rt::AccountingSnapshot accounting;
  // Data-parallel runs: per iteration, a hash of every replica's model.
  std::vector<std::vector<std::uint64_t>> replica_hashes;
  // Set when a trainer failed; metrics then hold what completed.
  std::string error;

  bool ok() const { return error.empty(); }
};

// The ids and training pairs of one trainer-iteration.
struct TrainBatch {
  PairBatch pairs;
  std::vector<VertexId> ids;  // distinct rows touched
};

// Deterministic per-trainer batch stream. Every trainer runs the same
// number of iterations per epoch so barrier rounds line up.
class BatchSource {
 public:
  BatchSource(const Graph& g, const TrainConfig& cfg, const NodePartition& part,
              std::uint32_t trainer);

  std::size_t iterations_per_epoch() const { return iters_; }
  TrainBatch next(std::size_t epoch, std::size_t iteration_in_epoch);

 private:
  const Graph& g_;
  const TrainConfig& cfg_;
  Rng rng_;
  std::vector<VertexId> members_;
  std::vector<VertexId> order_;
  std::vector<std::uint64_t> edge_pool_;
  AliasTable negatives_;
  std::size_t iters_ = 0;
  std::size_t shuffled_epoch_ = static_cast<std::size_t>(-1);
};

// Iterations per epoch shared by all trainers.
std::size_t iterations_per_epoch(const Graph& g, const TrainConfig& cfg, const NodePartition& part);

// Runs training on an already started cluster whose shard and trainer
// counts match the config.
TrainResult train(const Graph& g, const TrainConfig& cfg, rt::Cluster& cluster);
// Starts a cluster from `options` (counts taken from the config) and runs.
TrainResult train(const Graph& g, const TrainConfig& cfg, rt::ClusterOptions options = {});

// Averages the losses of all trainers per iteration.
std::vector<double> mean_loss_by_iteration(const std::vector<IterationMetrics>& metrics);
// Trailing moving average; the result has the input's length.
std::vector<double> moving_average(const std::vector<double>& xs, std::size_t window);

}  // namespace gshard
