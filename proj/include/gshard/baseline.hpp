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
#include <vector>

#include "gshard/cluster.hpp"
#include "gshard/loss.hpp"
#include "gshard/optim.hpp"
#include "gshard/protocol.hpp"
#include "gshard/train.hpp"

namespace gshard {

// A full in-memory model as held by every data-parallel replica.
struct DenseModel {
  std::size_t num_nodes = 0;
  std::size_t dim = 0;
  std::vector<double> matrix;
  std::vector<double> momentum;
  std::vector<double> adam_m;
  std::vector<double> adam_v;
  std::uint64_t adam_t = 0;

  DenseModel() = default;
  DenseModel(std::size_t n, std::size_t d);
  // Rows filled exactly as a store created with the same init and seed.
  static DenseModel initialized(std::size_t n, std::size_t d, const rt::InitSpec& init,
                                std::uint64_t seed);
  RowBlock gather(std::span<const VertexId> ids) const;
};

// momentum = mu * momentum + grad; matrix -= lr * momentum, over all rows.
void dense_reference_sgd_momentum(DenseModel& model, std::span<const double> grad, double lr,
                                  double mu);
// Standard Adam with one global step counter.
void dense_adam_step(DenseModel& model, std::span<const double> grad, const AdamParams& p);

// Elementwise mean of equally shaped matrices, summed in input order.
std::vector<double> allreduce_mean(const std::vector<std::vector<double>>& grads);
// Same, through the cluster's allreduce root. Every participant calls with
// the same round; values travel in `dtype`.
std::vector<double> allreduce_mean(rt::Session& s, std::uint64_t round, std::uint32_t participants,
                                   std::span<const double> grad, DType dtype);

// dense[id * dim + j] += grad rows.
void scatter_add(const SparseGradient& grad, std::span<double> dense);

std::uint64_t hash_values(std::span<const double> values);

// Synchronous data-parallel training: every trainer keeps a dense replica,
// averages dense gradients each iteration, and applies the same update.
TrainResult ddp_train(const Graph& g, const TrainConfig& cfg, rt::Cluster& cluster);

// Single-process dense trainer consuming exactly the batches trainer 0 of a
// one-trainer run would draw. Oracle for sharded training.
TrainResult dense_reference_train(const Graph& g, const TrainConfig& cfg);

}  // namespace gshard
