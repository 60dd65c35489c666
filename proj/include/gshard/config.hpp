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
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gshard/cluster.hpp"
#include "gshard/fetch.hpp"
#include "gshard/fixtures.hpp"
#include "gshard/train.hpp"

namespace gshard {

// Flat `key = value` text, '#' comments. Later keys override earlier ones.
// Throws ParseError on lines without '='.
std::map<std::string, std::string> parse_key_values(std::istream& in);

// Everything a CLI run can be configured with.
struct RunConfig {
  TrainConfig train;

  // Input graph: a CSR cache or edge list, or a built-in fixture.
  std::string graph;
  std::string generate;
  fixtures::GenerateParams fixture;

  std::string out = "out";
  rt::Transport transport = rt::Transport::kInproc;
  std::string listen_addr = "127.0.0.1:0";
  std::vector<std::string> shard_addrs;
  std::chrono::milliseconds request_timeout{30000};
  std::chrono::milliseconds barrier_timeout{30000};

  // Fetch benchmark.
  std::vector<FanoutSpec> fanouts{FanoutSpec{{15, 10}}};
  std::vector<std::size_t> bench_trainers{1};
  std::size_t trials = 3;
  std::size_t feature_dim = 64;
  std::vector<FetchStrategy> strategies{FetchStrategy::kNaive, FetchStrategy::kPerHop,
                                        FetchStrategy::kDeduped};

  std::size_t smoothing_window = 50;

  // Applies key/value pairs, collecting every error before throwing one
  // ConfigError that lists them all.
  void apply(const std::map<std::string, std::string>& kv);
  // Resolved values of every key, one `key = value` per line.
  std::string manifest() const;
  rt::ClusterOptions cluster_options(std::size_t trainers, std::size_t shards) const;

  static const std::vector<std::string>& known_keys();
};

}  // namespace gshard
