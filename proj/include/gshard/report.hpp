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
#include <ostream>
#include <string>
#include <vector>

#include "gshard/train.hpp"

namespace gshard {

struct RunSeries {
  std::string name;
  std::vector<IterationMetrics> metrics;
};

struct RunSummary {
  std::string name;
  std::size_t iterations = 0;
  std::size_t trainers = 0;
  double final_loss = 0;           // mean over trainers, last iteration
  double final_smoothed_loss = 0;  // moving average at the last iteration
  double mean_bytes_per_iteration = 0;  // per trainer, up + down
  std::uint64_t total_bytes = 0;
  // Relative to the first run.
  double smoothed_loss_delta = 0;
  double bytes_ratio = 1;
};

struct Comparison {
  std::vector<RunSummary> runs;
  std::size_t window = 50;
};

Comparison compare_runs(const std::vector<RunSeries>& runs, std::size_t window);
void write_comparison_table(std::ostream& out, const Comparison& c);
// run,iteration,loss,smoothed_loss,cumulative_bytes
void write_plot_csv(std::ostream& out, const std::vector<RunSeries>& runs, std::size_t window);

}  // namespace gshard
