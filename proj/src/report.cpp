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

#include "gshard/report.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <set>

namespace gshard {

namespace {

std::vector<std::uint64_t> bytes_by_iteration(const std::vector<IterationMetrics>& m) {
  std::map<std::uint64_t, std::uint64_t> acc;
  for (const auto& x : m) acc[x.iteration] += x.bytes_up + x.bytes_down;
  std::vector<std::uint64_t> out;
  for (const auto& [_, b] : acc) out.push_back(b);
  return out;
}

}  // namespace

Comparison compare_runs(const std::vector<RunSeries>& runs, std::size_t window) {
  Comparison c;
  c.window = window;
  for (const auto& r : runs) {
    RunSummary s;
    s.name = r.name;
    auto loss = mean_loss_by_iteration(r.metrics);
    auto smooth = moving_average(loss, window);
    std::set<std::uint32_t> trainers;
    for (const auto& m : r.metrics) {
      trainers.insert(m.trainer);
      s.total_bytes += m.bytes_up + m.bytes_down;
    }
    s.iterations = loss.size();
    s.trainers = trainers.size();
    if (!loss.empty()) {
      s.final_loss = loss.back();
      s.final_smoothed_loss = smooth.back();
    }
    if (!r.metrics.empty()) {
      s.mean_bytes_per_iteration = static_cast<double>(s.total_bytes) / static_cast<double>(r.metrics.size());
    }
    c.runs.push_back(s);
  }
  if (!c.runs.empty()) {
    const auto& base = c.runs.front();
    for (auto& s : c.runs) {
      s.smoothed_loss_delta = s.final_smoothed_loss - base.final_smoothed_loss;
      s.bytes_ratio = base.mean_bytes_per_iteration > 0
                          ? s.mean_bytes_per_iteration / base.mean_bytes_per_iteration
                          : (s.mean_bytes_per_iteration > 0 ? 0 : 1);
    }
  }
  return c;
}

void write_comparison_table(std::ostream& out, const Comparison& c) {
  std::size_t w = 4;
  for (const auto& r : c.runs) w = std::max(w, r.name.size());
  out << std::left << std::setw(static_cast<int>(w)) << "run" << std::right << std::setw(8) << "iters"
      << std::setw(10) << "trainers" << std::setw(14) << "final_loss" << std::setw(14) << "smoothed"
      << std::setw(14) << "delta" << std::setw(16) << "bytes/iter" << std::setw(12) << "bytes_ratio"
      << '\n';
  out << std::fixed;
  for (const auto& r : c.runs) {
    out << std::left << std::setw(static_cast<int>(w)) << r.name << std::right << std::setw(8)
        << r.iterations << std::setw(10) << r.trainers << std::setprecision(6) << std::setw(14)
        << r.final_loss << std::setw(14) << r.final_smoothed_loss << std::setw(14)
        << r.smoothed_loss_delta << std::setprecision(1) << std::setw(16)
        << r.mean_bytes_per_iteration << std::setprecision(6) << std::setw(12) << r.bytes_ratio << '\n';
  }
  out << "smoothing window: " << c.window << " iterations\n";
  out.unsetf(std::ios::floatfield);
}

void write_plot_csv(std::ostream& out, const std::vector<RunSeries>& runs, std::size_t window) {
  out.precision(17);
  out << "run,iteration,loss,smoothed_loss,cumulative_bytes\n";
  for (const auto& r : runs) {
    auto loss = mean_loss_by_iteration(r.metrics);
    auto smooth = moving_average(loss, window);
    auto bytes = bytes_by_iteration(r.metrics);
    std::uint64_t cum = 0;
    for (std::size_t i = 0; i < loss.size(); ++i) {
      cum += i < bytes.size() ? bytes[i] : 0;
      out << r.name << ',' << i << ',' << loss[i] << ',' << smooth[i] << ',' << cum << '\n';
    }
  }
}

}  // namespace gshard
