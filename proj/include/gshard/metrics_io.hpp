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

#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "gshard/fetch.hpp"
#include "gshard/train.hpp"

namespace gshard {

inline constexpr const char* kMetricsHeader =
    "iteration,epoch,trainer,loss,rows_up,rows_down,bytes_up,bytes_down,wall_ms";

void write_metrics_csv(std::ostream& out, const std::vector<IterationMetrics>& metrics);
// Throws ParseError naming the first unexpected column, or the bad line.
std::vector<IterationMetrics> read_metrics_csv(std::istream& in);
std::vector<IterationMetrics> read_metrics_csv_file(const std::filesystem::path& path);

// Metrics columns followed by the fetch-specific ones.
inline constexpr const char* kFetchHeader =
    "iteration,epoch,trainer,loss,rows_up,rows_down,bytes_up,bytes_down,wall_ms,"
    "strategy,fanout,num_trainers,requests,unique_vertices,vertices_fetched,cross_partition_visits";

void write_fetch_csv_header(std::ostream& out);
void write_fetch_csv_rows(std::ostream& out, const BenchResult& r, const FanoutSpec& fanout,
                          std::size_t num_trainers);

// "GSEM", version byte 1, u64 N, u64 d, then N*d little-endian fp32 values.
void write_embeddings(std::ostream& out, std::size_t n, std::size_t d, const std::vector<double>& rows);
void write_embeddings_file(const std::filesystem::path& path, std::size_t n, std::size_t d,
                           const std::vector<double>& rows);
struct Embeddings {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<float> rows;
};
Embeddings read_embeddings(std::istream& in);
Embeddings read_embeddings_file(const std::filesystem::path& path);

}  // namespace gshard
