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

#include "gshard/metrics_io.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

namespace gshard {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <typename T>
T cell(const std::string& s, const char* column, std::size_t line) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ParseError(std::string("bad value '") + s + "' in column " + column, line);
  }
  return v;
}

void write_row(std::ostream& out, const IterationMetrics& m) {
  out << m.iteration << ',' << m.epoch << ',' << m.trainer << ',' << m.loss << ',' << m.rows_up
      << ',' << m.rows_down << ',' << m.bytes_up << ',' << m.bytes_down << ',' << m.wall_ms;
}

}  // namespace

void write_metrics_csv(std::ostream& out, const std::vector<IterationMetrics>& metrics) {
  out.precision(17);
  out << kMetricsHeader << '\n';
  for (const auto& m : metrics) {
    write_row(out, m);
    out << '\n';
  }
}

std::vector<IterationMetrics> read_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty metrics file", 1);
  auto header = split_csv(line);
  auto expected = split_csv(kMetricsHeader);
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (i >= header.size()) throw ParseError("missing column '" + expected[i] + "'", 1);
    if (header[i] != expected[i]) {
      throw ParseError("unexpected column '" + header[i] + "' (expected '" + expected[i] + "')", 1);
    }
  }
  std::vector<IterationMetrics> out;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line == "\r") continue;
    auto c = split_csv(line);
    if (c.size() < expected.size()) throw ParseError("row has too few columns", n);
    IterationMetrics m;
    m.iteration = cell<std::uint64_t>(c[0], "iteration", n);
    m.epoch = cell<std::uint64_t>(c[1], "epoch", n);
    m.trainer = cell<std::uint32_t>(c[2], "trainer", n);
    m.loss = cell<double>(c[3], "loss", n);
    m.rows_up = cell<std::uint64_t>(c[4], "rows_up", n);
    m.rows_down = cell<std::uint64_t>(c[5], "rows_down", n);
    m.bytes_up = cell<std::uint64_t>(c[6], "bytes_up", n);
    m.bytes_down = cell<std::uint64_t>(c[7], "bytes_down", n);
    m.wall_ms = cell<double>(c[8], "wall_ms", n);
    out.push_back(m);
  }
  return out;
}

std::vector<IterationMetrics> read_metrics_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return read_metrics_csv(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.detail(), e.line());
  }
}

void write_fetch_csv_header(std::ostream& out) { out << kFetchHeader << '\n'; }

void write_fetch_csv_rows(std::ostream& out, const BenchResult& r, const FanoutSpec& fanout,
                          std::size_t num_trainers) {
  out.precision(17);
  for (const auto& rec : r.records) {
    IterationMetrics m;
    m.iteration = rec.trial;
    m.trainer = rec.trainer;
    m.rows_down = rec.report.vertices_fetched;
    m.bytes_up = rec.report.bytes_up;
    m.bytes_down = rec.report.bytes_down;
    m.wall_ms = rec.report.wall_ms;
    write_row(out, m);
    // The fanout list contains commas, so it is quoted with ';' separators.
    std::string f = fanout.to_string();
    for (char& ch : f) {
      if (ch == ',') ch = ';';
    }
    out << ',' << fetch_strategy_name(rec.report.strategy) << ',' << f << ',' << num_trainers << ','
        << rec.report.requests << ',' << rec.report.unique_vertices << ','
        << rec.report.vertices_fetched << ',' << rec.report.cross_partition_visits << '\n';
  }
}

void write_embeddings(std::ostream& out, std::size_t n, std::size_t d, const std::vector<double>& rows) {
  if (rows.size() != n * d) throw ContractError("embedding matrix has the wrong size");
  out.write("GSEM", 4);
  out.put(1);
  std::uint64_t hdr[2] = {n, d};
  out.write(reinterpret_cast<const char*>(hdr), sizeof hdr);
  std::vector<float> f(rows.begin(), rows.end());
  out.write(reinterpret_cast<const char*>(f.data()), static_cast<std::streamsize>(f.size() * sizeof(float)));
  if (!out) throw Error("failed to write embeddings");
}

void write_embeddings_file(const std::filesystem::path& path, std::size_t n, std::size_t d,
                           const std::vector<double>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_embeddings(out, n, d, rows);
}

Embeddings read_embeddings(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "GSEM", 4) != 0) throw Error("not an embeddings file");
  if (in.get() != 1) throw Error("unsupported embeddings version");
  std::uint64_t hdr[2];
  if (!in.read(reinterpret_cast<char*>(hdr), sizeof hdr)) throw Error("truncated embeddings header");
  Embeddings e{hdr[0], hdr[1], {}};
  e.rows.resize(e.n * e.d);
  if (!in.read(reinterpret_cast<char*>(e.rows.data()), static_cast<std::streamsize>(e.rows.size() * sizeof(float)))) {
    throw Error("truncated embeddings payload");
  }
  return e;
}

Embeddings read_embeddings_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_embeddings(in);
}

}  // namespace gshard
