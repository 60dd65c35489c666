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

// gshard command-line tool: graph ingestion, training, fetch benchmarks,
// reports, and standalone shard servers.
//
// Exit status: 0 on success, 1 for configuration errors, 2 for runtime errors.

#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gshard/config.hpp"
#include "gshard/fetch.hpp"
#include "gshard/fixtures.hpp"
#include "gshard/graph.hpp"
#include "gshard/metrics_io.hpp"
#include "gshard/report.hpp"
#include "gshard/train.hpp"

namespace fs = std::filesystem;
using namespace gshard;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

// Options shared by every subcommand. Values left empty fall back to the
// config file, and anything set here wins over it.
struct GlobalOptions {
  std::string config_path;
  std::string out;
  std::string transport;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;  // key=value
};

RunConfig load_config(const GlobalOptions& g, std::map<std::string, std::string> extra = {}) {
  std::map<std::string, std::string> kv;
  if (!g.config_path.empty()) {
    std::ifstream in(g.config_path);
    if (!in) throw ConfigError("cannot read config file " + g.config_path);
    try {
      kv = parse_key_values(in);
    } catch (const ParseError& e) {
      throw ConfigError(g.config_path + ":" + std::to_string(e.line()) + ": " + e.detail());
    }
  }
  for (const auto& o : g.overrides) {
    auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + o + "'");
    kv[o.substr(0, eq)] = o.substr(eq + 1);
  }
  for (auto& [k, v] : extra) kv[k] = v;
  if (!g.out.empty()) kv["out"] = g.out;
  if (!g.transport.empty()) kv["transport"] = g.transport;
  if (g.seed) kv["seed"] = std::to_string(*g.seed);
  RunConfig c;
  c.apply(kv);
  c.fixture.seed = c.train.seed;
  return c;
}

bool is_csr_cache(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  char magic[4] = {};
  in.read(magic, 4);
  return in && std::string(magic, 4) == "GSCR";
}

Graph load_graph(const RunConfig& c) {
  if (!c.graph.empty()) {
    if (!fs::exists(c.graph)) throw ConfigError("graph file not found: " + c.graph);
    if (is_csr_cache(c.graph)) return read_csr_cache_file(c.graph);
    return load_edge_list_file(c.graph, c.fixture.directed);
  }
  if (!c.generate.empty()) {
    auto p = c.fixture;
    return fixtures::generate(c.generate, p).graph();
  }
  throw ConfigError("no input graph: set 'graph' or 'generate'");
}

// 64-bit FNV-1a of the resolved configuration, printed as hex.
std::string run_id(const std::string& manifest) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : manifest) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_manifest(const RunConfig& c, const fs::path& dir) {
  const auto text = c.manifest();
  std::ofstream out(dir / "manifest.txt");
  out << "# run_id " << run_id(text) << "\n" << text;
  if (!out) throw Error("cannot write " + (dir / "manifest.txt").string());
}

fs::path prepare_out(const RunConfig& c) {
  fs::path dir(c.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

int cmd_ingest(const GlobalOptions& g, const std::string& input, const std::string& output,
               const std::string& generate, bool directed, const std::string& edges_out) {
  std::map<std::string, std::string> extra;
  if (directed) extra["directed"] = "true";
  if (!generate.empty()) extra["generate"] = generate;
  auto c = load_config(g, extra);
  if (!input.empty()) c.graph = input;
  if (c.graph.empty() && c.generate.empty()) throw ConfigError("ingest needs an edge list path or --generate");

  Graph graph;
  if (!c.graph.empty()) {
    if (!fs::exists(c.graph)) throw ConfigError("edge list not found: " + c.graph);
    graph = load_edge_list_file(c.graph, c.fixture.directed);
  } else {
    auto fx = fixtures::generate(c.generate, c.fixture);
    graph = fx.graph();
    if (!edges_out.empty()) {
      std::ofstream e(edges_out);
      fx.write_edge_list(e);
      if (!e) throw Error("cannot write " + edges_out);
    }
  }
  fs::path target = output.empty() ? prepare_out(c) / "graph.gscr" : fs::path(output);
  write_csr_cache_file(graph, target);
  std::cout << "N=" << graph.num_nodes() << " E=" << graph.num_edges() << "\n";
  return 0;
}

int cmd_train(const GlobalOptions& g, const std::string& graph_path, const std::string& generate) {
  std::map<std::string, std::string> extra;
  if (!graph_path.empty()) extra["graph"] = graph_path;
  if (!generate.empty()) extra["generate"] = generate;
  auto c = load_config(g, extra);
  const Graph graph = load_graph(c);
  const auto dir = prepare_out(c);
  write_manifest(c, dir);

  auto result = train(graph, c.train, c.cluster_options(c.train.num_trainers, c.train.num_shards));
  {
    std::ofstream m(dir / "metrics.csv");
    write_metrics_csv(m, result.metrics);
  }
  if (!result.ok()) {
    std::cerr << "training failed: " << result.error << "\n";
    return kExitRuntime;
  }
  write_embeddings_file(dir / "embeddings.gsem", result.num_nodes, result.dim, result.embeddings);
  const auto losses = moving_average(mean_loss_by_iteration(result.metrics), c.smoothing_window);
  std::cout << mode_name(c.train.mode) << " " << algorithm_name(c.train.algorithm) << ": "
            << losses.size() << " iterations, final smoothed loss "
            << (losses.empty() ? 0.0 : losses.back()) << "\n";
  return 0;
}

int cmd_bench_fetch(const GlobalOptions& g, const std::string& graph_path, const std::string& generate) {
  std::map<std::string, std::string> extra;
  if (!graph_path.empty()) extra["graph"] = graph_path;
  if (!generate.empty()) extra["generate"] = generate;
  auto c = load_config(g, extra);
  const Graph graph = load_graph(c);
  const auto dir = prepare_out(c);
  write_manifest(c, dir);

  std::ofstream csv(dir / "fetch.csv");
  write_fetch_csv_header(csv);
  std::ostringstream summary;
  bool bounded = true;
  for (const auto& fanout : c.fanouts) {
    for (auto trainers : c.bench_trainers) {
      auto cluster = rt::start_cluster(c.cluster_options(trainers, c.train.num_shards));
      auto store = load_feature_store(cluster->driver(), graph, c.train.shard_scheme, c.train.num_shards,
                                      c.feature_dim, c.train.seed, c.train.dtype);
      cluster->reset_accounting();
      BenchConfig b;
      b.fanout = fanout;
      b.batch_size = c.train.batch_size;
      b.trials = c.trials;
      b.seed = c.train.seed;
      b.partition = c.train.partition;
      b.strategies = c.strategies;
      auto r = bench_fetch(graph, store, *cluster, b);
      write_fetch_csv_rows(csv, r, fanout, trainers);

      summary << "fanout " << fanout.to_string() << ", " << trainers << " trainer(s), duplicate ratio "
              << r.duplicate_ratio << ", features identical " << (r.features_identical ? "yes" : "no") << "\n";
      for (const auto& s : r.summary) {
        summary << "  " << fetch_strategy_name(s.strategy) << ": mean requests " << s.mean_requests
                << ", max requests " << s.max_requests << ", mean rows fetched " << s.mean_vertices_fetched
                << ", mean bytes " << s.mean_bytes << ", rows/s " << s.throughput << "\n";
        if (s.strategy == FetchStrategy::kDeduped) {
          const bool ok = s.max_requests <= c.train.num_shards;
          bounded = bounded && ok;
          summary << "  deduped_requests <= num_shards (" << c.train.num_shards << "): " << (ok ? "yes" : "no")
                  << "\n";
        }
      }
      bounded = bounded && r.features_identical;
    }
  }
  if (!csv) throw Error("cannot write " + (dir / "fetch.csv").string());
  std::ofstream(dir / "summary.txt") << summary.str();
  std::cout << summary.str();
  return bounded ? 0 : kExitRuntime;
}

std::string series_name(const fs::path& p) {
  if (p.filename() == "metrics.csv" && p.has_parent_path()) return p.parent_path().filename().string();
  return p.stem().string();
}

int cmd_report(const GlobalOptions& g, const std::vector<std::string>& inputs, const std::string& plot,
               std::optional<std::size_t> window) {
  auto c = load_config(g);
  std::vector<RunSeries> runs;
  for (const auto& path : inputs) {
    runs.push_back({series_name(path), read_metrics_csv_file(path)});
  }
  const std::size_t w = window.value_or(c.smoothing_window);
  write_comparison_table(std::cout, compare_runs(runs, w));
  if (!plot.empty()) {
    std::ofstream out(plot);
    write_plot_csv(out, runs, w);
    if (!out) throw Error("cannot write " + plot);
  }
  return 0;
}

int cmd_serve_shard(const std::string& listen) {
  rt::serve_shard(listen, [](std::uint16_t port) { std::cout << "listening on port " << port << std::endl; });
  return 0;
}

int cmd_stop_shard(const std::string& addr) {
  auto [host, port] = rt::parse_address(addr);
  rt::TcpConnection link(host, port, std::make_shared<rt::EndpointCounters>());
  link.call(rt::Frame{rt::Opcode::kShutdown, 0, {}}).get();
  return 0;
}

void init_logging() {
  spdlog::set_level(spdlog::level::warn);
  if (const char* lvl = std::getenv("GS_LOG")) spdlog::set_level(spdlog::level::from_str(lvl));
}

}  // namespace

int main(int argc, char** argv) {
  init_logging();
  CLI::App app{"Sharded graph embedding training and feature-fetch benchmarks"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--config", g.config_path, "key = value config file");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--seed", g.seed, "random seed");
  app.add_option("--transport", g.transport, "inproc or tcp")->check(CLI::IsMember({"inproc", "tcp"}));
  app.add_option("--set", g.overrides, "override a config key (key=value), repeatable");

  std::string input, output, generate, edges_out, graph_path, plot, listen = "127.0.0.1:0", addr;
  bool directed = false;
  std::vector<std::string> csvs;
  std::optional<std::size_t> window;

  auto* ingest = app.add_subcommand("ingest", "convert an edge list or generated fixture to a CSR cache");
  ingest->add_option("input", input, "edge list file");
  ingest->add_option("-o,--output", output, "cache path (default <out>/graph.gscr)");
  ingest->add_option("--generate", generate, "fixture: path|star|cycle|sbm|power_law|regular");
  ingest->add_flag("--directed", directed, "keep edges one-way");
  ingest->add_option("--edges-out", edges_out, "also write the generated edge list here");

  auto* train_cmd = app.add_subcommand("train", "train embeddings; writes metrics.csv, embeddings.gsem, manifest.txt");
  train_cmd->add_option("--graph", graph_path, "CSR cache or edge list");
  train_cmd->add_option("--generate", generate, "train on a generated fixture");

  auto* bench = app.add_subcommand("bench-fetch", "benchmark naive, per-hop and deduplicated feature fetching");
  bench->add_option("--graph", graph_path, "CSR cache or edge list");
  bench->add_option("--generate", generate, "benchmark on a generated fixture");

  auto* report = app.add_subcommand("report", "compare metrics CSVs");
  report->add_option("csv", csvs, "metrics files")->required();
  report->add_option("--plot", plot, "write plot data CSV here");
  report->add_option("--window", window, "smoothing window in iterations");

  auto* serve = app.add_subcommand("serve-shard", "run one storage shard over TCP until stopped");
  serve->add_option("--listen", listen, "host:port (port 0 picks one)");

  auto* stop = app.add_subcommand("stop-shard", "ask a running shard server to exit");
  stop->add_option("addr", addr, "host:port")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*ingest) return cmd_ingest(g, input, output, generate, directed, edges_out);
    if (*train_cmd) return cmd_train(g, graph_path, generate);
    if (*bench) return cmd_bench_fetch(g, graph_path, generate);
    if (*report) return cmd_report(g, csvs, plot, window);
    if (*serve) return cmd_serve_shard(listen);
    if (*stop) return cmd_stop_shard(addr);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}
