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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "gshard/config.hpp"
#include "gshard/fetch.hpp"
#include "gshard/fixtures.hpp"
#include "gshard/graph.hpp"
#include "gshard/metrics_io.hpp"
#include "gshard/train.hpp"

namespace py = pybind11;
using namespace gshard;

namespace {

using Options = std::map<std::string, std::string>;

RunConfig make_config(const Options& options) {
  RunConfig c;
  c.apply(options);
  return c;
}

py::array_t<double> as_matrix(const std::vector<double>& values, std::size_t rows, std::size_t cols) {
  py::array_t<double> a({rows, cols});
  std::copy(values.begin(), values.end(), a.mutable_data());
  return a;
}

py::dict metrics_columns(const std::vector<IterationMetrics>& ms) {
  const auto n = static_cast<py::ssize_t>(ms.size());
  py::array_t<std::uint64_t> iteration(n), epoch(n), rows_up(n), rows_down(n), bytes_up(n), bytes_down(n);
  py::array_t<std::uint32_t> trainer(n);
  py::array_t<double> loss(n), wall_ms(n);
  for (py::ssize_t i = 0; i < n; ++i) {
    const auto& m = ms[static_cast<std::size_t>(i)];
    iteration.mutable_at(i) = m.iteration;
    epoch.mutable_at(i) = m.epoch;
    trainer.mutable_at(i) = m.trainer;
    loss.mutable_at(i) = m.loss;
    rows_up.mutable_at(i) = m.rows_up;
    rows_down.mutable_at(i) = m.rows_down;
    bytes_up.mutable_at(i) = m.bytes_up;
    bytes_down.mutable_at(i) = m.bytes_down;
    wall_ms.mutable_at(i) = m.wall_ms;
  }
  py::dict d;
  d["iteration"] = iteration;
  d["epoch"] = epoch;
  d["trainer"] = trainer;
  d["loss"] = loss;
  d["rows_up"] = rows_up;
  d["rows_down"] = rows_down;
  d["bytes_up"] = bytes_up;
  d["bytes_down"] = bytes_down;
  d["wall_ms"] = wall_ms;
  return d;
}

py::list accounting_list(const rt::AccountingSnapshot& snap) {
  py::list out;
  for (const auto& e : snap.endpoints) {
    py::dict d;
    d["role"] = e.role;
    d["id"] = e.id;
    d["frames_sent"] = e.frames_sent;
    d["frames_received"] = e.frames_received;
    d["bytes_sent"] = e.bytes_sent;
    d["bytes_received"] = e.bytes_received;
    d["data_sent"] = e.data_sent;
    d["data_received"] = e.data_received;
    out.append(d);
  }
  return out;
}

py::dict run_training(const Graph& g, const Options& options) {
  const auto c = make_config(options);
  TrainResult r;
  {
    py::gil_scoped_release release;
    r = train(g, c.train, c.cluster_options(c.train.num_trainers, c.train.num_shards));
  }
  py::dict d;
  d["metrics"] = metrics_columns(r.metrics);
  d["embeddings"] = as_matrix(r.embeddings, r.num_nodes, r.dim);
  d["accounting"] = accounting_list(r.accounting);
  d["error"] = r.error;
  d["manifest"] = c.manifest();
  return d;
}

py::list run_bench(const Graph& g, const Options& options) {
  const auto c = make_config(options);
  py::list out;
  for (const auto& fanout : c.fanouts) {
    for (auto trainers : c.bench_trainers) {
      BenchResult r;
      {
        py::gil_scoped_release release;
        auto cluster = rt::start_cluster(c.cluster_options(trainers, c.train.num_shards));
        auto store = load_feature_store(cluster->driver(), g, c.train.shard_scheme, c.train.num_shards,
                                        c.feature_dim, c.train.seed, c.train.dtype);
        cluster->reset_accounting();
        BenchConfig b;
        b.fanout = fanout;
        b.batch_size = c.train.batch_size;
        b.trials = c.trials;
        b.seed = c.train.seed;
        b.partition = c.train.partition;
        b.strategies = c.strategies;
        r = bench_fetch(g, store, *cluster, b);
      }
      py::dict run;
      run["fanout"] = fanout.fanouts;
      run["num_trainers"] = trainers;
      run["duplicate_ratio"] = r.duplicate_ratio;
      run["features_identical"] = r.features_identical;
      py::dict strategies;
      for (const auto& s : r.summary) {
        py::dict sd;
        sd["mean_requests"] = s.mean_requests;
        sd["max_requests"] = s.max_requests;
        sd["mean_vertices_fetched"] = s.mean_vertices_fetched;
        sd["mean_bytes"] = s.mean_bytes;
        sd["throughput"] = s.throughput;
        strategies[fetch_strategy_name(s.strategy)] = sd;
      }
      run["strategies"] = strategies;
      out.append(run);
    }
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sharded graph embedding training and feature-fetch benchmarks";

  auto base = py::register_exception<Error>(m, "GshardError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", base.ptr());

  py::class_<Graph>(m, "Graph")
      .def_property_readonly("num_nodes", &Graph::num_nodes)
      .def_property_readonly("num_edges", &Graph::num_edges)
      .def_property_readonly("directed", &Graph::directed)
      .def("out_degree", &Graph::out_degree, py::arg("v"))
      .def("neighbors", [](const Graph& g, VertexId v) {
        if (v >= g.num_nodes()) throw py::index_error("vertex out of range");
        auto n = g.neighbors(v);
        return std::vector<VertexId>(n.begin(), n.end());
      }, py::arg("v"))
      .def("__eq__", [](const Graph& a, const Graph& b) { return a == b; })
      .def("__repr__", [](const Graph& g) {
        return "<Graph N=" + std::to_string(g.num_nodes()) + " E=" + std::to_string(g.num_edges()) + ">";
      });

  m.def("load_edge_list", &load_edge_list_file, py::arg("path"), py::arg("directed") = false);
  m.def("read_csr_cache", &read_csr_cache_file, py::arg("path"));
  m.def("write_csr_cache", &write_csr_cache_file, py::arg("graph"), py::arg("path"));

  m.def("generate", [](const std::string& name, std::size_t nodes, std::size_t blocks, double p_in, double p_out,
                       std::size_t attach, std::size_t degree, bool directed, std::uint64_t seed) {
    fixtures::GenerateParams p{nodes, blocks, p_in, p_out, attach, degree, directed, seed};
    auto f = fixtures::generate(name, p);
    return py::make_tuple(f.graph(), f.labels);
  }, py::arg("name"), py::arg("nodes") = 200, py::arg("blocks") = 2, py::arg("p_in") = 0.3,
     py::arg("p_out") = 0.02, py::arg("attach") = 5, py::arg("degree") = 10, py::arg("directed") = false,
     py::arg("seed") = 0);

  m.def("train", &run_training, py::arg("graph"), py::arg("options"));
  m.def("bench_fetch", &run_bench, py::arg("graph"), py::arg("options"));
  m.def("known_keys", &RunConfig::known_keys);

  m.def("read_embeddings", [](const std::filesystem::path& path) {
    auto e = read_embeddings_file(path);
    py::array_t<float> a({e.n, e.d});
    std::copy(e.rows.begin(), e.rows.end(), a.mutable_data());
    return a;
  }, py::arg("path"));
  m.def("write_embeddings", [](const std::filesystem::path& path, py::array_t<double, py::array::c_style | py::array::forcecast> a) {
    if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
    std::vector<double> rows(a.data(), a.data() + a.size());
    write_embeddings_file(path, static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)), rows);
  }, py::arg("path"), py::arg("rows"));
}
