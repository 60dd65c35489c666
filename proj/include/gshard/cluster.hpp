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
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gshard/transport.hpp"

namespace gshard::rt {

enum class Transport { kInproc, kTcp };
Transport parse_transport(const std::string& s);
const char* transport_name(Transport t);

struct ClusterOptions {
  std::size_t num_shards = 1;
  std::size_t num_trainers = 1;
  Transport transport = Transport::kInproc;
  // TCP: where local actors listen. Port 0 picks ephemeral ports; otherwise
  // shards take port, port+1, ..., then the coordinator and the reducer.
  std::string listen_addr = "127.0.0.1:0";
  // TCP: connect to externally started shard servers instead of spawning.
  std::vector<std::string> shard_addrs;
  std::chrono::milliseconds request_timeout{30000};
  std::chrono::milliseconds barrier_timeout{30000};
  // Per-shard processing delay for fault-injection tests.
  std::vector<std::chrono::milliseconds> shard_delays;
};

// A trainer's (or the driver's) links to every shard, the barrier
// coordinator, and the allreduce root. All links share one counter set.
class Session {
 public:
  Session(std::uint32_t id, std::vector<std::unique_ptr<Connection>> shards,
          std::unique_ptr<Connection> coordinator, std::unique_ptr<Connection> reducer,
          std::shared_ptr<EndpointCounters> counters, std::chrono::milliseconds timeout);

  std::uint32_t id() const { return id_; }
  std::size_t num_shards() const { return shards_.size(); }
  Connection& shard(std::size_t s) { return *shards_.at(s); }
  Connection& coordinator() { return *coordinator_; }
  Connection& reducer() { return *reducer_; }
  EndpointCounters& counters() { return *counters_; }
  std::chrono::milliseconds timeout() const { return timeout_; }

  // Sends and waits, throwing on transport failure, timeout, or error status.
  Frame call(Connection& link, Opcode op, std::vector<std::uint8_t> payload);

 private:
  std::uint32_t id_;
  std::vector<std::unique_ptr<Connection>> shards_;
  std::unique_ptr<Connection> coordinator_;
  std::unique_ptr<Connection> reducer_;
  std::shared_ptr<EndpointCounters> counters_;
  std::chrono::milliseconds timeout_;
};

struct EndpointStats {
  std::string role;  // storage_shard | trainer | coordinator | reducer | driver
  std::uint32_t id = 0;
  std::uint64_t frames_sent = 0;
  std::uint64_t frames_received = 0;
  std::uint64_t bytes_sent = 0;
  std::uint64_t bytes_received = 0;
  std::uint64_t data_sent = 0;
  std::uint64_t data_received = 0;

  bool operator==(const EndpointStats&) const = default;
};

struct AccountingSnapshot {
  std::vector<EndpointStats> endpoints;

  const EndpointStats& at(const std::string& role, std::uint32_t id) const;
  bool operator==(const AccountingSnapshot&) const = default;
};

class CoordinatorHost;
class ReducerHost;

class Cluster {
 public:
  explicit Cluster(ClusterOptions options);
  ~Cluster();
  Cluster(const Cluster&) = delete;
  Cluster& operator=(const Cluster&) = delete;

  // Throws Error on a second start and TransportError if a port is taken.
  void start();
  void stop();
  bool running() const { return running_; }

  Session& trainer(std::size_t i) { return *trainers_.at(i); }
  // Endpoint of the hosting process, used for setup and export.
  Session& driver() { return *driver_; }
  const ClusterOptions& options() const { return options_; }

  AccountingSnapshot accounting() const;
  void reset_accounting();

  // Barrier iterations must grow for the coordinator's whole lifetime, so
  // consecutive runs on one cluster continue from here.
  std::uint64_t barrier_base() const { return barrier_base_; }
  void advance_barrier_base(std::uint64_t rounds) { barrier_base_ += rounds; }

  // TCP listen ports of local shards, coordinator, reducer.
  std::vector<std::uint16_t> shard_ports() const;
  std::uint16_t coordinator_port() const;
  std::uint16_t reducer_port() const;

 private:
  std::unique_ptr<Session> make_session(std::uint32_t id);

  ClusterOptions options_;
  bool running_ = false;
  bool started_once_ = false;
  std::uint64_t barrier_base_ = 1;
  std::vector<std::unique_ptr<ShardHost>> shards_;
  std::unique_ptr<CoordinatorHost> coordinator_;
  std::unique_ptr<ReducerHost> reducer_;
  std::vector<std::unique_ptr<TcpServer>> shard_servers_;
  std::unique_ptr<TcpServer> coordinator_server_;
  std::unique_ptr<TcpServer> reducer_server_;
  std::vector<std::pair<std::string, std::uint16_t>> shard_endpoints_;
  std::shared_ptr<EndpointCounters> coordinator_links_;
  std::vector<std::shared_ptr<EndpointCounters>> trainer_counters_;
  std::shared_ptr<EndpointCounters> driver_counters_;
  std::vector<std::unique_ptr<Session>> trainers_;
  std::unique_ptr<Session> driver_;
};

std::unique_ptr<Cluster> start_cluster(ClusterOptions options);

// Runs one storage shard behind a TCP listener until it receives SHUTDOWN.
// `on_ready` receives the bound port once the listener accepts connections.
void serve_shard(const std::string& listen_addr,
                 const std::function<void(std::uint16_t)>& on_ready = {});

}  // namespace gshard::rt
