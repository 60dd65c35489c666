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

#include "gshard/cluster.hpp"

#include <spdlog/spdlog.h>

namespace gshard::rt {

Transport parse_transport(const std::string& s) {
  if (s == "inproc") return Transport::kInproc;
  if (s == "tcp") return Transport::kTcp;
  throw ConfigError("unknown transport '" + s + "' (expected inproc|tcp)");
}

const char* transport_name(Transport t) { return t == Transport::kInproc ? "inproc" : "tcp"; }

// Hosts a CoordinatorCore: tracks reply ports of waiting trainers and turns
// flush markers into shard requests whose replies come back through the
// mailbox.
class CoordinatorHost : public ActorHost {
 public:
  CoordinatorHost(std::chrono::milliseconds barrier_timeout, std::size_t num_shards)
      : ActorHost("coordinator"), core_(num_shards), timeout_(barrier_timeout) {}

  void set_shard_links(std::vector<std::unique_ptr<Connection>> links) {
    links_ = std::move(links);
  }
  void drop_links() { links_.clear(); }

 protected:
  void on_envelope(Envelope& e) override {
    Frame f;
    try {
      f = decode_frame(e.bytes);
    } catch (const std::exception& ex) {
      spdlog::error("coordinator: undecodable frame: {}", ex.what());
      return;
    }
    std::vector<Action> actions;
    if (e.from_shard >= 0) {
      actions = core_.on_shard_reply(static_cast<std::uint32_t>(e.from_shard), f);
    } else {
      std::uint64_t client = next_client_++;
      clients_[client] = e.reply;
      actions = core_.on_request(client, f);
    }
    execute(actions);
  }

  std::optional<std::chrono::steady_clock::time_point> next_deadline() override {
    if (!core_.round_open()) {
      deadline_.reset();
      return std::nullopt;
    }
    if (!deadline_) deadline_ = std::chrono::steady_clock::now() + timeout_;
    return deadline_;
  }

  void on_deadline() override {
    spdlog::warn("coordinator: barrier round timed out");
    execute(core_.on_timeout());
    deadline_.reset();
  }

 private:
  void execute(const std::vector<Action>& actions) {
    for (const auto& a : actions) {
      if (a.kind == Action::Kind::kReply) {
        auto it = clients_.find(a.client);
        if (it == clients_.end()) continue;
        send_reply(it->second, a.frame);
        clients_.erase(it);
        continue;
      }
      std::uint64_t original = a.frame.request_id;
      int shard = static_cast<int>(a.shard);
      links_.at(a.shard)->send(a.frame, [this, original, shard](std::optional<Frame> reply,
                                                                 std::exception_ptr err) {
        Frame r;
        if (err || !reply) {
          r = make_error(Frame{Opcode::kBarrier, original, {}}, Status::kError, "flush lost");
        } else {
          r = std::move(*reply);
          r.request_id = original;
        }
        post(Envelope{encode_frame(r), nullptr, shard});
      });
    }
  }

  CoordinatorCore core_;
  std::chrono::milliseconds timeout_;
  std::optional<std::chrono::steady_clock::time_point> deadline_;
  std::vector<std::unique_ptr<Connection>> links_;
  std::map<std::uint64_t, std::shared_ptr<ReplyPort>> clients_;
  std::uint64_t next_client_ = 1;
};

class ReducerHost : public ActorHost {
 public:
  ReducerHost() : ActorHost("reducer") {}

 protected:
  void on_envelope(Envelope& e) override {
    Frame f;
    try {
      f = decode_frame(e.bytes);
    } catch (const std::exception& ex) {
      spdlog::error("reducer: undecodable frame: {}", ex.what());
      return;
    }
    std::uint64_t client = next_client_++;
    clients_[client] = e.reply;
    for (const auto& a : core_.on_request(client, f)) {
      auto it = clients_.find(a.client);
      if (it == clients_.end()) continue;
      send_reply(it->second, a.frame);
      clients_.erase(it);
    }
  }

 private:
  ReducerCore core_;
  std::map<std::uint64_t, std::shared_ptr<ReplyPort>> clients_;
  std::uint64_t next_client_ = 1;
};

Session::Session(std::uint32_t id, std::vector<std::unique_ptr<Connection>> shards,
                 std::unique_ptr<Connection> coordinator, std::unique_ptr<Connection> reducer,
                 std::shared_ptr<EndpointCounters> counters, std::chrono::milliseconds timeout)
    : id_(id),
      shards_(std::move(shards)),
      coordinator_(std::move(coordinator)),
      reducer_(std::move(reducer)),
      counters_(std::move(counters)),
      timeout_(timeout) {}

Frame Session::call(Connection& link, Opcode op, std::vector<std::uint8_t> payload) {
  auto fut = link.call(Frame{op, 0, std::move(payload)});
  Frame reply = await_reply(fut, timeout_);
  check_reply(reply);
  return reply;
}

const EndpointStats& AccountingSnapshot::at(const std::string& role, std::uint32_t id) const {
  for (const auto& e : endpoints) {
    if (e.role == role && e.id == id) return e;
  }
  throw ContractError("no endpoint " + role + "/" + std::to_string(id));
}

Cluster::Cluster(ClusterOptions options) : options_(std::move(options)) {
  if (options_.num_shards == 0 || options_.num_trainers == 0) {
    throw ConfigError("cluster needs at least one shard and one trainer");
  }
  if (!options_.shard_addrs.empty()) {
    if (options_.transport != Transport::kTcp) {
      throw ConfigError("shard_addrs requires transport=tcp");
    }
    if (options_.shard_addrs.size() != options_.num_shards) {
      throw ConfigError("shard_addrs must list exactly num_shards addresses");
    }
  }
}

Cluster::~Cluster() { stop(); }

std::unique_ptr<Session> Cluster::make_session(std::uint32_t id) {
  auto counters = id < options_.num_trainers ? trainer_counters_[id] : driver_counters_;
  std::vector<std::unique_ptr<Connection>> links;
  std::unique_ptr<Connection> coord, red;
  if (options_.transport == Transport::kInproc) {
    for (auto& s : shards_) links.push_back(std::make_unique<InprocConnection>(*s, counters));
    coord = std::make_unique<InprocConnection>(*coordinator_, counters);
    red = std::make_unique<InprocConnection>(*reducer_, counters);
  } else {
    for (auto& [host, port] : shard_endpoints_) {
      links.push_back(std::make_unique<TcpConnection>(host, port, counters));
    }
    auto host = parse_address(options_.listen_addr).first;
    coord = std::make_unique<TcpConnection>(host, coordinator_server_->port(), counters);
    red = std::make_unique<TcpConnection>(host, reducer_server_->port(), counters);
  }
  return std::make_unique<Session>(id, std::move(links), std::move(coord), std::move(red),
                                   counters, options_.request_timeout);
}

void Cluster::start() {
  if (started_once_) throw Error("cluster already started");
  started_once_ = true;
  const bool tcp = options_.transport == Transport::kTcp;
  const bool external = !options_.shard_addrs.empty();
  auto [host, base_port] = tcp ? parse_address(options_.listen_addr)
                               : std::pair<std::string, std::uint16_t>{"", 0};
  auto port_for = [&, base = base_port](std::size_t slot) -> std::uint16_t {
    return base == 0 ? 0 : static_cast<std::uint16_t>(base + slot);
  };

  try {
    if (!external) {
      for (std::size_t s = 0; s < options_.num_shards; ++s) {
        auto delay = s < options_.shard_delays.size() ? options_.shard_delays[s]
                                                      : std::chrono::milliseconds(0);
        shards_.push_back(std::make_unique<ShardHost>("shard-" + std::to_string(s), delay));
        shards_.back()->start();
        if (tcp) {
          shard_servers_.push_back(std::make_unique<TcpServer>(*shards_.back(), host, port_for(s)));
          shard_endpoints_.emplace_back(host, shard_servers_.back()->port());
        }
      }
    } else {
      for (const auto& a : options_.shard_addrs) shard_endpoints_.push_back(parse_address(a));
    }

    coordinator_ = std::make_unique<CoordinatorHost>(options_.barrier_timeout, options_.num_shards);
    coordinator_links_ = std::make_shared<EndpointCounters>();
    std::vector<std::unique_ptr<Connection>> links;
    for (std::size_t s = 0; s < options_.num_shards; ++s) {
      if (tcp) {
        links.push_back(std::make_unique<TcpConnection>(shard_endpoints_[s].first,
                                                        shard_endpoints_[s].second,
                                                        coordinator_links_));
      } else {
        links.push_back(std::make_unique<InprocConnection>(*shards_[s], coordinator_links_));
      }
    }
    coordinator_->set_shard_links(std::move(links));
    coordinator_->start();
    reducer_ = std::make_unique<ReducerHost>();
    reducer_->start();
    if (tcp) {
      coordinator_server_ =
          std::make_unique<TcpServer>(*coordinator_, host, port_for(options_.num_shards));
      reducer_server_ =
          std::make_unique<TcpServer>(*reducer_, host, port_for(options_.num_shards + 1));
    }

    for (std::size_t t = 0; t < options_.num_trainers; ++t) {
      trainer_counters_.push_back(std::make_shared<EndpointCounters>());
    }
    driver_counters_ = std::make_shared<EndpointCounters>();
    for (std::size_t t = 0; t < options_.num_trainers; ++t) {
      trainers_.push_back(make_session(static_cast<std::uint32_t>(t)));
    }
    driver_ = make_session(static_cast<std::uint32_t>(options_.num_trainers));
  } catch (...) {
    running_ = true;
    stop();
    throw;
  }
  running_ = true;
  spdlog::debug("cluster started: {} shards, {} trainers, {}", options_.num_shards,
                options_.num_trainers, transport_name(options_.transport));
}

void Cluster::stop() {
  if (!running_) return;
  running_ = false;
  trainers_.clear();
  driver_.reset();
  if (coordinator_server_) coordinator_server_->stop();
  if (reducer_server_) reducer_server_->stop();
  if (coordinator_) {
    coordinator_->stop();
    coordinator_->drop_links();
  }
  if (reducer_) reducer_->stop();
  for (auto& s : shard_servers_) s->stop();
  for (auto& s : shards_) s->stop();
}

AccountingSnapshot Cluster::accounting() const {
  AccountingSnapshot snap;
  auto stats = [](std::string role, std::uint32_t id, const EndpointCounters& c) {
    return EndpointStats{std::move(role),    id,
                         c.frames_sent,      c.frames_received,
                         c.bytes_sent,       c.bytes_received,
                         c.data_sent,        c.data_received};
  };
  for (std::size_t t = 0; t < trainer_counters_.size(); ++t) {
    snap.endpoints.push_back(stats("trainer", static_cast<std::uint32_t>(t), *trainer_counters_[t]));
  }
  if (driver_counters_) snap.endpoints.push_back(stats("driver", 0, *driver_counters_));
  for (std::size_t s = 0; s < shards_.size(); ++s) {
    snap.endpoints.push_back(stats("storage_shard", static_cast<std::uint32_t>(s), shards_[s]->counters()));
  }
  if (coordinator_) {
    auto c = stats("coordinator", 0, coordinator_->counters());
    c.frames_sent += coordinator_links_->frames_sent;
    // Flush acks are posted back through the coordinator's own mailbox and
    // are already counted as received there.
    c.bytes_sent += coordinator_links_->bytes_sent;
    snap.endpoints.push_back(c);
  }
  if (reducer_) snap.endpoints.push_back(stats("reducer", 0, reducer_->counters()));
  return snap;
}

void Cluster::reset_accounting() {
  for (auto& c : trainer_counters_) c->reset();
  if (driver_counters_) driver_counters_->reset();
  for (auto& s : shards_) s->counters().reset();
  if (coordinator_) coordinator_->counters().reset();
  if (coordinator_links_) coordinator_links_->reset();
  if (reducer_) reducer_->counters().reset();
}

std::vector<std::uint16_t> Cluster::shard_ports() const {
  std::vector<std::uint16_t> out;
  for (const auto& s : shard_servers_) out.push_back(s->port());
  return out;
}

std::uint16_t Cluster::coordinator_port() const {
  return coordinator_server_ ? coordinator_server_->port() : 0;
}

std::uint16_t Cluster::reducer_port() const { return reducer_server_ ? reducer_server_->port() : 0; }

std::unique_ptr<Cluster> start_cluster(ClusterOptions options) {
  auto c = std::make_unique<Cluster>(std::move(options));
  c->start();
  return c;
}

void serve_shard(const std::string& listen_addr, const std::function<void(std::uint16_t)>& on_ready) {
  auto [host, port] = parse_address(listen_addr);
  ShardHost shard("shard@" + listen_addr);
  shard.start();
  TcpServer server(shard, host, port);
  spdlog::info("shard listening on {}:{}", host, server.port());
  if (on_ready) on_ready(server.port());
  while (!shard.shutdown_requested()) std::this_thread::sleep_for(std::chrono::milliseconds(20));
  // Let the SHUTDOWN reply reach the client before sockets close.
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  server.stop();
  shard.stop();
}

}  // namespace gshard::rt
