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

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "gshard/actors.hpp"
#include "gshard/wire.hpp"

namespace gshard::rt {

// Frame and byte counters of one endpoint. `data_*` counts row values and
// vertex ids only (see data_bytes()); the others count whole frames.
struct EndpointCounters {
  std::atomic<std::uint64_t> frames_sent{0};
  std::atomic<std::uint64_t> frames_received{0};
  std::atomic<std::uint64_t> bytes_sent{0};
  std::atomic<std::uint64_t> bytes_received{0};
  std::atomic<std::uint64_t> data_sent{0};
  std::atomic<std::uint64_t> data_received{0};

  void reset();
};

template <typename T>
class Mailbox {
 public:
  void push(T item) {
    {
      std::lock_guard<std::mutex> lk(mu_);
      if (closed_) return;
      q_.push_back(std::move(item));
    }
    cv_.notify_one();
  }

  // Empty optional on close (after draining) or when the deadline passes.
  std::optional<T> pop(std::optional<std::chrono::steady_clock::time_point> deadline = {}) {
    std::unique_lock<std::mutex> lk(mu_);
    auto ready = [&] { return closed_ || !q_.empty(); };
    if (deadline) {
      cv_.wait_until(lk, *deadline, ready);
    } else {
      cv_.wait(lk, ready);
    }
    if (q_.empty()) return std::nullopt;
    T item = std::move(q_.front());
    q_.pop_front();
    return item;
  }

  void close() {
    {
      std::lock_guard<std::mutex> lk(mu_);
      closed_ = true;
    }
    cv_.notify_all();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<T> q_;
  bool closed_ = false;
};

// Where an actor sends the reply to one request.
class ReplyPort {
 public:
  virtual ~ReplyPort() = default;
  virtual void deliver(std::vector<std::uint8_t> bytes) = 0;
};

struct Envelope {
  std::vector<std::uint8_t> bytes;
  std::shared_ptr<ReplyPort> reply;
  // >= 0 when this is a response from that shard to the hosting actor.
  int from_shard = -1;
};

// Runs one actor on a dedicated thread that drains its mailbox serially.
class ActorHost {
 public:
  explicit ActorHost(std::string name) : name_(std::move(name)) {}
  virtual ~ActorHost();
  ActorHost(const ActorHost&) = delete;
  ActorHost& operator=(const ActorHost&) = delete;

  void start();
  void stop();
  void post(Envelope e) { mailbox_.push(std::move(e)); }
  const std::string& name() const { return name_; }
  EndpointCounters& counters() { return counters_; }

 protected:
  virtual void on_envelope(Envelope& e) = 0;
  virtual std::optional<std::chrono::steady_clock::time_point> next_deadline() { return {}; }
  virtual void on_deadline() {}
  void send_reply(const std::shared_ptr<ReplyPort>& port, const Frame& f);
  bool stopping() const { return stop_.load(); }

 private:
  void run();

  std::string name_;
  Mailbox<Envelope> mailbox_;
  std::thread thread_;
  std::atomic<bool> stop_{false};
  EndpointCounters counters_;
};

class ShardHost : public ActorHost {
 public:
  ShardHost(std::string name, std::chrono::milliseconds delay = {})
      : ActorHost(std::move(name)), delay_(delay) {}
  // Set before start().
  void set_delay(std::chrono::milliseconds d) { delay_ = d; }
  bool shutdown_requested() const { return shutdown_.load(); }

 protected:
  void on_envelope(Envelope& e) override;

 private:
  ShardCore core_;
  std::chrono::milliseconds delay_;
  std::atomic<bool> shutdown_{false};
};

// Client side of a link to one actor. Request ids are assigned here and
// matched against replies; replies may complete out of order across links.
class Connection {
 public:
  using Callback = std::function<void(std::optional<Frame>, std::exception_ptr)>;

  explicit Connection(std::shared_ptr<EndpointCounters> counters);
  virtual ~Connection();

  void send(Frame f, Callback done);
  std::future<Frame> call(Frame f);
  EndpointCounters& counters() { return *counters_; }

 protected:
  virtual void transmit(std::vector<std::uint8_t> bytes) = 0;
  // Transports call these from their receive paths.
  void on_bytes(std::span<const std::uint8_t> bytes);
  void fail_all(const std::string& why);

  struct Pending {
    std::mutex mu;
    std::map<std::uint64_t, Callback> callbacks;
    bool dead = false;
    std::string why;
  };
  std::shared_ptr<Pending> pending_;

 private:
  std::shared_ptr<EndpointCounters> counters_;
  std::atomic<std::uint64_t> next_id_{1};
};

class InprocConnection : public Connection {
 public:
  InprocConnection(ActorHost& target, std::shared_ptr<EndpointCounters> counters);
  ~InprocConnection() override;

 protected:
  void transmit(std::vector<std::uint8_t> bytes) override;

 private:
  class Port;
  ActorHost& target_;
  std::shared_ptr<Port> port_;
};

// Blocking POSIX socket with whole-buffer send and exact receive.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket();
  Socket(Socket&& o) noexcept : fd_(o.fd_) { o.fd_ = -1; }
  Socket& operator=(Socket&& o) noexcept;

  static Socket connect_to(const std::string& host, std::uint16_t port);
  void send_all(std::span<const std::uint8_t> data);
  bool recv_exact(std::span<std::uint8_t> out);
  // Reads one length-prefixed frame; empty optional on orderly close.
  std::optional<std::vector<std::uint8_t>> recv_frame();
  void shutdown_both();
  int fd() const { return fd_; }

 private:
  int fd_ = -1;
};

class TcpConnection : public Connection {
 public:
  TcpConnection(const std::string& host, std::uint16_t port,
                std::shared_ptr<EndpointCounters> counters);
  ~TcpConnection() override;

 protected:
  void transmit(std::vector<std::uint8_t> bytes) override;

 private:
  void read_loop();
  Socket sock_;
  std::mutex write_mu_;
  std::thread reader_;
};

// Accepts TCP connections and forwards their frames into an actor's mailbox.
class TcpServer {
 public:
  // port 0 picks an ephemeral port. Throws TransportError if the bind fails.
  TcpServer(ActorHost& host, const std::string& listen_host, std::uint16_t port);
  ~TcpServer();
  std::uint16_t port() const { return port_; }
  void stop();

 private:
  void accept_loop();
  void serve(std::shared_ptr<Socket> sock);

  ActorHost& host_;
  Socket listener_;
  std::uint16_t port_ = 0;
  std::thread acceptor_;
  std::mutex mu_;
  std::vector<std::shared_ptr<Socket>> conns_;
  std::vector<std::thread> readers_;
  std::atomic<bool> stopped_{false};
};

// "host:port" -> pair. Throws ConfigError on malformed input.
std::pair<std::string, std::uint16_t> parse_address(const std::string& addr);

// Waits for a reply, converting a missed deadline into TimeoutError.
Frame await_reply(std::future<Frame>& fut, std::chrono::milliseconds timeout);

}  // namespace gshard::rt
