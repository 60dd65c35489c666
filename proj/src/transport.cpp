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

#include "gshard/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include <spdlog/spdlog.h>

namespace gshard::rt {

void EndpointCounters::reset() {
  frames_sent = 0;
  frames_received = 0;
  bytes_sent = 0;
  bytes_received = 0;
  data_sent = 0;
  data_received = 0;
}

// ---- actor hosts ----

ActorHost::~ActorHost() { stop(); }

void ActorHost::start() {
  if (thread_.joinable()) throw Error("actor " + name_ + " already started");
  thread_ = std::thread([this] { run(); });
}

void ActorHost::stop() {
  stop_ = true;
  mailbox_.close();
  if (thread_.joinable()) thread_.join();
}

namespace {

std::uint64_t request_data_bytes(const std::vector<std::uint8_t>& bytes) {
  try {
    return frame_data_bytes(decode_frame(bytes), false);
  } catch (const std::exception&) {
    return 0;
  }
}

}  // namespace

void ActorHost::run() {
  while (true) {
    auto deadline = next_deadline();
    auto env = mailbox_.pop(deadline);
    if (env) {
      counters_.frames_received++;
      counters_.bytes_received += env->bytes.size();
      counters_.data_received += request_data_bytes(env->bytes);
      on_envelope(*env);
      continue;
    }
    if (stop_) break;
    if (deadline && std::chrono::steady_clock::now() >= *deadline) on_deadline();
  }
}

void ActorHost::send_reply(const std::shared_ptr<ReplyPort>& port, const Frame& f) {
  auto bytes = encode_frame(f);
  counters_.frames_sent++;
  counters_.bytes_sent += bytes.size();
  counters_.data_sent += frame_data_bytes(f, true);
  if (port) port->deliver(std::move(bytes));
}

void ShardHost::on_envelope(Envelope& e) {
  if (delay_.count() > 0) std::this_thread::sleep_for(delay_);
  Frame req;
  try {
    req = decode_frame(e.bytes);
  } catch (const std::exception& ex) {
    spdlog::error("{}: dropping undecodable frame: {}", name(), ex.what());
    return;
  }
  Frame reply = core_.handle(req);
  send_reply(e.reply, reply);
  if (core_.shutdown_requested()) shutdown_ = true;
}

// ---- connections ----

namespace {

void dispatch(Connection::Callback cb, std::optional<Frame> f, std::exception_ptr err) {
  if (cb) cb(std::move(f), err);
}

}  // namespace

Connection::Connection(std::shared_ptr<EndpointCounters> counters)
    : pending_(std::make_shared<Pending>()), counters_(std::move(counters)) {}

Connection::~Connection() = default;

void Connection::send(Frame f, Callback done) {
  f.request_id = next_id_++;
  {
    std::lock_guard<std::mutex> lk(pending_->mu);
    if (pending_->dead) {
      auto why = pending_->why;
      dispatch(std::move(done), std::nullopt, std::make_exception_ptr(TransportError(why)));
      return;
    }
    pending_->callbacks.emplace(f.request_id, std::move(done));
  }
  auto bytes = encode_frame(f);
  counters_->frames_sent++;
  counters_->bytes_sent += bytes.size();
  counters_->data_sent += frame_data_bytes(f, false);
  transmit(std::move(bytes));
}

std::future<Frame> Connection::call(Frame f) {
  auto promise = std::make_shared<std::promise<Frame>>();
  auto fut = promise->get_future();
  send(std::move(f), [promise](std::optional<Frame> reply, std::exception_ptr err) {
    if (err) {
      promise->set_exception(err);
    } else {
      promise->set_value(std::move(*reply));
    }
  });
  return fut;
}

namespace {

void deliver_to(Connection::Callback cb, EndpointCounters& counters,
                std::span<const std::uint8_t> bytes, Frame frame) {
  counters.frames_received++;
  counters.bytes_received += bytes.size();
  counters.data_received += frame_data_bytes(frame, true);
  dispatch(std::move(cb), std::move(frame), nullptr);
}

}  // namespace

void Connection::on_bytes(std::span<const std::uint8_t> bytes) {
  Frame f;
  try {
    f = decode_frame(bytes);
  } catch (const std::exception& e) {
    fail_all(std::string("undecodable reply: ") + e.what());
    return;
  }
  Callback cb;
  {
    std::lock_guard<std::mutex> lk(pending_->mu);
    auto it = pending_->callbacks.find(f.request_id);
    if (it == pending_->callbacks.end()) {
      spdlog::warn("reply for unknown request id {}", f.request_id);
      return;
    }
    cb = std::move(it->second);
    pending_->callbacks.erase(it);
  }
  deliver_to(std::move(cb), *counters_, bytes, std::move(f));
}

void Connection::fail_all(const std::string& why) {
  std::map<std::uint64_t, Callback> cbs;
  {
    std::lock_guard<std::mutex> lk(pending_->mu);
    pending_->dead = true;
    pending_->why = why;
    cbs.swap(pending_->callbacks);
  }
  for (auto& [id, cb] : cbs) dispatch(std::move(cb), std::nullopt, std::make_exception_ptr(TransportError(why)));
}

// Routes replies from the actor thread back to the connection's pending
// table. Holds only weak state so a closed connection drops late replies.
class InprocConnection::Port : public ReplyPort {
 public:
  Port(std::weak_ptr<Connection::Pending> pending, InprocConnection* owner)
      : pending_(std::move(pending)), owner_(owner) {}

  void deliver(std::vector<std::uint8_t> bytes) override {
    std::lock_guard<std::mutex> lk(mu_);
    if (owner_ && !pending_.expired()) owner_->on_bytes(bytes);
  }
  void detach() {
    std::lock_guard<std::mutex> lk(mu_);
    owner_ = nullptr;
  }

 private:
  std::mutex mu_;
  std::weak_ptr<Connection::Pending> pending_;
  InprocConnection* owner_;
};

InprocConnection::InprocConnection(ActorHost& target, std::shared_ptr<EndpointCounters> counters)
    : Connection(std::move(counters)), target_(target) {
  port_ = std::make_shared<Port>(pending_, this);
}

InprocConnection::~InprocConnection() {
  port_->detach();
  fail_all("connection closed");
}

void InprocConnection::transmit(std::vector<std::uint8_t> bytes) {
  target_.post(Envelope{std::move(bytes), port_, -1});
}

// ---- sockets ----

Socket::~Socket() {
  if (fd_ >= 0) ::close(fd_);
}

Socket& Socket::operator=(Socket&& o) noexcept {
  if (this != &o) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = o.fd_;
    o.fd_ = -1;
  }
  return *this;
}

namespace {

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

}  // namespace

Socket Socket::connect_to(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  int rc = ::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res);
  if (rc != 0) throw TransportError("cannot resolve " + host + ": " + ::gai_strerror(rc));
  std::string last = "no addresses";
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
      ::freeaddrinfo(res);
      set_nodelay(fd);
      return Socket(fd);
    }
    last = std::strerror(errno);
    ::close(fd);
  }
  ::freeaddrinfo(res);
  throw TransportError("cannot connect to " + host + ":" + std::to_string(port) + ": " + last);
}

void Socket::send_all(std::span<const std::uint8_t> data) {
  std::size_t off = 0;
  while (off < data.size()) {
    ssize_t n = ::send(fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("send failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

bool Socket::recv_exact(std::span<std::uint8_t> out) {
  std::size_t off = 0;
  while (off < out.size()) {
    ssize_t n = ::recv(fd_, out.data() + off, out.size() - off, 0);
    if (n == 0) return false;
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    off += static_cast<std::size_t>(n);
  }
  return true;
}

std::optional<std::vector<std::uint8_t>> Socket::recv_frame() {
  std::vector<std::uint8_t> buf(4);
  if (!recv_exact(buf)) return std::nullopt;
  std::uint32_t len = frame_body_length(std::span<const std::uint8_t, 4>(buf.data(), 4));
  buf.resize(4 + std::size_t{len});
  if (!recv_exact(std::span<std::uint8_t>(buf).subspan(4))) return std::nullopt;
  return buf;
}

void Socket::shutdown_both() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

TcpConnection::TcpConnection(const std::string& host, std::uint16_t port,
                             std::shared_ptr<EndpointCounters> counters)
    : Connection(std::move(counters)), sock_(Socket::connect_to(host, port)) {
  reader_ = std::thread([this] { read_loop(); });
}

TcpConnection::~TcpConnection() {
  sock_.shutdown_both();
  if (reader_.joinable()) reader_.join();
  fail_all("connection closed");
}

void TcpConnection::transmit(std::vector<std::uint8_t> bytes) {
  try {
    std::lock_guard<std::mutex> lk(write_mu_);
    sock_.send_all(bytes);
  } catch (const std::exception& e) {
    fail_all(e.what());
  }
}

void TcpConnection::read_loop() {
  while (true) {
    std::optional<std::vector<std::uint8_t>> frame;
    try {
      frame = sock_.recv_frame();
    } catch (const std::exception& e) {
      fail_all(e.what());
      return;
    }
    if (!frame) {
      fail_all("connection lost");
      return;
    }
    on_bytes(*frame);
  }
}

namespace {

class TcpReplyPort : public ReplyPort {
 public:
  TcpReplyPort(std::shared_ptr<Socket> sock, std::shared_ptr<std::mutex> mu)
      : sock_(std::move(sock)), mu_(std::move(mu)) {}
  void deliver(std::vector<std::uint8_t> bytes) override {
    std::lock_guard<std::mutex> lk(*mu_);
    try {
      sock_->send_all(bytes);
    } catch (const std::exception& e) {
      spdlog::debug("reply dropped: {}", e.what());
    }
  }

 private:
  std::shared_ptr<Socket> sock_;
  std::shared_ptr<std::mutex> mu_;
};

}  // namespace

TcpServer::TcpServer(ActorHost& host, const std::string& listen_host, std::uint16_t port)
    : host_(host) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  int rc = ::getaddrinfo(listen_host.c_str(), std::to_string(port).c_str(), &hints, &res);
  if (rc != 0) throw TransportError("cannot resolve " + listen_host + ": " + ::gai_strerror(rc));
  int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd < 0) {
    ::freeaddrinfo(res);
    throw TransportError(std::string("socket: ") + std::strerror(errno));
  }
  listener_ = Socket(fd);
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  if (::bind(fd, res->ai_addr, res->ai_addrlen) != 0) {
    int err = errno;
    ::freeaddrinfo(res);
    throw TransportError("cannot listen on " + listen_host + ":" + std::to_string(port) + ": " +
                         std::strerror(err));
  }
  ::freeaddrinfo(res);
  if (::listen(fd, 64) != 0) throw TransportError(std::string("listen: ") + std::strerror(errno));
  sockaddr_in addr{};
  socklen_t len = sizeof(addr);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  acceptor_ = std::thread([this] { accept_loop(); });
}

TcpServer::~TcpServer() { stop(); }

void TcpServer::stop() {
  if (stopped_.exchange(true)) return;
  listener_.shutdown_both();
  if (acceptor_.joinable()) acceptor_.join();
  std::lock_guard<std::mutex> lk(mu_);
  for (auto& c : conns_) c->shutdown_both();
  for (auto& t : readers_) {
    if (t.joinable()) t.join();
  }
}

void TcpServer::accept_loop() {
  while (!stopped_) {
    int fd = ::accept(listener_.fd(), nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      return;
    }
    set_nodelay(fd);
    auto sock = std::make_shared<Socket>(fd);
    std::lock_guard<std::mutex> lk(mu_);
    if (stopped_) return;
    conns_.push_back(sock);
    readers_.emplace_back([this, sock] { serve(sock); });
  }
}

void TcpServer::serve(std::shared_ptr<Socket> sock) {
  auto write_mu = std::make_shared<std::mutex>();
  auto port = std::make_shared<TcpReplyPort>(sock, write_mu);
  while (true) {
    std::optional<std::vector<std::uint8_t>> frame;
    try {
      frame = sock->recv_frame();
    } catch (const std::exception& e) {
      spdlog::warn("{}: closing connection: {}", host_.name(), e.what());
      return;
    }
    if (!frame) return;
    host_.post(Envelope{std::move(*frame), port, -1});
  }
}

std::pair<std::string, std::uint16_t> parse_address(const std::string& addr) {
  auto colon = addr.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == addr.size()) {
    throw ConfigError("address '" + addr + "' is not host:port");
  }
  try {
    std::size_t pos = 0;
    int port = std::stoi(addr.substr(colon + 1), &pos);
    if (pos != addr.size() - colon - 1 || port < 0 || port > 65535) throw ConfigError("");
    return {addr.substr(0, colon), static_cast<std::uint16_t>(port)};
  } catch (const std::exception&) {
    throw ConfigError("address '" + addr + "' has a bad port");
  }
}

Frame await_reply(std::future<Frame>& fut, std::chrono::milliseconds timeout) {
  if (fut.wait_for(timeout) != std::future_status::ready) {
    throw TimeoutError("request timed out after " + std::to_string(timeout.count()) + " ms");
  }
  return fut.get();
}

}  // namespace gshard::rt
