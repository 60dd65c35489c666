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
#include <cstring>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "gshard/common.hpp"

namespace gshard::rt {

enum class Opcode : std::uint8_t {
  kCreate = 1,
  kGet = 2,
  kPut = 3,
  kAdd = 4,
  kMult = 5,
  kMultAdd = 6,
  kBarrier = 7,
  kShutdown = 8,
};

const char* opcode_name(Opcode op);

// Length prefix (4) + opcode (1) + request id (8).
inline constexpr std::size_t kFrameHeaderSize = 13;
inline constexpr std::size_t kMaxFrameSize = std::size_t{1} << 31;

// The length field counts everything after itself: opcode, request id, payload.
struct Frame {
  Opcode opcode = Opcode::kShutdown;
  std::uint64_t request_id = 0;
  std::vector<std::uint8_t> payload;

  std::size_t wire_size() const { return kFrameHeaderSize + payload.size(); }
  bool operator==(const Frame&) const = default;
};

std::vector<std::uint8_t> encode_frame(const Frame& f);
// `bytes` is one whole frame including the length prefix.
Frame decode_frame(std::span<const std::uint8_t> bytes);
// Reads the length prefix; returns the number of bytes that follow it.
std::uint32_t frame_body_length(std::span<const std::uint8_t, 4> prefix);

class ByteWriter {
 public:
  template <typename T>
    requires std::is_arithmetic_v<T>
  void put(T v) {
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    buf_.insert(buf_.end(), raw, raw + sizeof(T));
  }
  void put_string(const std::string& s);
  void put_ids(std::span<const VertexId> ids);  // u32 count + u64 array
  // Row-major values stored as fp32 or fp64.
  void put_values(std::span<const double> values, DType dtype);

  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  template <typename T>
    requires std::is_arithmetic_v<T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string get_string();
  std::vector<VertexId> get_ids();
  std::vector<double> get_values(std::size_t count, DType dtype);

  std::size_t remaining() const { return data_.size() - pos_; }
  void expect_end() const;

 private:
  void need(std::size_t n) const;

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

// Every response starts with a status byte; errors carry a message.
enum class Status : std::uint8_t { kOk = 0, kError = 1, kAborted = 2 };

Frame make_reply(const Frame& request, std::vector<std::uint8_t> body = {});
Frame make_error(const Frame& request, Status status, const std::string& message);

// Splits a response into (status, body after the status byte). Throws
// ProtocolError carrying the remote message for non-ok responses.
ByteReader check_reply(const Frame& reply);

}  // namespace gshard::rt
