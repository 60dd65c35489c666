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

#include "gshard/wire.hpp"

namespace gshard::rt {

const char* opcode_name(Opcode op) {
  switch (op) {
    case Opcode::kCreate: return "CREATE";
    case Opcode::kGet: return "GET";
    case Opcode::kPut: return "PUT";
    case Opcode::kAdd: return "ADD";
    case Opcode::kMult: return "MULT";
    case Opcode::kMultAdd: return "MULTADD";
    case Opcode::kBarrier: return "BARRIER";
    case Opcode::kShutdown: return "SHUTDOWN";
  }
  return "UNKNOWN";
}

std::vector<std::uint8_t> encode_frame(const Frame& f) {
  if (f.wire_size() > kMaxFrameSize) throw ProtocolError("frame too large");
  ByteWriter w;
  w.put<std::uint32_t>(static_cast<std::uint32_t>(f.wire_size() - 4));
  w.put<std::uint8_t>(static_cast<std::uint8_t>(f.opcode));
  w.put<std::uint64_t>(f.request_id);
  auto out = w.take();
  out.insert(out.end(), f.payload.begin(), f.payload.end());
  return out;
}

std::uint32_t frame_body_length(std::span<const std::uint8_t, 4> prefix) {
  std::uint32_t len;
  std::memcpy(&len, prefix.data(), 4);
  if (len < kFrameHeaderSize - 4) throw ProtocolError("frame length below header size");
  return len;
}

Frame decode_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFrameHeaderSize) throw ProtocolError("truncated frame header");
  std::uint32_t len = frame_body_length(bytes.first<4>());
  if (bytes.size() != std::size_t{len} + 4) throw ProtocolError("frame length mismatch");
  ByteReader r(bytes.subspan(4));
  Frame f;
  auto op = r.get<std::uint8_t>();
  if (op < 1 || op > 8) throw ProtocolError("unknown opcode " + std::to_string(op));
  f.opcode = static_cast<Opcode>(op);
  f.request_id = r.get<std::uint64_t>();
  f.payload.assign(bytes.begin() + kFrameHeaderSize, bytes.end());
  return f;
}

void ByteWriter::put_string(const std::string& s) {
  if (s.size() > 0xFFFF) throw ProtocolError("string too long for frame");
  put<std::uint16_t>(static_cast<std::uint16_t>(s.size()));
  buf_.insert(buf_.end(), s.begin(), s.end());
}

void ByteWriter::put_ids(std::span<const VertexId> ids) {
  put<std::uint32_t>(static_cast<std::uint32_t>(ids.size()));
  const auto* raw = reinterpret_cast<const std::uint8_t*>(ids.data());
  buf_.insert(buf_.end(), raw, raw + ids.size_bytes());
}

void ByteWriter::put_values(std::span<const double> values, DType dtype) {
  if (dtype == DType::kF64) {
    const auto* raw = reinterpret_cast<const std::uint8_t*>(values.data());
    buf_.insert(buf_.end(), raw, raw + values.size_bytes());
    return;
  }
  std::size_t at = buf_.size();
  buf_.resize(at + 4 * values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    float f = static_cast<float>(values[i]);
    std::memcpy(buf_.data() + at + 4 * i, &f, 4);
  }
}

void ByteReader::need(std::size_t n) const {
  if (remaining() < n) throw ProtocolError("truncated payload");
}

void ByteReader::expect_end() const {
  if (remaining() != 0) throw ProtocolError("trailing bytes in payload");
}

std::string ByteReader::get_string() {
  auto n = get<std::uint16_t>();
  need(n);
  std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
  pos_ += n;
  return s;
}

std::vector<VertexId> ByteReader::get_ids() {
  auto n = get<std::uint32_t>();
  need(std::size_t{n} * 8);
  std::vector<VertexId> ids(n);
  std::memcpy(ids.data(), data_.data() + pos_, std::size_t{n} * 8);
  pos_ += std::size_t{n} * 8;
  return ids;
}

std::vector<double> ByteReader::get_values(std::size_t count, DType dtype) {
  std::vector<double> out(count);
  if (dtype == DType::kF64) {
    need(count * 8);
    std::memcpy(out.data(), data_.data() + pos_, count * 8);
    pos_ += count * 8;
    return out;
  }
  need(count * 4);
  for (std::size_t i = 0; i < count; ++i) {
    float f;
    std::memcpy(&f, data_.data() + pos_ + 4 * i, 4);
    out[i] = f;
  }
  pos_ += count * 4;
  return out;
}

Frame make_reply(const Frame& request, std::vector<std::uint8_t> body) {
  Frame f;
  f.opcode = request.opcode;
  f.request_id = request.request_id;
  f.payload.reserve(body.size() + 1);
  f.payload.push_back(static_cast<std::uint8_t>(Status::kOk));
  f.payload.insert(f.payload.end(), body.begin(), body.end());
  return f;
}

Frame make_error(const Frame& request, Status status, const std::string& message) {
  ByteWriter w;
  w.put<std::uint8_t>(static_cast<std::uint8_t>(status));
  w.put_string(message.substr(0, 0xFFFF));
  Frame f;
  f.opcode = request.opcode;
  f.request_id = request.request_id;
  f.payload = w.take();
  return f;
}

ByteReader check_reply(const Frame& reply) {
  if (reply.payload.empty()) throw ProtocolError("empty reply");
  auto status = static_cast<Status>(reply.payload[0]);
  std::span<const std::uint8_t> body(reply.payload);
  body = body.subspan(1);
  if (status == Status::kOk) return ByteReader(body);
  ByteReader r(body);
  std::string msg = r.remaining() >= 2 ? r.get_string() : std::string("no message");
  if (status == Status::kAborted) throw BarrierAborted("aborted: " + msg);
  throw ProtocolError(std::string(opcode_name(reply.opcode)) + " failed: " + msg);
}

}  // namespace gshard::rt
