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

#include <gtest/gtest.h>

#include "gshard/protocol.hpp"
#include "gshard/wire.hpp"
#include "oracles.hpp"

namespace gshard::rt {
namespace {

TEST(Frame, HeaderLayoutIsLittleEndian) {
  Frame f{Opcode::kGet, 0x0102030405060708ull, {0xAA, 0xBB}};
  auto bytes = encode_frame(f);
  ASSERT_EQ(bytes.size(), kFrameHeaderSize + 2);
  // Length covers opcode + request id + payload.
  EXPECT_EQ(bytes[0], 11);
  EXPECT_EQ(bytes[1], 0);
  EXPECT_EQ(bytes[4], 2);
  EXPECT_EQ(bytes[5], 0x08);
  EXPECT_EQ(bytes[12], 0x01);
  EXPECT_EQ(bytes[13], 0xAA);
  EXPECT_EQ(decode_frame(bytes), f);
  EXPECT_EQ(frame_body_length(std::span<const std::uint8_t, 4>(bytes.data(), 4)), 11u);
}

TEST(Frame, OpcodeValuesAreFixed) {
  EXPECT_EQ(static_cast<int>(Opcode::kCreate), 1);
  EXPECT_EQ(static_cast<int>(Opcode::kMultAdd), 6);
  EXPECT_EQ(static_cast<int>(Opcode::kShutdown), 8);
}

TEST(Frame, MalformedFramesRejected) {
  Frame f{Opcode::kPut, 1, {1, 2, 3}};
  auto bytes = encode_frame(f);
  bytes.pop_back();
  EXPECT_THROW(decode_frame(bytes), ProtocolError);
  auto bad = encode_frame(f);
  bad[4] = 99;
  EXPECT_THROW(decode_frame(bad), ProtocolError);
}

TEST(Codec, RowsRequestRoundTrip) {
  testing::Gen g(4);
  for (DType dt : {DType::kF32, DType::kF64}) {
    RowsRequest r;
    r.store_id = 77;
    r.dtype = dt;
    r.ids = g.distinct(9, 1000);
    r.values = g.reals(9 * 3, -1, 1);
    if (dt == DType::kF32)
      for (double& x : r.values) x = static_cast<float>(x);
    auto payload = encode(r);
    EXPECT_EQ(payload.size(), 9 + 8 * 9 + dtype_size(dt) * 27);
    auto back = decode_rows(payload, true, 3);
    EXPECT_EQ(back.ids, r.ids);
    EXPECT_EQ(back.values, r.values);
    EXPECT_EQ(peek_store_id(payload), 77u);
    Frame fr{Opcode::kPut, 1, payload};
    EXPECT_EQ(frame_data_bytes(fr, false), data_bytes(9, 27, dt));
  }
}

TEST(Codec, ControlMessagesRoundTrip) {
  MultRequest m{5, -0.25};
  auto mb = decode_mult(encode(m));
  EXPECT_EQ(mb.store_id, 5u);
  EXPECT_EQ(mb.scalar, -0.25);
  MultAddRequest ma{1, 2, 0.5};
  auto mab = decode_mult_add(encode(ma));
  EXPECT_EQ(mab.target_id, 1u);
  EXPECT_EQ(mab.source_id, 2u);
  BarrierRequest b{BarrierRequest::Kind::kAbort, 42, 3, 1};
  auto bb = decode_barrier(encode(b));
  EXPECT_EQ(bb.kind, BarrierRequest::Kind::kAbort);
  EXPECT_EQ(bb.iteration, 42u);
  EXPECT_EQ(bb.participants, 3u);
  EXPECT_EQ(frame_data_bytes(Frame{Opcode::kMult, 0, encode(m)}, false), 0u);
  EXPECT_EQ(frame_data_bytes(Frame{Opcode::kBarrier, 0, encode(b)}, false), 0u);
}

TEST(Codec, CreateRoundTrip) {
  CreateRequest c;
  c.store_id = store_id_for("model");
  c.name = "model";
  c.dim = 16;
  c.dtype = DType::kF64;
  c.index.kind = ShardIndex::Kind::kSortedKeys;
  c.index.keys = {2, 5, 9};
  c.init = InitSpec::uniform(-0.1, 0.1);
  c.seed = 11;
  auto back = decode_create(encode(c));
  EXPECT_EQ(back.name, "model");
  EXPECT_EQ(back.dim, 16u);
  EXPECT_EQ(back.index, c.index);
  EXPECT_EQ(back.init.kind, InitSpec::Kind::kUniform);
  EXPECT_EQ(back.seed, 11u);
}

TEST(Codec, ReplyStatusAndDataBytes) {
  Frame req{Opcode::kGet, 9, {}};
  std::vector<double> vals{1, 2, 3, 4};
  auto ok = make_reply(req, encode_rows_reply(DType::kF32, 2, 2, vals));
  EXPECT_EQ(ok.request_id, 9u);
  EXPECT_EQ(frame_data_bytes(ok, true), 16u);
  auto body = check_reply(ok);
  auto rows = decode_rows_reply(body);
  EXPECT_EQ(rows.values, vals);
  auto err = make_error(req, Status::kError, "boom");
  try {
    check_reply(err);
    FAIL();
  } catch (const ProtocolError& e) {
    EXPECT_NE(std::string(e.what()).find("boom"), std::string::npos);
  }
  EXPECT_THROW(check_reply(make_error(req, Status::kAborted, "x")), BarrierAborted);
}

TEST(Codec, ReduceFramesCountOnlyValues) {
  ReduceRequest r{1, 2, 3, DType::kF64, {1.0, 2.0, 3.0}};
  Frame f{Opcode::kAdd, 0, encode(r)};
  EXPECT_EQ(frame_data_bytes(f, false), 24u);
  auto back = decode_reduce(f.payload);
  EXPECT_EQ(back.values, r.values);
  EXPECT_EQ(back.round, 3u);
}

TEST(Codec, TruncatedPayloadsThrow) {
  RowsRequest r;
  r.ids = {1, 2};
  r.values = {1, 2};
  auto p = encode(r);
  p.resize(p.size() - 3);
  EXPECT_THROW(decode_rows(p, true, 1), ProtocolError);
  EXPECT_THROW(decode_mult(std::vector<std::uint8_t>{1, 2}), ProtocolError);
}

TEST(Init, UniformRowsDependOnlyOnSeedAndId) {
  std::vector<double> a(4), b(4), c(4);
  init_row(InitSpec::uniform(-1, 1), 3, 10, a);
  init_row(InitSpec::uniform(-1, 1), 3, 10, b);
  init_row(InitSpec::uniform(-1, 1), 3, 11, c);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  for (double x : a) {
    EXPECT_GE(x, -1);
    EXPECT_LT(x, 1);
  }
}

}  // namespace
}  // namespace gshard::rt
