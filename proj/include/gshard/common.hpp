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
#include <stdexcept>
#include <string>

namespace gshard {

using VertexId = std::uint64_t;

enum class DType : std::uint8_t { kF32 = 0, kF64 = 1 };

inline std::size_t dtype_size(DType t) { return t == DType::kF32 ? 4 : 8; }
const char* dtype_name(DType t);
DType parse_dtype(const std::string& s);

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text (edge lists, configs, CSVs).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line), detail_(what) {}
  std::size_t line() const { return line_; }
  // The message without the line prefix.
  const std::string& detail() const { return detail_; }

 private:
  std::size_t line_;
  std::string detail_;
};

// A caller violated a documented precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Wire protocol violations and barrier aborts.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// A barrier round was abandoned (participant abort, timeout, or mismatch).
class BarrierAborted : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class TimeoutError : public TransportError {
 public:
  using TransportError::TransportError;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace gshard
