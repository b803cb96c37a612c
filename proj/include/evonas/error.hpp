// Copyright 2026 The evonas Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace evonas {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed genome text.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Genome cannot be turned into a computation graph.
class DecodeError : public Error {
 public:
  using Error::Error;
};

/// A spatial dimension collapsed below the pooling window, or a graph node
/// received inputs of incompatible shape.
class ShapeError : public DecodeError {
 public:
  using DecodeError::DecodeError;
};

/// Fitness re-inserted into the cache with a different value.
class ConflictError : public Error {
 public:
  using Error::Error;
};

/// Fitness outside [0, 1].
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Corrupt or mismatched on-disk document (cache file, checkpoint).
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A wire-protocol line could not be decoded. Carries the offending line.
class ProtocolError : public Error {
 public:
  ProtocolError(const std::string& what, std::string line)
      : Error(what + ": " + line), line_(std::move(line)) {}
  const std::string& line() const noexcept { return line_; }

 private:
  std::string line_;
};

/// Connection to a worker broke (EOF, write failure, spawn failure).
class TransportError : public Error {
 public:
  using Error::Error;
};

class TimeoutError : public TransportError {
 public:
  using TransportError::TransportError;
};

/// The worker answered with {"type":"error"}.
class WorkerError : public Error {
 public:
  using Error::Error;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

/// Evaluation of one individual failed; names the genome.
class EvaluationError : public Error {
 public:
  EvaluationError(std::string genome_id, const std::string& cause)
      : Error("evaluation of " + genome_id + " failed: " + cause),
        genome_id_(std::move(genome_id)) {}
  const std::string& genome_id() const noexcept { return genome_id_; }

 private:
  std::string genome_id_;
};

}  // namespace evonas
