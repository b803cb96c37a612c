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

/// @file protocol.hpp
/// Engine <-> evaluator-worker messages.
///
/// One compact JSON object per line, UTF-8, terminated by "\n". Both sides
/// open with {"type":"hello","protocol_version":1}. The engine then sends
///   {"type":"evaluate","id":..,"architecture":{..},"epochs":..,"dataset":{..}}
/// and the worker answers with either
///   {"type":"result","id":..,"fitness":..}   or
///   {"type":"error","id":..,"message":..}.
/// The id is the genome's canonical text; workers must answer a repeated id
/// with the result they already produced.

#pragma once

#include <string>
#include <string_view>
#include <variant>

#include <nlohmann/json.hpp>

#include "evonas/error.hpp"

namespace evonas::protocol {

inline constexpr int kProtocolVersion = 1;

struct Hello {
  int protocol_version = kProtocolVersion;
  friend bool operator==(const Hello&, const Hello&) = default;
};

struct EvaluateRequest {
  std::string id;
  nlohmann::json architecture = nlohmann::json::object();
  int epochs = 1;
  nlohmann::json dataset = nlohmann::json::object();
  friend bool operator==(const EvaluateRequest&, const EvaluateRequest&) = default;
};

struct Result {
  std::string id;
  double fitness = 0.0;
  friend bool operator==(const Result&, const Result&) = default;
};

struct ErrorReply {
  std::string id;  // empty when the worker could not read the request id
  std::string message;
  friend bool operator==(const ErrorReply&, const ErrorReply&) = default;
};

using Message = std::variant<Hello, EvaluateRequest, Result, ErrorReply>;

/// Serialized message including the trailing newline.
inline std::string encode(const Message& message) {
  using nlohmann::json;
  const json doc = std::visit(
      [](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Hello>) {
          return {{"type", "hello"}, {"protocol_version", m.protocol_version}};
        } else if constexpr (std::is_same_v<T, EvaluateRequest>) {
          return {{"type", "evaluate"},
                  {"id", m.id},
                  {"architecture", m.architecture},
                  {"epochs", m.epochs},
                  {"dataset", m.dataset}};
        } else if constexpr (std::is_same_v<T, Result>) {
          return {{"type", "result"}, {"id", m.id}, {"fitness", m.fitness}};
        } else {
          return {{"type", "error"}, {"id", m.id}, {"message", m.message}};
        }
      },
      message);
  return doc.dump() + "\n";
}

namespace detail {

template <typename T>
T field(const nlohmann::json& doc, const char* key, const std::string& line) {
  auto it = doc.find(key);
  if (it == doc.end()) {
    throw ProtocolError(std::string("missing field '") + key + "'", line);
  }
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ProtocolError(std::string("malformed field '") + key + "'", line);
  }
}

}  // namespace detail

/// Parses one line (a trailing "\n" or "\r\n" is tolerated). Rejects unknown
/// types, missing fields, non-positive epochs and fitness outside [0, 1].
inline Message decode(std::string_view raw) {
  using detail::field;
  std::string line(raw);
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();

  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    throw ProtocolError("not a JSON document", line);
  }
  if (!doc.is_object()) throw ProtocolError("message is not a JSON object", line);

  const auto type = field<std::string>(doc, "type", line);
  if (type == "hello") {
    return Hello{field<int>(doc, "protocol_version", line)};
  }
  if (type == "evaluate") {
    EvaluateRequest request{field<std::string>(doc, "id", line),
                            field<nlohmann::json>(doc, "architecture", line),
                            field<int>(doc, "epochs", line),
                            field<nlohmann::json>(doc, "dataset", line)};
    if (!request.architecture.is_object()) {
      throw ProtocolError("architecture must be an object", line);
    }
    if (request.epochs < 1) throw ProtocolError("epochs must be >= 1", line);
    return request;
  }
  if (type == "result") {
    Result result{field<std::string>(doc, "id", line), field<double>(doc, "fitness", line)};
    if (!(result.fitness >= 0.0 && result.fitness <= 1.0)) {
      throw ProtocolError("fitness outside [0, 1]", line);
    }
    return result;
  }
  if (type == "error") {
    std::string id;
    if (auto it = doc.find("id"); it != doc.end() && !it->is_null()) {
      id = field<std::string>(doc, "id", line);
    }
    return ErrorReply{std::move(id), field<std::string>(doc, "message", line)};
  }
  throw ProtocolError("unknown message type '" + type + "'", line);
}

}  // namespace evonas::protocol
