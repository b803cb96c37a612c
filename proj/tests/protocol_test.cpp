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

#include <gtest/gtest.h>

#include <string>

#include "evonas/decoder.hpp"
#include "evonas/protocol.hpp"

namespace evonas::protocol {
namespace {

TEST(Protocol, ResultDecodes) {
  const auto m = decode(R"({"type":"result","id":"S64.64","fitness":0.5})");
  EXPECT_EQ(std::get<Result>(m), (Result{"S64.64", 0.5}));
}

TEST(Protocol, FitnessOutOfRange) {
  EXPECT_THROW(decode(R"({"type":"result","id":"S64.64","fitness":1.5})"), ProtocolError);
  EXPECT_THROW(decode(R"({"type":"result","id":"S64.64","fitness":-0.01})"), ProtocolError);
}

TEST(Protocol, RejectsMalformed) {
  for (const char* line :
       {"", "not json", "[1]", R"({"id":"S64.64"})", R"({"type":"bye"})",
        R"({"type":"result","id":"S64.64"})", R"({"type":"result","id":7,"fitness":0.5})",
        R"({"type":"hello"})", R"({"type":"evaluate","id":"S64.64","architecture":{},"epochs":0,"dataset":{}})",
        R"({"type":"evaluate","id":"S64.64","architecture":[],"epochs":1,"dataset":{}})",
        R"({"type":"error","id":"S64.64"})"}) {
    EXPECT_THROW(decode(line), ProtocolError) << line;
  }
}

TEST(Protocol, ErrorCarriesLine) {
  try {
    decode("garbage");
    FAIL();
  } catch (const ProtocolError& e) {
    EXPECT_EQ(e.line(), "garbage");
  }
}

TEST(Protocol, WireFormat) {
  EXPECT_EQ(encode(Hello{}), "{\"protocol_version\":1,\"type\":\"hello\"}\n");
  EXPECT_EQ(encode(Result{"S64.64", 0.5}),
            "{\"fitness\":0.5,\"id\":\"S64.64\",\"type\":\"result\"}\n");
  const auto line = encode(EvaluateRequest{"S64.64", nlohmann::json::object(), 600, {}});
  EXPECT_EQ(line.find('\n'), line.size() - 1);
  EXPECT_EQ(line.find(' '), std::string::npos);
}

TEST(Protocol, ErrorWithNullId) {
  const auto m = decode(R"({"type":"error","id":null,"message":"bad line"})");
  EXPECT_EQ(std::get<ErrorReply>(m), (ErrorReply{"", "bad line"}));
}

TEST(Protocol, ToleratesCrLf) {
  EXPECT_TRUE(std::holds_alternative<Hello>(decode("{\"type\":\"hello\",\"protocol_version\":1}\r\n")));
}

TEST(Protocol, RoundTripsGeneratedMessages) {
  SearchSpaceConfig cfg;
  Rng rng(17);
  for (int i = 0; i < 500; ++i) {
    const Genome g = random_genome(cfg, rng);
    const std::string id = serialize(g);
    std::vector<Message> messages{
        Hello{static_cast<int>(rng.index(5))},
        EvaluateRequest{id, to_json(decode(g, cfg)), static_cast<int>(1 + rng.index(600)),
                        {{"train_path", "/data/train"}, {"val_path", "/data/val"}}},
        Result{id, rng.uniform01()},
        ErrorReply{rng.coin() ? id : "", "failure \"" + std::to_string(i) + "\"\n\tüñí"},
    };
    for (const auto& m : messages) {
      const auto line = encode(m);
      ASSERT_EQ(std::count(line.begin(), line.end(), '\n'), 1);
      ASSERT_EQ(decode(line), m) << line;
    }
  }
}

}  // namespace
}  // namespace evonas::protocol
