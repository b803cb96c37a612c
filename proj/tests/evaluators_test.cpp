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

#include <chrono>
#include <string>
#include <thread>
#include <vector>

#include "evonas/evaluators.hpp"
#include "stub.hpp"

namespace evonas {
namespace {

using namespace std::chrono_literals;

TEST(Surrogate, PeakIsOne) {
  EXPECT_DOUBLE_EQ(surrogate_fitness(8, 10'000'000), 1.0);
}

TEST(Surrogate, DepthPeakWidthOffByADecade) {
  // 0.6 + 0.4 * exp(-2), evaluated independently to 16 digits.
  EXPECT_NEAR(surrogate_fitness(8, 1'000'000), 0.6541341132946451, 1e-15);
  EXPECT_NEAR(surrogate_fitness(8, 1'000'000), 0.65413, 5e-6);
}

TEST(Surrogate, DecodesToComputeParams) {
  SearchSpaceConfig cfg;
  // 39,431 params, one gene.
  const double expected = 0.6 * std::exp(-49.0 / 8.0) +
                          0.4 * std::exp(-std::pow(std::log10(39431.0) - 7.0, 2) / 0.5);
  EXPECT_DOUBLE_EQ(surrogate_evaluate(parse("S64.64"), cfg), expected);
}

TEST(Surrogate, Pure) {
  SearchSpaceConfig cfg;
  const Genome g = parse("S64.128|Pmax|S256.512|S512.512|Pmean");
  const double first = surrogate_evaluate(g, cfg);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(surrogate_evaluate(g, cfg), first);
  SurrogateEvaluator evaluator(cfg);
  EXPECT_TRUE(evaluator.deterministic());
  EXPECT_EQ(evaluator.evaluate(g, {}, {}), first);
}

TEST(Surrogate, PropagatesDecodeError) {
  EXPECT_THROW(surrogate_evaluate(parse("S64.100"), SearchSpaceConfig{}), DecodeError);
}

TEST(External, Echo) {
  auto evaluator = stub::spawn("--mode echo --fitness 0.42", 10s);
  EXPECT_EQ(evaluator.evaluate_request(stub::request("S64.64")), 0.42);
  EXPECT_EQ(evaluator.evaluate_request(stub::request("Pmax")), 0.42);
  EXPECT_EQ(evaluator.connections_opened(), 1u);
  EXPECT_EQ(evaluator.retries(), 0u);
}

TEST(External, SendsArchitecture) {
  SearchSpaceConfig cfg;
  auto evaluator = stub::spawn("--mode hash", 10s);
  const Genome g = parse("S64.128|Pmax");
  const double v = evaluator.evaluate(g, to_json(decode(g, cfg)), TrainingBudget{3, {}});
  EXPECT_GE(v, 0.0);
  EXPECT_LE(v, 1.0);
  EXPECT_EQ(evaluator.evaluate(g, to_json(decode(g, cfg)), TrainingBudget{3, {}}), v);
}

TEST(External, ErrorReplyIsWorkerError) {
  auto evaluator = stub::spawn("--mode error", 10s);
  try {
    evaluator.evaluate_request(stub::request("S64.64"));
    FAIL();
  } catch (const WorkerError& e) {
    EXPECT_NE(std::string(e.what()).find("out of memory"), std::string::npos);
  }
  // The channel survives a worker-reported failure.
  EXPECT_THROW(evaluator.evaluate_request(stub::request("S64.64")), WorkerError);
  EXPECT_EQ(evaluator.connections_opened(), 1u);
}

TEST(External, TimeoutThenSuccessfulRetry) {
  stub::TempDir dir("delay_first");
  auto evaluator = stub::spawn(
      "--mode delay-first --delay-ms 3000 --marker '" + (dir / "m").string() + "' --log '" +
          (dir / "log").string() + "'",
      500ms);
  EXPECT_EQ(evaluator.evaluate_request(stub::request("S64.64")), 0.42);
  EXPECT_EQ(evaluator.retries(), 1u);
  EXPECT_EQ(evaluator.connections_opened(), 2u);
}

TEST(External, PersistentTimeout) {
  auto evaluator = stub::spawn("--mode delay-always --delay-ms 3000", 300ms);
  const auto start = std::chrono::steady_clock::now();
  EXPECT_THROW(evaluator.evaluate_request(stub::request("S64.64")), TimeoutError);
  EXPECT_EQ(evaluator.retries(), 1u);
  EXPECT_LT(std::chrono::steady_clock::now() - start, 2500ms);
}

TEST(External, WorkerDeathIsRetried) {
  stub::TempDir dir("die_first");
  auto evaluator = stub::spawn("--mode die-first --marker '" + (dir / "m").string() + "'", 10s);
  EXPECT_EQ(evaluator.evaluate_request(stub::request("S64.64")), 0.42);
  EXPECT_EQ(evaluator.retries(), 1u);
}

TEST(External, MalformedReplyIsProtocolError) {
  auto evaluator = stub::spawn("--mode malformed", 10s);
  EXPECT_THROW(evaluator.evaluate_request(stub::request("S64.64")), ProtocolError);
  EXPECT_EQ(evaluator.retries(), 0u);
}

TEST(External, MismatchedIdIsProtocolError) {
  auto evaluator = stub::spawn("--mode wrong-id", 10s);
  EXPECT_THROW(evaluator.evaluate_request(stub::request("S64.64")), ProtocolError);
}

TEST(External, VersionMismatch) {
  auto evaluator = stub::spawn("--mode bad-version", 10s);
  EXPECT_THROW(evaluator.evaluate_request(stub::request("S64.64")), VersionError);
}

TEST(External, MissingWorkerFailsCleanly) {
  ExternalEvaluator::Options options;
  options.timeout = 5s;
  auto evaluator = ExternalEvaluator::spawning("/nonexistent/worker", options);
  EXPECT_THROW(evaluator.evaluate_request(stub::request("S64.64")), TransportError);
}

TEST(StubWorker, DuplicateIdTrainsOnce) {
  stub::TempDir dir("dup");
  auto evaluator = stub::spawn("--mode hash --log '" + (dir / "log").string() + "'", 10s);
  const double a = evaluator.evaluate_request(stub::request("S64.64|Pmax"));
  const double b = evaluator.evaluate_request(stub::request("S64.64|Pmax"));
  EXPECT_EQ(a, b);
  EXPECT_EQ(stub::read_lines(dir / "log"), std::vector<std::string>{"S64.64|Pmax"});
}

TEST(StubWorker, MalformedRequestGetsErrorAndWorkerStaysUp) {
  SubprocessChannel channel(stub::command("--mode echo"));
  channel.write_line(protocol::encode(protocol::Hello{}));
  ASSERT_TRUE(channel.read_line(5s));
  channel.write_line("{not json\n");
  const auto reply = channel.read_line(5s);
  ASSERT_TRUE(reply);
  EXPECT_TRUE(std::holds_alternative<protocol::ErrorReply>(protocol::decode(*reply)));
  channel.write_line(protocol::encode(stub::request("S64.64")));
  const auto result = channel.read_line(5s);
  ASSERT_TRUE(result);
  EXPECT_EQ(std::get<protocol::Result>(protocol::decode(*result)).fitness, 0.42);
}

TEST(External, OverTcp) {
  stub::TempDir dir("tcp");
  int port = 0;
  auto server = stub::listen("--mode hash", dir / "port", port);
  ASSERT_GT(port, 0);
  ExternalEvaluator::Options options;
  options.timeout = 10s;
  auto evaluator = ExternalEvaluator::connecting("127.0.0.1:" + std::to_string(port), options);
  const double v = evaluator.evaluate_request(stub::request("S64.64"));
  EXPECT_EQ(evaluator.evaluate_request(stub::request("S64.64")), v);
}

TEST(External, BadAddress) {
  EXPECT_THROW(TcpChannel::connect("localhost"), TransportError);
  EXPECT_THROW(TcpChannel::connect("127.0.0.1:1"), TransportError);
}

TEST(External, ConcurrentConnections) {
  auto evaluator = stub::spawn("--mode hash", 10s, 3);
  std::vector<double> results(12);
  {
    std::vector<std::jthread> threads;
    for (std::size_t i = 0; i < results.size(); ++i) {
      threads.emplace_back([&, i] {
        results[i] = evaluator.evaluate_request(stub::request("S" + std::to_string(i % 4 + 1) + ".64"));
      });
    }
  }
  for (std::size_t i = 4; i < results.size(); ++i) EXPECT_EQ(results[i], results[i % 4]);
  EXPECT_LE(evaluator.connections_opened(), 3u);
}

}  // namespace
}  // namespace evonas
