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

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "evonas/channel.hpp"
#include "evonas/decoder.hpp"
#include "evonas/error.hpp"
#include "evonas/genome.hpp"
#include "evonas/protocol.hpp"

namespace evonas {

/// How long each evaluation trains and on what data. `dataset` is passed
/// through to workers untouched: {"train_path", "val_path"} or a synthetic
/// spec.
struct TrainingBudget {
  int epochs = 600;
  nlohmann::json dataset = nlohmann::json::object();
};

/// Fitness source. Implementations must tolerate concurrent evaluate() calls.
class Evaluator {
 public:
  virtual ~Evaluator() = default;

  /// Best validation accuracy in [0, 1] reached while training `genome`.
  virtual double evaluate(const Genome& genome, const nlohmann::json& architecture,
                          const TrainingBudget& budget) = 0;

  /// True when identical architectures always score identically.
  virtual bool deterministic() const = 0;

  /// Short identity used in cache fingerprints.
  virtual std::string description() const = 0;
};

// ---------------------------------------------------------------------------
// Surrogate

/// Smooth stand-in for trained accuracy: a Gaussian bump in depth centred on
/// 8 genes plus one in log10(parameters) centred on 1e7, weighted 0.6/0.4.
inline double surrogate_fitness(std::size_t gene_count, std::uint64_t params) {
  const double depth = static_cast<double>(gene_count) - 8.0;
  const double width = std::log10(static_cast<double>(params)) - 7.0;
  const double v = 0.6 * std::exp(-depth * depth / 8.0) +
                   0.4 * std::exp(-width * width / 0.5);
  return std::clamp(v, 0.0, 1.0);
}

inline double surrogate_evaluate(const Genome& genome, const SearchSpaceConfig& cfg) {
  return surrogate_fitness(genome.size(), count_params(decode(genome, cfg)));
}

class SurrogateEvaluator : public Evaluator {
 public:
  explicit SurrogateEvaluator(SearchSpaceConfig cfg) : cfg_(std::move(cfg)) {}

  double evaluate(const Genome& genome, const nlohmann::json&,
                  const TrainingBudget&) override {
    return surrogate_evaluate(genome, cfg_);
  }
  bool deterministic() const override { return true; }
  std::string description() const override { return "surrogate"; }

 private:
  SearchSpaceConfig cfg_;
};

// ---------------------------------------------------------------------------
// External worker

/// Delegates evaluation to worker processes speaking the line protocol.
///
/// Holds up to `connections` channels; each carries one request at a time.
/// A request that hits a transport failure or timeout is re-sent once with
/// the same id on a fresh connection.
class ExternalEvaluator : public Evaluator {
 public:
  using ChannelFactory = std::function<std::unique_ptr<LineChannel>()>;

  struct Options {
    std::chrono::milliseconds timeout{std::chrono::hours(24)};
    std::size_t connections = 1;
    bool deterministic = true;
  };

  ExternalEvaluator(ChannelFactory factory, Options options)
      : factory_(std::move(factory)), options_(options) {
    if (options_.connections < 1) throw ConfigError("worker connections must be >= 1");
    slots_.resize(options_.connections);
  }

  static ExternalEvaluator spawning(std::string command, Options options) {
    return ExternalEvaluator(
        [command] { return std::make_unique<SubprocessChannel>(command); }, options);
  }

  static ExternalEvaluator connecting(std::string address, Options options) {
    return ExternalEvaluator([address] { return TcpChannel::connect(address); }, options);
  }

  ExternalEvaluator(ExternalEvaluator&& other) noexcept
      : factory_(std::move(other.factory_)),
        options_(other.options_),
        slots_(std::move(other.slots_)) {}

  double evaluate(const Genome& genome, const nlohmann::json& architecture,
                  const TrainingBudget& budget) override {
    return evaluate_request(
        protocol::EvaluateRequest{serialize(genome), architecture, budget.epochs, budget.dataset});
  }

  bool deterministic() const override { return options_.deterministic; }
  std::string description() const override { return "external"; }

  /// Sends one request and waits for the result with the same id.
  double evaluate_request(const protocol::EvaluateRequest& request) {
    Lease lease(*this);
    Slot& slot = lease.slot();
    try {
      return attempt(slot, request);
    } catch (const TransportError&) {
      slot.channel.reset();
      ++retries_;
    }
    return attempt(slot, request);
  }

  std::size_t retries() const noexcept { return retries_.load(); }
  std::size_t connections_opened() const noexcept { return connects_.load(); }

 private:
  struct Slot {
    std::unique_ptr<LineChannel> channel;
    bool busy = false;
  };

  class Lease {
   public:
    explicit Lease(ExternalEvaluator& owner) : owner_(owner) {
      std::unique_lock lock(owner_.mutex_);
      owner_.available_.wait(lock, [this] {
        for (auto& s : owner_.slots_) {
          if (!s.busy) {
            slot_ = &s;
            return true;
          }
        }
        return false;
      });
      slot_->busy = true;
    }
    ~Lease() {
      {
        std::lock_guard lock(owner_.mutex_);
        slot_->busy = false;
      }
      owner_.available_.notify_one();
    }
    Lease(const Lease&) = delete;
    Lease& operator=(const Lease&) = delete;
    Slot& slot() { return *slot_; }

   private:
    ExternalEvaluator& owner_;
    Slot* slot_ = nullptr;
  };

  protocol::Message receive(LineChannel& channel, const char* waiting_for) {
    auto line = channel.read_line(options_.timeout);
    if (!line) {
      throw TimeoutError(channel.describe() + " did not answer " + waiting_for + " within " +
                         std::to_string(options_.timeout.count()) + " ms");
    }
    return protocol::decode(*line);
  }

  void connect(Slot& slot) {
    slot.channel = factory_();
    ++connects_;
    slot.channel->write_line(protocol::encode(protocol::Hello{}));
    const auto reply = receive(*slot.channel, "the handshake");
    const auto* hello = std::get_if<protocol::Hello>(&reply);
    if (hello == nullptr) {
      throw ProtocolError("expected hello from worker", protocol::encode(reply));
    }
    if (hello->protocol_version != protocol::kProtocolVersion) {
      throw VersionError("worker speaks protocol version " +
                         std::to_string(hello->protocol_version) + ", engine speaks " +
                         std::to_string(protocol::kProtocolVersion));
    }
  }

  /// One send/receive round. Any failure other than a worker-reported error
  /// leaves the stream in an unknown state, so the channel is dropped.
  double attempt(Slot& slot, const protocol::EvaluateRequest& request) {
    try {
      return exchange(slot, request);
    } catch (const WorkerError&) {
      throw;
    } catch (...) {
      slot.channel.reset();
      throw;
    }
  }

  double exchange(Slot& slot, const protocol::EvaluateRequest& request) {
    if (!slot.channel) connect(slot);
    slot.channel->write_line(protocol::encode(request));
    const auto reply = receive(*slot.channel, ("request " + request.id).c_str());
    if (const auto* result = std::get_if<protocol::Result>(&reply)) {
      if (result->id != request.id) {
        throw ProtocolError("result for unexpected id (pending " + request.id + ")",
                            protocol::encode(reply));
      }
      return result->fitness;
    }
    if (const auto* error = std::get_if<protocol::ErrorReply>(&reply)) {
      if (!error->id.empty() && error->id != request.id) {
        throw ProtocolError("error for unexpected id (pending " + request.id + ")",
                            protocol::encode(reply));
      }
      throw WorkerError("worker failed on " + request.id + ": " + error->message);
    }
    throw ProtocolError("unexpected message while waiting for a result",
                        protocol::encode(reply));
  }

  ChannelFactory factory_;
  Options options_;
  std::mutex mutex_;
  std::condition_variable available_;
  std::vector<Slot> slots_;
  std::atomic<std::size_t> retries_{0};
  std::atomic<std::size_t> connects_{0};
};

}  // namespace evonas
