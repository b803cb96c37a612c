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

#include <cassert>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <string_view>

#include "evonas/error.hpp"

namespace evonas {

/// Seeded random source. Every stochastic operation takes one explicitly;
/// the full engine state can be saved and restored for checkpointing.
class Rng {
 public:
  using engine_type = std::mt19937_64;

  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  /// Uniform on [0, n). n must be positive.
  std::size_t index(std::size_t n) {
    assert(n > 0);
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

  /// Uniform on [lo, hi], inclusive.
  std::size_t between(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(engine_);
  }

  double uniform01() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
  }

  bool coin() { return index(2) == 1; }

  engine_type& engine() noexcept { return engine_; }

  std::string state() const {
    std::ostringstream out;
    out << engine_;
    return out.str();
  }

  void set_state(std::string_view text) {
    std::istringstream in{std::string(text)};
    engine_type restored;
    in >> restored;
    if (in.fail()) throw FormatError("invalid random-engine state");
    engine_ = restored;
  }

 private:
  engine_type engine_;
};

}  // namespace evonas
