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

// Test-only reference implementations. Nothing here calls the decoder.

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "evonas/genome.hpp"

namespace evonas::oracle {

// Lists every weight and bias tensor a genome's network owns, straight from
// the genes, and multiplies out the dimensions.
inline std::vector<std::vector<std::uint64_t>> weight_tensors(const Genome& genome,
                                                              const SearchSpaceConfig& cfg) {
  std::vector<std::vector<std::uint64_t>> tensors;
  std::uint64_t c = static_cast<std::uint64_t>(cfg.input_shape.channels);
  for (const auto& gene : genome) {
    const auto* skip = std::get_if<SkipGene>(&gene);
    if (skip == nullptr) continue;  // pooling has no weights
    const auto f1 = static_cast<std::uint64_t>(skip->f1);
    const auto f2 = static_cast<std::uint64_t>(skip->f2);
    tensors.push_back({f1, c, 3, 3});
    tensors.push_back({f1});
    tensors.push_back({f2, f1, 3, 3});
    tensors.push_back({f2});
    if (c != f2) {
      tensors.push_back({f2, c, 1, 1});
      tensors.push_back({f2});
    }
    c = f2;
  }
  const auto k = static_cast<std::uint64_t>(cfg.num_classes);
  tensors.push_back({k, c});
  tensors.push_back({k});
  return tensors;
}

inline std::uint64_t param_count(const Genome& genome, const SearchSpaceConfig& cfg) {
  std::uint64_t total = 0;
  for (const auto& dims : weight_tensors(genome, cfg)) {
    std::uint64_t n = 1;
    for (auto d : dims) n *= d;
    total += n;
  }
  return total;
}

// Every genome of length 1..max_length over the configured alphabet that
// respects the pool budget.
inline std::vector<Genome> enumerate_valid(const SearchSpaceConfig& cfg) {
  std::vector<LayerGene> alphabet;
  for (int f1 : cfg.feature_maps) {
    for (int f2 : cfg.feature_maps) alphabet.emplace_back(SkipGene{f1, f2});
  }
  alphabet.emplace_back(PoolGene{PoolKind::max});
  alphabet.emplace_back(PoolGene{PoolKind::mean});

  std::vector<Genome> out;
  std::vector<LayerGene> prefix;
  std::function<void(int)> grow = [&](int pools) {
    if (!prefix.empty()) out.emplace_back(prefix);
    if (prefix.size() == static_cast<std::size_t>(cfg.max_length)) return;
    for (const auto& gene : alphabet) {
      const int p = pools + (std::holds_alternative<PoolGene>(gene) ? 1 : 0);
      if (p > cfg.max_pools) continue;
      prefix.push_back(gene);
      grow(p);
      prefix.pop_back();
    }
  };
  grow(0);
  return out;
}

}  // namespace evonas::oracle
