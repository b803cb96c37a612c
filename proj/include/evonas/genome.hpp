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

/// @file genome.hpp
/// Variable-length architecture encoding.
///
/// A genome is an ordered list of layer genes. A skip gene stands for a
/// residual block of two 3x3 convolutions (f1 then f2 output channels) whose
/// input is added back onto its output; a pool gene stands for a 2x2 max or
/// mean pooling layer. The text form "S64.128|Pmax" is both the
/// serialization and the cache identity of a genome.

#pragma once

#include <algorithm>
#include <charconv>
#include <compare>
#include <cstdlib>
#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "evonas/error.hpp"
#include "evonas/random.hpp"

namespace evonas {

enum class PoolKind { max, mean };

inline std::string_view to_string(PoolKind kind) {
  return kind == PoolKind::max ? "max" : "mean";
}

struct SkipGene {
  int f1 = 64;
  int f2 = 64;
  friend bool operator==(const SkipGene&, const SkipGene&) = default;
};

struct PoolGene {
  PoolKind kind = PoolKind::max;
  friend bool operator==(const PoolGene&, const PoolGene&) = default;
};

using LayerGene = std::variant<SkipGene, PoolGene>;

inline bool is_skip(const LayerGene& gene) {
  return std::holds_alternative<SkipGene>(gene);
}
inline bool is_pool(const LayerGene& gene) {
  return std::holds_alternative<PoolGene>(gene);
}

struct TensorShape {
  int channels = 1;
  int height = 1;
  int width = 1;
  friend bool operator==(const TensorShape&, const TensorShape&) = default;
};

inline std::string to_string(const TensorShape& s) {
  return std::to_string(s.channels) + "x" + std::to_string(s.height) + "x" +
         std::to_string(s.width);
}

/// Largest pooling count that keeps every spatial dimension >= 1.
/// For stride > 1 this is floor(log_stride(min(height, width))); a stride-1
/// pool shrinks each side by one, so min(height, width) - 1 pools fit.
inline int max_pools_bound(const TensorShape& input, int pool_stride) {
  const int side = std::min(input.height, input.width);
  if (side < 2 || pool_stride < 1) return 0;
  if (pool_stride == 1) return side - 1;
  int count = 0;
  for (long long reach = pool_stride; reach <= side; reach *= pool_stride) {
    ++count;
  }
  return count;
}

struct SearchSpaceConfig {
  std::vector<int> feature_maps{64, 128, 256, 512};
  int max_length = 20;
  int max_pools = 5;  // max_pools_bound({3, 32, 32}, 2)
  TensorShape input_shape{3, 32, 32};
  int num_classes = 7;
  int pool_stride = 2;

  bool allows_channels(int channels) const {
    return std::find(feature_maps.begin(), feature_maps.end(), channels) !=
           feature_maps.end();
  }

  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    if (feature_maps.empty()) out.emplace_back("feature_maps is empty");
    for (int f : feature_maps) {
      if (f < 1) out.push_back("feature map count " + std::to_string(f) + " < 1");
    }
    if (max_length < 1) out.emplace_back("max_length < 1");
    if (input_shape.channels < 1 || input_shape.height < 1 ||
        input_shape.width < 1) {
      out.emplace_back("input_shape dimensions must be >= 1");
    }
    if (num_classes < 1) out.emplace_back("num_classes < 1");
    if (pool_stride < 1) out.emplace_back("pool_stride < 1");
    if (max_pools < 0) out.emplace_back("max_pools < 0");
    if (pool_stride >= 1 &&
        max_pools > max_pools_bound(input_shape, pool_stride)) {
      out.push_back("max_pools " + std::to_string(max_pools) +
                    " exceeds the bound " +
                    std::to_string(max_pools_bound(input_shape, pool_stride)) +
                    " for input " + to_string(input_shape) + " and stride " +
                    std::to_string(pool_stride));
    }
    return out;
  }

  void check() const {
    auto problems = violations();
    if (problems.empty()) return;
    std::string message = "invalid search space:";
    for (const auto& p : problems) message += " " + p + ";";
    throw ConfigError(message);
  }

  /// Identity of everything that changes the fitness of a given genome id.
  std::string fingerprint() const {
    return "input=" + to_string(input_shape) +
           ";classes=" + std::to_string(num_classes) +
           ";pool_stride=" + std::to_string(pool_stride);
  }
};

/// Canonical string identity of a genome (equal iff the gene sequences are).
struct GenomeId {
  std::string value;
  friend auto operator<=>(const GenomeId&, const GenomeId&) = default;
};

class Genome {
 public:
  Genome() = default;
  explicit Genome(std::vector<LayerGene> genes) : genes_(std::move(genes)) {}
  Genome(std::initializer_list<LayerGene> genes) : genes_(genes) {}

  const std::vector<LayerGene>& genes() const noexcept { return genes_; }
  std::size_t size() const noexcept { return genes_.size(); }
  bool empty() const noexcept { return genes_.empty(); }
  const LayerGene& operator[](std::size_t i) const { return genes_[i]; }
  auto begin() const noexcept { return genes_.begin(); }
  auto end() const noexcept { return genes_.end(); }

  std::size_t skip_count() const {
    return static_cast<std::size_t>(
        std::count_if(genes_.begin(), genes_.end(), is_skip));
  }
  std::size_t pool_count() const {
    return static_cast<std::size_t>(
        std::count_if(genes_.begin(), genes_.end(), is_pool));
  }

  friend bool operator==(const Genome&, const Genome&) = default;

 private:
  std::vector<LayerGene> genes_;
};

// ---------------------------------------------------------------------------
// Text form

inline void append_gene_text(std::string& out, const LayerGene& gene) {
  if (const auto* skip = std::get_if<SkipGene>(&gene)) {
    out += 'S';
    out += std::to_string(skip->f1);
    out += '.';
    out += std::to_string(skip->f2);
  } else {
    out += std::get<PoolGene>(gene).kind == PoolKind::max ? "Pmax" : "Pmean";
  }
}

inline std::string serialize(const Genome& genome) {
  std::string out;
  for (std::size_t i = 0; i < genome.size(); ++i) {
    if (i > 0) out += '|';
    append_gene_text(out, genome[i]);
  }
  return out;
}

inline GenomeId canonical_id(const Genome& genome) {
  return GenomeId{serialize(genome)};
}

namespace detail {

inline int parse_channels(std::string_view digits, std::string_view token) {
  int value = 0;
  const auto* first = digits.data();
  const auto* last = digits.data() + digits.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  const bool leading_zero = digits.size() > 1 && digits.front() == '0';
  if (digits.empty() || ec != std::errc{} || ptr != last || value < 1 ||
      leading_zero) {
    throw ParseError("non-integer channel count in gene '" +
                     std::string(token) + "'");
  }
  return value;
}

inline LayerGene parse_gene(std::string_view token) {
  if (token == "Pmax") return PoolGene{PoolKind::max};
  if (token == "Pmean") return PoolGene{PoolKind::mean};
  if (!token.empty() && token.front() == 'S') {
    const auto body = token.substr(1);
    const auto dot = body.find('.');
    if (dot == std::string_view::npos) {
      throw ParseError("malformed skip gene '" + std::string(token) +
                       "' (expected S<f1>.<f2>)");
    }
    return SkipGene{parse_channels(body.substr(0, dot), token),
                    parse_channels(body.substr(dot + 1), token)};
  }
  throw ParseError("unknown gene tag '" + std::string(token) + "'");
}

}  // namespace detail

/// Inverse of serialize(). Does not check the genome against a search space;
/// run validate() for that.
inline Genome parse(std::string_view text) {
  if (text.empty()) throw ParseError("empty genome text");
  std::vector<LayerGene> genes;
  std::size_t start = 0;
  while (true) {
    const auto bar = text.find('|', start);
    const auto token = text.substr(start, bar == std::string_view::npos
                                              ? std::string_view::npos
                                              : bar - start);
    if (token.empty()) throw ParseError("empty gene in '" + std::string(text) + "'");
    genes.push_back(detail::parse_gene(token));
    if (bar == std::string_view::npos) break;
    start = bar + 1;
  }
  return Genome(std::move(genes));
}

// ---------------------------------------------------------------------------
// Validity

inline std::vector<std::string> validate(const Genome& genome,
                                         const SearchSpaceConfig& cfg) {
  std::vector<std::string> out;
  if (genome.empty()) out.emplace_back("length < 1");
  if (genome.size() > static_cast<std::size_t>(cfg.max_length)) {
    out.push_back("length > max_length (" + std::to_string(genome.size()) +
                  " > " + std::to_string(cfg.max_length) + ")");
  }
  for (std::size_t i = 0; i < genome.size(); ++i) {
    if (const auto* skip = std::get_if<SkipGene>(&genome[i])) {
      if (!cfg.allows_channels(skip->f1)) {
        out.push_back("gene " + std::to_string(i) +
                      ": f1 not in feature-map set (" +
                      std::to_string(skip->f1) + ")");
      }
      if (!cfg.allows_channels(skip->f2)) {
        out.push_back("gene " + std::to_string(i) +
                      ": f2 not in feature-map set (" +
                      std::to_string(skip->f2) + ")");
      }
    }
  }
  if (genome.pool_count() > static_cast<std::size_t>(std::max(cfg.max_pools, 0))) {
    out.push_back("pool count > max_pools (" +
                  std::to_string(genome.pool_count()) + " > " +
                  std::to_string(cfg.max_pools) + ")");
  }
  return out;
}

inline bool is_valid(const Genome& genome, const SearchSpaceConfig& cfg) {
  return validate(genome, cfg).empty();
}

// ---------------------------------------------------------------------------
// Random generation and repair

/// Probability that a freshly drawn gene is a skip gene.
inline constexpr double kSkipGeneProbability = 0.7;

inline int random_channels(const SearchSpaceConfig& cfg, Rng& rng) {
  return cfg.feature_maps[rng.index(cfg.feature_maps.size())];
}

inline SkipGene random_skip_gene(const SearchSpaceConfig& cfg, Rng& rng) {
  const int f1 = random_channels(cfg, rng);
  const int f2 = random_channels(cfg, rng);
  return SkipGene{f1, f2};
}

inline PoolGene random_pool_gene(Rng& rng) {
  return PoolGene{rng.coin() ? PoolKind::mean : PoolKind::max};
}

inline Genome random_genome(const SearchSpaceConfig& cfg, Rng& rng) {
  const std::size_t length =
      rng.between(1, static_cast<std::size_t>(cfg.max_length));
  std::vector<LayerGene> genes;
  genes.reserve(length);
  int pools = 0;
  for (std::size_t i = 0; i < length; ++i) {
    const bool want_skip = rng.uniform01() < kSkipGeneProbability;
    if (!want_skip && pools < cfg.max_pools) {
      genes.emplace_back(random_pool_gene(rng));
      ++pools;
    } else {
      genes.emplace_back(random_skip_gene(cfg, rng));
    }
  }
  return Genome(std::move(genes));
}

namespace detail {

inline int nearest_allowed(int channels, const SearchSpaceConfig& cfg) {
  int best = cfg.feature_maps.front();
  for (int f : cfg.feature_maps) {
    const int gap = std::abs(f - channels);
    const int best_gap = std::abs(best - channels);
    if (gap < best_gap || (gap == best_gap && f < best)) best = f;
  }
  return best;
}

}  // namespace detail

/// Smallest edit that makes `genome` valid under `cfg`: out-of-set channel
/// counts snap to the nearest allowed value, an overlong tail is truncated,
/// trailing pool genes are dropped until the pool budget holds, and an empty
/// result receives one random skip gene. Valid input is returned unchanged
/// and rng is not consumed.
inline Genome repair(const Genome& genome, const SearchSpaceConfig& cfg,
                     Rng& rng) {
  if (is_valid(genome, cfg)) return genome;

  std::vector<LayerGene> genes = genome.genes();
  for (auto& gene : genes) {
    if (auto* skip = std::get_if<SkipGene>(&gene)) {
      if (!cfg.allows_channels(skip->f1)) skip->f1 = detail::nearest_allowed(skip->f1, cfg);
      if (!cfg.allows_channels(skip->f2)) skip->f2 = detail::nearest_allowed(skip->f2, cfg);
    }
  }
  if (genes.size() > static_cast<std::size_t>(cfg.max_length)) {
    genes.resize(static_cast<std::size_t>(cfg.max_length));
  }
  auto pools = static_cast<long>(std::count_if(genes.begin(), genes.end(), is_pool));
  for (auto i = static_cast<long>(genes.size()) - 1;
       i >= 0 && pools > cfg.max_pools; --i) {
    if (is_pool(genes[static_cast<std::size_t>(i)])) {
      genes.erase(genes.begin() + i);
      --pools;
    }
  }
  if (genes.empty()) genes.emplace_back(random_skip_gene(cfg, rng));
  return Genome(std::move(genes));
}

}  // namespace evonas

template <>
struct std::hash<evonas::GenomeId> {
  std::size_t operator()(const evonas::GenomeId& id) const noexcept {
    return std::hash<std::string>{}(id.value);
  }
};
