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

/// @file commands.hpp
/// The operations behind each CLI subcommand. They write to the given
/// streams and return a process exit status: 0 on success, 1 on a runtime
/// failure, 2 on bad input or configuration.

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "evonas/cache.hpp"
#include "evonas/config.hpp"
#include "evonas/decoder.hpp"
#include "evonas/error.hpp"
#include "evonas/genome.hpp"
#include "evonas/search.hpp"

namespace evonas {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

inline constexpr const char* kBestGenomeFile = "best_genome.txt";
inline constexpr const char* kArchitectureFile = "architecture.json";
inline constexpr const char* kHistoryFile = "history.json";

/// {"seed", "best": {"genome", "fitness", "layers", "params"}, "generations": [...]}
inline nlohmann::json history_document(const SearchResult& result, const SearchSpaceConfig& space,
                                       std::uint64_t seed) {
  const auto graph = decode(result.best.genome, space);
  return {{"seed", seed},
          {"best",
           {{"genome", serialize(result.best.genome)},
            {"fitness", *result.best.fitness},
            {"layers", count_layers(result.best.genome)},
            {"params", count_params(graph)}}},
          {"generations", to_json(result.history)}};
}

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace detail

/// Writes best_genome.txt, architecture.json and history.json into `dir`.
inline void write_search_outputs(const SearchResult& result, const SearchSpaceConfig& space,
                                 std::uint64_t seed, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  detail::write_text(dir / kBestGenomeFile, serialize(result.best.genome) + "\n");
  detail::write_text(dir / kArchitectureFile,
                     render(decode(result.best.genome, space), RenderFormat::json));
  detail::write_text(dir / kHistoryFile, history_document(result, space, seed).dump(2) + "\n");
}

struct SearchOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> resume;
  std::optional<std::size_t> generations;
  std::optional<std::size_t> population_size;
  std::optional<std::filesystem::path> output_path;
};

inline int cmd_search(RunConfig cfg, const SearchOverrides& overrides, std::ostream& out,
                      std::ostream& err) {
  try {
    if (overrides.seed) cfg.evolution.seed = *overrides.seed;
    if (overrides.generations) cfg.evolution.generations = *overrides.generations;
    if (overrides.population_size) cfg.evolution.population_size = *overrides.population_size;
    if (overrides.output_path) cfg.output_path = *overrides.output_path;
    cfg.space.check();
    cfg.evolution.check();

    std::optional<Checkpoint> resume;
    if (overrides.resume) resume = Checkpoint::load(*overrides.resume);

    auto evaluator = make_evaluator(cfg);
    const auto fingerprint = cache_fingerprint(cfg, *evaluator);
    const auto cache_path = cfg.resolved_cache_path();
    FitnessCache cache = std::filesystem::exists(cache_path)
                             ? FitnessCache::restore(cache_path, fingerprint, cfg.cache_conflict)
                             : FitnessCache(fingerprint, cfg.cache_conflict);

    std::filesystem::create_directories(cfg.output_path);
    SearchOptions options;
    options.budget = cfg.budget;
    options.eval_threads = cfg.eval_threads;
    options.cache_path = cache_path;
    options.checkpoint_path = cfg.resolved_checkpoint_path();
    options.on_generation = [&out](const GenerationRecord& r) {
      out << progress_line(r) << std::endl;
    };

    const auto result = run_search(cfg.space, cfg.evolution, *evaluator, cache, options,
                                   resume ? &*resume : nullptr);
    write_search_outputs(result, cfg.space, cfg.evolution.seed, cfg.output_path);
    out << "best=" << serialize(result.best.genome) << " fitness=" << *result.best.fitness
        << "\n";
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    if (std::filesystem::exists(cfg.resolved_checkpoint_path())) {
      err << "checkpoint retained at " << cfg.resolved_checkpoint_path().string()
          << " (resume with --resume)\n";
    }
    return kExitFailure;
  }
}

/// "CxHxW" -> TensorShape
inline TensorShape parse_shape(const std::string& text) {
  TensorShape shape;
  char x1 = 0;
  char x2 = 0;
  std::istringstream in(text);
  if (!(in >> shape.channels >> x1 >> shape.height >> x2 >> shape.width) || x1 != 'x' ||
      x2 != 'x' || in.peek() != std::char_traits<char>::eof() || shape.channels < 1 ||
      shape.height < 1 || shape.width < 1) {
    throw ConfigError("input shape must look like CxHxW with positive integers, got '" + text + "'");
  }
  return shape;
}

/// Decodes arbitrary genome text: the feature-map set is whatever the genome
/// uses, and the pool budget is the largest the input shape allows.
inline int cmd_decode(const std::string& genome_text, const TensorShape& input_shape,
                      int classes, RenderFormat format, int pool_stride, std::ostream& out,
                      std::ostream& err) {
  try {
    const Genome genome = parse(genome_text);
    SearchSpaceConfig space;
    space.input_shape = input_shape;
    space.num_classes = classes;
    space.pool_stride = pool_stride;
    space.max_length = static_cast<int>(genome.size());
    space.max_pools = max_pools_bound(input_shape, pool_stride);
    space.feature_maps.clear();
    for (const auto& gene : genome) {
      if (const auto* skip = std::get_if<SkipGene>(&gene)) {
        space.feature_maps.push_back(skip->f1);
        space.feature_maps.push_back(skip->f2);
      }
    }
    if (space.feature_maps.empty()) space.feature_maps.push_back(input_shape.channels);
    if (classes < 1) throw ConfigError("classes must be >= 1");

    const auto graph = decode(genome, space);
    out << render(graph, format);
    out << "layers=" << count_layers(genome) << " params=" << count_params(graph) << "\n";
    return kExitOk;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

inline int cmd_cache_stats(const std::filesystem::path& path, std::ostream& out,
                           std::ostream& err) {
  try {
    const auto cache = FitnessCache::restore(path);
    const auto entries = cache.entries();
    out << "entries=" << entries.size();
    if (!entries.empty()) {
      double lo = entries.front().second;
      double hi = lo;
      double sum = 0.0;
      for (const auto& [id, fitness] : entries) {
        lo = std::min(lo, fitness);
        hi = std::max(hi, fitness);
        sum += fitness;
      }
      out << " min=" << lo << " mean=" << sum / static_cast<double>(entries.size())
          << " max=" << hi;
    }
    out << "\n";
    if (!cache.fingerprint().empty()) out << "fingerprint=" << cache.fingerprint() << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

/// One-off evaluation through the configured evaluator and cache.
inline int cmd_evaluate(const RunConfig& cfg, const std::string& genome_text, std::ostream& out,
                        std::ostream& err) {
  try {
    Population single;
    single.members.push_back(Individual{parse(genome_text), std::nullopt});
    if (auto problems = validate(single.members[0].genome, cfg.space); !problems.empty()) {
      throw ConfigError("genome is invalid under the configured search space: " + problems.front());
    }
    auto evaluator = make_evaluator(cfg);
    const auto cache_path = cfg.resolved_cache_path();
    const auto fingerprint = cache_fingerprint(cfg, *evaluator);
    FitnessCache cache = std::filesystem::exists(cache_path)
                             ? FitnessCache::restore(cache_path, fingerprint, cfg.cache_conflict)
                             : FitnessCache(fingerprint, cfg.cache_conflict);
    const auto summary = evaluate_population(single, *evaluator, cache, cfg.space, cfg.budget);
    if (summary.evaluations > 0) {
      std::filesystem::create_directories(cache_path.parent_path().empty()
                                              ? std::filesystem::path(".")
                                              : cache_path.parent_path());
      cache.persist(cache_path);
    }
    out << "fitness=" << *single.members[0].fitness
        << " cached=" << (summary.hits > 0 ? "yes" : "no") << "\n";
    return kExitOk;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace evonas
