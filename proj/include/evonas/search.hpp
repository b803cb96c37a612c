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

#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "evonas/cache.hpp"
#include "evonas/error.hpp"
#include "evonas/evaluators.hpp"
#include "evonas/evolution.hpp"
#include "evonas/genome.hpp"
#include "evonas/random.hpp"

namespace evonas {

struct GenerationRecord {
  int generation = 0;
  double best_fitness = 0.0;
  double mean_fitness = 0.0;
  std::size_t cache_hits = 0;
  std::size_t cache_misses = 0;
  std::size_t evaluations = 0;
  std::string best_id;
  friend bool operator==(const GenerationRecord&, const GenerationRecord&) = default;
};

struct SearchHistory {
  std::vector<GenerationRecord> generations;
  friend bool operator==(const SearchHistory&, const SearchHistory&) = default;
};

inline nlohmann::json to_json(const GenerationRecord& r) {
  return {{"generation", r.generation},   {"best", r.best_fitness},
          {"mean", r.mean_fitness},       {"hits", r.cache_hits},
          {"misses", r.cache_misses},     {"evaluations", r.evaluations},
          {"best_id", r.best_id}};
}

inline nlohmann::json to_json(const SearchHistory& history) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : history.generations) out.push_back(to_json(r));
  return out;
}

inline SearchHistory history_from_json(const nlohmann::json& doc) {
  SearchHistory history;
  try {
    for (const auto& r : doc) {
      history.generations.push_back(GenerationRecord{
          r.at("generation").get<int>(), r.at("best").get<double>(),
          r.at("mean").get<double>(), r.at("hits").get<std::size_t>(),
          r.at("misses").get<std::size_t>(), r.at("evaluations").get<std::size_t>(),
          r.at("best_id").get<std::string>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed search history: ") + e.what());
  }
  return history;
}

/// "gen=3 best=0.91 mean=0.72 hits=14 misses=6 best_id=S64.128|Pmax"
inline std::string progress_line(const GenerationRecord& r) {
  std::ostringstream out;
  out << "gen=" << r.generation << " best=" << r.best_fitness << " mean=" << r.mean_fitness
      << " hits=" << r.cache_hits << " misses=" << r.cache_misses
      << " best_id=" << r.best_id;
  return out.str();
}

// ---------------------------------------------------------------------------
// Checkpoint

/// State at the start of generation `generation`: the population P_t (whose
/// fitness may still be unset at t = 0), the random engine, and the history
/// so far. Stored as JSON
///   {"generation", "rng_state", "population": [[genome, fitness|null]...],
///    "history": [...]}.
struct Checkpoint {
  int generation = 0;
  std::string rng_state;
  Population population;
  SearchHistory history;

  nlohmann::json to_json() const {
    nlohmann::json members = nlohmann::json::array();
    for (const auto& m : population.members) {
      members.push_back({serialize(m.genome),
                         m.fitness ? nlohmann::json(*m.fitness) : nlohmann::json(nullptr)});
    }
    return {{"generation", generation},
            {"rng_state", rng_state},
            {"population", std::move(members)},
            {"history", evonas::to_json(history)}};
  }

  static Checkpoint from_json(const nlohmann::json& doc) {
    Checkpoint cp;
    try {
      cp.generation = doc.at("generation").get<int>();
      cp.rng_state = doc.at("rng_state").get<std::string>();
      cp.population.generation = cp.generation;
      for (const auto& entry : doc.at("population")) {
        if (!entry.is_array() || entry.size() != 2) {
          throw FormatError("population entries must be [genome, fitness]");
        }
        Individual member{parse(entry[0].get<std::string>()), std::nullopt};
        if (!entry[1].is_null()) {
          member.fitness = entry[1].get<double>();
          check_fitness_range(*member.fitness);
        }
        cp.population.members.push_back(std::move(member));
      }
      cp.history = history_from_json(doc.at("history"));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("malformed checkpoint: ") + e.what());
    } catch (const ParseError& e) {
      throw FormatError(std::string("malformed checkpoint genome: ") + e.what());
    } catch (const RangeError& e) {
      throw FormatError(std::string("malformed checkpoint fitness: ") + e.what());
    }
    return cp;
  }

  void save(const std::filesystem::path& path) const {
    auto tmp = path;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw IoError("cannot write checkpoint " + tmp.string());
      out << to_json().dump(2) << '\n';
      if (!out) throw IoError("failed writing checkpoint " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot replace checkpoint " + path.string() + ": " + ec.message());
  }

  static Checkpoint load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path.string() + ": " + e.what());
    }
    return from_json(doc);
  }
};

// ---------------------------------------------------------------------------
// Search loop

struct SearchOptions {
  TrainingBudget budget;
  std::size_t eval_threads = 1;
  /// Written at the start of every generation when set.
  std::optional<std::filesystem::path> checkpoint_path;
  /// Cache snapshot written after every generation and on failure when set.
  std::optional<std::filesystem::path> cache_path;
  std::function<void(const GenerationRecord&)> on_generation;
};

struct SearchResult {
  Individual best;
  SearchHistory history;
  Population population;
};

namespace detail {

inline GenerationRecord summarize(const Population& population,
                                  const EvaluationSummary& evaluation) {
  GenerationRecord record;
  record.generation = population.generation;
  const std::size_t best = best_index(population.members);
  record.best_fitness = *population.members[best].fitness;
  record.best_id = serialize(population.members[best].genome);
  double sum = 0.0;
  for (const auto& m : population.members) sum += *m.fitness;
  record.mean_fitness = sum / static_cast<double>(population.size());
  record.cache_hits = evaluation.hits;
  record.cache_misses = evaluation.misses;
  record.evaluations = evaluation.evaluations;
  return record;
}

}  // namespace detail

/// Initialize, evaluate, then `generations` rounds of offspring generation,
/// offspring evaluation and environmental selection. Returns the best
/// individual seen (elitism keeps it in the final population).
///
/// With a fixed seed and a deterministic evaluator the history is
/// reproducible bit for bit, including across a checkpoint/resume. If an
/// evaluation fails, the cache is persisted and the last checkpoint still
/// describes the start of the failing generation.
inline SearchResult run_search(const SearchSpaceConfig& cfg, const EvolutionParams& params,
                               Evaluator& evaluator, FitnessCache& cache,
                               const SearchOptions& options = {},
                               const Checkpoint* resume = nullptr) {
  cfg.check();
  params.check();
  if (params.generations > 0 && params.population_size < 2) {
    throw ConfigError("a search with generations > 0 needs population_size >= 2");
  }

  Rng rng(params.seed);
  Population population;
  SearchHistory history;
  if (resume != nullptr) {
    if (resume->population.size() != params.population_size) {
      throw ConfigError("checkpoint population size " +
                        std::to_string(resume->population.size()) +
                        " does not match population_size " +
                        std::to_string(params.population_size));
    }
    for (const auto& m : resume->population.members) {
      if (!is_valid(m.genome, cfg)) {
        throw ConfigError("checkpoint genome " + serialize(m.genome) +
                          " is invalid under the configured search space");
      }
    }
    rng.set_state(resume->rng_state);
    population = resume->population;
    population.generation = resume->generation;
    history = resume->history;
  } else {
    population = initialize_population(cfg, params, rng);
  }

  auto checkpoint = [&] {
    if (options.checkpoint_path) {
      Checkpoint{population.generation, rng.state(), population, history}.save(
          *options.checkpoint_path);
    }
  };
  auto persist_cache = [&] {
    if (options.cache_path) cache.persist(*options.cache_path);
  };
  auto record = [&](const EvaluationSummary& evaluation) {
    history.generations.push_back(detail::summarize(population, evaluation));
    if (options.on_generation) options.on_generation(history.generations.back());
  };
  auto evaluate = [&](Population& target) {
    try {
      return evaluate_population(target, evaluator, cache, cfg, options.budget,
                                 options.eval_threads);
    } catch (...) {
      persist_cache();
      throw;
    }
  };

  if (!population.evaluated()) {
    checkpoint();
    record(evaluate(population));
    persist_cache();
    checkpoint();
  }

  while (static_cast<std::size_t>(population.generation) < params.generations) {
    Population offspring = generate_offspring(population, params, cfg, rng);
    const auto evaluation = evaluate(offspring);
    population = environmental_selection(population, offspring, params, rng);
    record(evaluation);
    persist_cache();
    checkpoint();
  }

  SearchResult result;
  result.best = population.members[best_index(population.members)];
  result.history = std::move(history);
  result.population = std::move(population);
  return result;
}

}  // namespace evonas
