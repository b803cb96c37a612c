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

/// @file evolution.hpp
/// Population lifecycle and genetic operators.
///
/// One generation is: offspring generation (binary tournaments, single-point
/// crossover with probability p_c, one mutation with probability p_m), cached
/// fitness evaluation of the offspring, then environmental selection by
/// binary tournaments over parents and offspring with elitism.

#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "evonas/cache.hpp"
#include "evonas/decoder.hpp"
#include "evonas/error.hpp"
#include "evonas/evaluators.hpp"
#include "evonas/genome.hpp"
#include "evonas/random.hpp"

namespace evonas {

struct Individual {
  Genome genome;
  std::optional<double> fitness;
};

struct Population {
  std::vector<Individual> members;
  int generation = 0;

  std::size_t size() const noexcept { return members.size(); }
  bool evaluated() const {
    return std::all_of(members.begin(), members.end(),
                       [](const Individual& i) { return i.fitness.has_value(); });
  }
};

enum class MutationOp { add_skip, add_pool, remove, modify };

inline constexpr std::array<MutationOp, 4> kAllMutationOps{
    MutationOp::add_skip, MutationOp::add_pool, MutationOp::remove, MutationOp::modify};

inline std::string_view to_string(MutationOp op) {
  switch (op) {
    case MutationOp::add_skip: return "add_skip";
    case MutationOp::add_pool: return "add_pool";
    case MutationOp::remove: return "remove";
    case MutationOp::modify: return "modify";
  }
  return "?";
}

inline std::optional<MutationOp> mutation_op_from_string(std::string_view name) {
  for (auto op : kAllMutationOps) {
    if (to_string(op) == name) return op;
  }
  return std::nullopt;
}

struct EvolutionParams {
  std::size_t population_size = 20;
  std::size_t generations = 20;
  double crossover_probability = 0.9;
  double mutation_probability = 0.2;
  std::array<MutationOp, 4> mutation_ops = kAllMutationOps;
  std::array<double, 4> mutation_op_probabilities{0.25, 0.25, 0.25, 0.25};
  std::size_t elitism_count = 1;
  std::uint64_t seed = 0;

  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    if (population_size < 1) out.emplace_back("population_size must be >= 1");
    if (!(crossover_probability >= 0.0 && crossover_probability <= 1.0)) {
      out.emplace_back("p_c must lie in [0, 1]");
    }
    if (!(mutation_probability >= 0.0 && mutation_probability <= 1.0)) {
      out.emplace_back("p_m must lie in [0, 1]");
    }
    double sum = 0.0;
    for (double p : mutation_op_probabilities) {
      if (!(p >= 0.0)) out.emplace_back("mutation probabilities must be non-negative");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) out.emplace_back("mutation probabilities must sum to 1");
    if (elitism_count < 1) out.emplace_back("elitism_count must be >= 1");
    if (elitism_count > population_size) {
      out.emplace_back("elitism_count must not exceed population_size");
    }
    return out;
  }

  void check() const {
    auto problems = violations();
    if (problems.empty()) return;
    std::string message = "invalid evolution parameters:";
    for (const auto& p : problems) message += " " + p + ";";
    throw ConfigError(message);
  }
};

// ---------------------------------------------------------------------------
// Initialization and evaluation

inline Population initialize_population(const SearchSpaceConfig& cfg,
                                        const EvolutionParams& params, Rng& rng) {
  Population population;
  population.members.reserve(params.population_size);
  for (std::size_t i = 0; i < params.population_size; ++i) {
    population.members.push_back(Individual{random_genome(cfg, rng), std::nullopt});
  }
  return population;
}

struct EvaluationSummary {
  std::size_t hits = 0;
  std::size_t misses = 0;
  std::size_t evaluations = 0;
};

/// Fills in the fitness of every member through the cache.
///
/// Members whose id is cached take the stored fitness without an evaluator
/// call. Each distinct missing id is evaluated exactly once, up to `threads`
/// at a time, and inserted. A duplicate of an id first seen earlier in the
/// same population counts as a hit, as it would if members were processed
/// one by one. If any evaluation fails, the successful ones are still
/// cached and the first failure (in member order) is rethrown as
/// EvaluationError.
inline EvaluationSummary evaluate_population(Population& population, Evaluator& evaluator,
                                             FitnessCache& cache,
                                             const SearchSpaceConfig& cfg,
                                             const TrainingBudget& budget,
                                             std::size_t threads = 1) {
  EvaluationSummary summary;
  std::vector<GenomeId> ids;
  ids.reserve(population.size());
  for (const auto& member : population.members) ids.push_back(canonical_id(member.genome));

  std::vector<std::size_t> pending;  // member index of each distinct miss
  std::unordered_map<GenomeId, std::size_t> pending_index;
  std::vector<std::size_t> deferred;
  for (std::size_t i = 0; i < population.size(); ++i) {
    if (pending_index.count(ids[i]) > 0) {
      deferred.push_back(i);
      continue;
    }
    if (auto cached = cache.lookup(ids[i])) {
      population.members[i].fitness = *cached;
      ++summary.hits;
    } else {
      pending_index.emplace(ids[i], pending.size());
      pending.push_back(i);
      ++summary.misses;
    }
  }

  std::vector<std::optional<double>> results(pending.size());
  std::vector<std::exception_ptr> failures(pending.size());
  auto run_one = [&](std::size_t k) {
    const auto& member = population.members[pending[k]];
    try {
      const auto graph = decode(member.genome, cfg);
      const double v = evaluator.evaluate(member.genome, to_json(graph), budget);
      check_fitness_range(v);
      results[k] = v;
    } catch (...) {
      failures[k] = std::current_exception();
    }
  };

  const std::size_t workers = std::min(std::max<std::size_t>(threads, 1), pending.size());
  if (workers <= 1) {
    for (std::size_t k = 0; k < pending.size(); ++k) run_one(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < pending.size(); k = next++) run_one(k);
      });
    }
  }
  summary.evaluations = pending.size();

  std::exception_ptr first_failure;
  std::string failed_id;
  for (std::size_t k = 0; k < pending.size(); ++k) {
    if (results[k]) {
      cache.insert(ids[pending[k]], *results[k]);
      population.members[pending[k]].fitness = *results[k];
    } else if (!first_failure) {
      first_failure = failures[k];
      failed_id = ids[pending[k]].value;
    }
  }
  if (first_failure) {
    try {
      std::rethrow_exception(first_failure);
    } catch (const std::exception& e) {
      throw EvaluationError(failed_id, e.what());
    }
  }

  for (std::size_t i : deferred) {
    population.members[i].fitness = cache.lookup(ids[i]);
    ++summary.hits;
  }
  return summary;
}

// ---------------------------------------------------------------------------
// Selection

namespace detail {

inline double fitness_of(const Individual& individual) {
  if (!individual.fitness) {
    throw Error("selection over an unevaluated individual (" +
                serialize(individual.genome) + ")");
  }
  return *individual.fitness;
}

inline void require_evaluated(std::span<const Individual> members, const char* where) {
  for (const auto& m : members) {
    if (!m.fitness) {
      throw Error(std::string(where) + ": individual " + serialize(m.genome) +
                  " has no fitness");
    }
  }
}

}  // namespace detail

/// Binary tournament: two distinct slots drawn uniformly, the fitter one
/// wins, ties resolved by a fair coin. Returns the winner's slot.
inline std::size_t tournament_select_index(std::span<const Individual> members, Rng& rng) {
  if (members.size() < 2) throw Error("tournament selection needs at least two individuals");
  const std::size_t a = rng.index(members.size());
  std::size_t b = rng.index(members.size() - 1);
  if (b >= a) ++b;
  const double fa = detail::fitness_of(members[a]);
  const double fb = detail::fitness_of(members[b]);
  if (fa > fb) return a;
  if (fb > fa) return b;
  return rng.coin() ? b : a;
}

inline const Individual& tournament_select(std::span<const Individual> members, Rng& rng) {
  return members[tournament_select_index(members, rng)];
}

/// Slot of the fittest member; the first one on ties.
inline std::size_t best_index(std::span<const Individual> members) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < members.size(); ++i) {
    if (detail::fitness_of(members[i]) > detail::fitness_of(members[best])) best = i;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Crossover

/// Exchanges tails: o1 = p1[0, cut1) ++ p2[cut2, end), o2 = p2[0, cut2) ++
/// p1[cut1, end). No repair; offspring may be empty or overlong.
inline std::pair<Genome, Genome> crossover_at(const Genome& p1, const Genome& p2,
                                              std::size_t cut1, std::size_t cut2) {
  const auto& a = p1.genes();
  const auto& b = p2.genes();
  cut1 = std::min(cut1, a.size());
  cut2 = std::min(cut2, b.size());
  std::vector<LayerGene> o1(a.begin(), a.begin() + static_cast<long>(cut1));
  o1.insert(o1.end(), b.begin() + static_cast<long>(cut2), b.end());
  std::vector<LayerGene> o2(b.begin(), b.begin() + static_cast<long>(cut2));
  o2.insert(o2.end(), a.begin() + static_cast<long>(cut1), a.end());
  return {Genome(std::move(o1)), Genome(std::move(o2))};
}

/// Single-point crossover for variable-length parents: independent cut
/// points uniform on [0, |p1|] and [0, |p2|], then repair.
inline std::pair<Genome, Genome> crossover(const Genome& p1, const Genome& p2,
                                           const SearchSpaceConfig& cfg, Rng& rng) {
  const std::size_t cut1 = rng.between(0, p1.size());
  const std::size_t cut2 = rng.between(0, p2.size());
  auto [o1, o2] = crossover_at(p1, p2, cut1, cut2);
  return {repair(o1, cfg, rng), repair(o2, cfg, rng)};
}

// ---------------------------------------------------------------------------
// Mutation

/// Applies `op` at `point` without repair. For the insertions `point` is in
/// [0, |g|]; for remove and modify it is in [0, |g|). Removing the only gene
/// leaves the genome unchanged.
inline Genome apply_mutation(const Genome& genome, MutationOp op, std::size_t point,
                             const SearchSpaceConfig& cfg, Rng& rng) {
  std::vector<LayerGene> genes = genome.genes();
  switch (op) {
    case MutationOp::add_skip:
      genes.insert(genes.begin() + static_cast<long>(std::min(point, genes.size())),
                   random_skip_gene(cfg, rng));
      break;
    case MutationOp::add_pool:
      genes.insert(genes.begin() + static_cast<long>(std::min(point, genes.size())),
                   random_pool_gene(rng));
      break;
    case MutationOp::remove:
      if (genes.size() > 1 && point < genes.size()) {
        genes.erase(genes.begin() + static_cast<long>(point));
      }
      break;
    case MutationOp::modify:
      if (point < genes.size()) {
        if (auto* skip = std::get_if<SkipGene>(&genes[point])) {
          *skip = random_skip_gene(cfg, rng);
        } else {
          auto& pool = std::get<PoolGene>(genes[point]);
          pool.kind = pool.kind == PoolKind::max ? PoolKind::mean : PoolKind::max;
        }
      }
      break;
  }
  return Genome(std::move(genes));
}

inline MutationOp choose_mutation(const EvolutionParams& params, Rng& rng) {
  std::discrete_distribution<std::size_t> pick(params.mutation_op_probabilities.begin(),
                                               params.mutation_op_probabilities.end());
  return params.mutation_ops[pick(rng.engine())];
}

/// Picks a point uniformly among the valid positions for `op`.
inline std::size_t choose_mutation_point(const Genome& genome, MutationOp op, Rng& rng) {
  const bool inserts = op == MutationOp::add_skip || op == MutationOp::add_pool;
  const std::size_t positions = inserts ? genome.size() + 1 : genome.size();
  return positions == 0 ? 0 : rng.index(positions);
}

/// One mutation drawn from the operation list with the configured
/// probabilities, applied at a random point, then repaired.
inline Genome mutate(const Genome& genome, const EvolutionParams& params,
                     const SearchSpaceConfig& cfg, Rng& rng) {
  const MutationOp op = choose_mutation(params, rng);
  const std::size_t point = choose_mutation_point(genome, op, rng);
  return repair(apply_mutation(genome, op, point, cfg, rng), cfg, rng);
}

// ---------------------------------------------------------------------------
// Offspring generation and environmental selection

/// Counters for checking operator rates.
struct OffspringStats {
  std::size_t pairs = 0;
  std::size_t crossovers = 0;
  std::size_t offspring = 0;
  std::size_t mutations = 0;
};

/// Q_t: pairs of tournament-selected parents (distinct slots) are crossed
/// with probability p_c or copied otherwise, until |Q_t| >= |P_t|; a surplus
/// child (odd N) is dropped at random. Every child is then mutated with
/// probability p_m. Offspring carry no fitness.
inline Population generate_offspring(const Population& parents, const EvolutionParams& params,
                                     const SearchSpaceConfig& cfg, Rng& rng,
                                     OffspringStats* stats = nullptr) {
  detail::require_evaluated(parents.members, "offspring generation");
  if (parents.size() < 2) throw Error("offspring generation needs at least two parents");

  OffspringStats local;
  Population offspring;
  offspring.generation = parents.generation;
  auto& children = offspring.members;
  const std::span<const Individual> pool(parents.members);
  while (children.size() < parents.size()) {
    const std::size_t first = tournament_select_index(pool, rng);
    std::size_t second = tournament_select_index(pool, rng);
    while (second == first) second = tournament_select_index(pool, rng);
    ++local.pairs;

    const Genome& g1 = pool[first].genome;
    const Genome& g2 = pool[second].genome;
    if (rng.uniform01() < params.crossover_probability) {
      ++local.crossovers;
      auto [o1, o2] = crossover(g1, g2, cfg, rng);
      children.push_back(Individual{std::move(o1), std::nullopt});
      children.push_back(Individual{std::move(o2), std::nullopt});
    } else {
      children.push_back(Individual{g1, std::nullopt});
      children.push_back(Individual{g2, std::nullopt});
    }
  }
  if (children.size() > parents.size()) {
    const std::size_t drop = children.size() - 2 + rng.index(2);
    children.erase(children.begin() + static_cast<long>(drop));
  }

  for (auto& child : children) {
    if (rng.uniform01() < params.mutation_probability) {
      ++local.mutations;
      child.genome = mutate(child.genome, params, cfg, rng);
    }
  }
  local.offspring = children.size();
  if (stats != nullptr) {
    stats->pairs += local.pairs;
    stats->crossovers += local.crossovers;
    stats->offspring += local.offspring;
    stats->mutations += local.mutations;
  }
  return offspring;
}

/// P_{t+1}: N binary tournaments over P_t and Q_t together (with
/// replacement across slots). Afterwards the best individual of the union
/// is guaranteed `elitism_count` copies, each replacing the currently
/// least-fit non-elite member.
inline Population environmental_selection(const Population& parents,
                                          const Population& offspring,
                                          const EvolutionParams& params, Rng& rng) {
  detail::require_evaluated(parents.members, "environmental selection");
  detail::require_evaluated(offspring.members, "environmental selection");

  std::vector<Individual> candidates;
  candidates.reserve(parents.size() + offspring.size());
  candidates.insert(candidates.end(), parents.members.begin(), parents.members.end());
  candidates.insert(candidates.end(), offspring.members.begin(), offspring.members.end());

  Population next;
  next.generation = parents.generation + 1;
  const std::size_t n = params.population_size;
  next.members.reserve(n);
  for (std::size_t slot = 0; slot < n; ++slot) {
    next.members.push_back(candidates[tournament_select_index(candidates, rng)]);
  }

  const Individual& elite = candidates[best_index(candidates)];
  const GenomeId elite_id = canonical_id(elite.genome);
  std::vector<bool> is_elite(n);
  std::size_t copies = 0;
  for (std::size_t i = 0; i < n; ++i) {
    is_elite[i] = canonical_id(next.members[i].genome) == elite_id;
    copies += is_elite[i] ? 1 : 0;
  }
  while (copies < std::min(params.elitism_count, n)) {
    std::size_t worst = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (is_elite[i]) continue;
      if (worst == n || *next.members[i].fitness < *next.members[worst].fitness) worst = i;
    }
    next.members[worst] = elite;
    is_elite[worst] = true;
    ++copies;
  }
  return next;
}

}  // namespace evonas
