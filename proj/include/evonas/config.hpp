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

/// @file config.hpp
/// Run configuration: a flat JSON document, every key optional, unknown keys
/// rejected. Defaults are population 20, 20 generations, p_c 0.9, p_m 0.2,
/// feature maps {64, 128, 256, 512} and 600 training epochs.

#pragma once

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "evonas/cache.hpp"
#include "evonas/error.hpp"
#include "evonas/evaluators.hpp"
#include "evonas/evolution.hpp"
#include "evonas/genome.hpp"

namespace evonas {

/// Environment variable naming the default worker command.
inline constexpr const char* kWorkerEnv = "EVONAS_WORKER";

struct EvaluatorConfig {
  enum class Kind { surrogate, external };
  Kind kind = Kind::surrogate;
  std::string command;  // spawn a worker and talk over its stdin/stdout
  std::string address;  // or connect to host:port
  double timeout_seconds = 24 * 3600.0;
  std::size_t connections = 1;
  bool deterministic = true;
};

struct RunConfig {
  SearchSpaceConfig space;
  EvolutionParams evolution;
  EvaluatorConfig evaluator;
  TrainingBudget budget;
  std::filesystem::path output_path = "evonas_out";
  std::optional<std::filesystem::path> cache_path;
  std::optional<std::filesystem::path> checkpoint_path;
  std::size_t eval_threads = 1;
  ConflictPolicy cache_conflict = ConflictPolicy::error;

  std::filesystem::path resolved_cache_path() const {
    return cache_path.value_or(output_path / "cache.jsonl");
  }
  std::filesystem::path resolved_checkpoint_path() const {
    return checkpoint_path.value_or(output_path / "checkpoint.json");
  }
};

namespace detail {

inline const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys{
      "feature_maps", "max_length",     "max_pools",     "input_shape",
      "num_classes",  "pool_stride",    "population_size", "generations",
      "p_c",          "p_m",            "mutation_ops",  "mutation_probabilities",
      "elitism_count", "seed",          "epochs",        "dataset",
      "evaluator",    "cache_path",     "checkpoint_path", "output_path",
      "eval_threads", "cache_conflict"};
  return keys;
}

template <typename T>
T config_value(const nlohmann::json& doc, const std::string& key, const char* expected) {
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config key '" + key + "': expected " + expected);
  }
}

inline std::int64_t config_int(const nlohmann::json& doc, const std::string& key,
                               std::int64_t minimum) {
  const auto& v = doc.at(key);
  if (!v.is_number_integer()) throw ConfigError("config key '" + key + "': expected an integer");
  const auto value = v.get<std::int64_t>();
  if (value < minimum) {
    throw ConfigError("config key '" + key + "': must be >= " + std::to_string(minimum) +
                      " (got " + std::to_string(value) + ")");
  }
  return value;
}

inline double config_probability(const nlohmann::json& doc, const std::string& key) {
  const auto& v = doc.at(key);
  if (!v.is_number()) throw ConfigError("config key '" + key + "': expected a number");
  const double value = v.get<double>();
  if (!(value >= 0.0 && value <= 1.0)) {
    throw ConfigError("config key '" + key + "': must lie in [0, 1] (got " +
                      v.dump() + ")");
  }
  return value;
}

inline void require_parent_exists(const std::filesystem::path& path, const char* key) {
  const auto parent = path.parent_path();
  if (!parent.empty() && !std::filesystem::is_directory(parent)) {
    throw ConfigError(std::string("config key '") + key + "': directory " + parent.string() +
                      " does not exist");
  }
}

inline EvaluatorConfig parse_evaluator(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("config key 'evaluator': expected an object");
  static const std::set<std::string> keys{"kind", "command", "address", "timeout_seconds",
                                          "connections", "deterministic"};
  for (const auto& [key, _] : doc.items()) {
    if (keys.count(key) == 0) throw ConfigError("unknown config key 'evaluator." + key + "'");
  }
  EvaluatorConfig out;
  const auto kind = doc.contains("kind") ? config_value<std::string>(doc, "kind", "a string")
                                         : std::string("surrogate");
  if (kind == "surrogate") {
    out.kind = EvaluatorConfig::Kind::surrogate;
  } else if (kind == "external") {
    out.kind = EvaluatorConfig::Kind::external;
  } else {
    throw ConfigError("config key 'evaluator.kind': must be \"surrogate\" or \"external\"");
  }
  if (doc.contains("command")) out.command = config_value<std::string>(doc, "command", "a string");
  if (doc.contains("address")) out.address = config_value<std::string>(doc, "address", "a string");
  if (doc.contains("timeout_seconds")) {
    out.timeout_seconds = config_value<double>(doc, "timeout_seconds", "a number");
    if (!(out.timeout_seconds > 0.0)) {
      throw ConfigError("config key 'evaluator.timeout_seconds': must be > 0");
    }
  }
  if (doc.contains("connections")) {
    out.connections = static_cast<std::size_t>(config_int(doc, "connections", 1));
  }
  if (doc.contains("deterministic")) {
    out.deterministic = config_value<bool>(doc, "deterministic", "a boolean");
  }
  if (out.kind == EvaluatorConfig::Kind::external && out.command.empty() &&
      out.address.empty()) {
    if (const char* env = std::getenv(kWorkerEnv); env != nullptr && *env != '\0') {
      out.command = env;
    } else {
      throw ConfigError(std::string("external evaluator needs 'command' or 'address' (or ") +
                        kWorkerEnv + " in the environment)");
    }
  }
  if (!out.command.empty() && !out.address.empty()) {
    throw ConfigError("evaluator: set either 'command' or 'address', not both");
  }
  return out;
}

}  // namespace detail

/// Applies defaults to absent keys and validates everything.
inline RunConfig parse_config(const nlohmann::json& doc) {
  using namespace detail;
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (known_config_keys().count(key) == 0) throw ConfigError("unknown config key '" + key + "'");
  }

  RunConfig cfg;
  auto& space = cfg.space;
  if (doc.contains("feature_maps")) {
    space.feature_maps = config_value<std::vector<int>>(doc, "feature_maps", "a list of integers");
    if (space.feature_maps.empty()) throw ConfigError("config key 'feature_maps': must not be empty");
    for (int f : space.feature_maps) {
      if (f < 1) throw ConfigError("config key 'feature_maps': channel counts must be >= 1");
    }
  }
  if (doc.contains("max_length")) space.max_length = static_cast<int>(config_int(doc, "max_length", 1));
  if (doc.contains("input_shape")) {
    const auto shape = config_value<std::vector<int>>(doc, "input_shape", "[channels, height, width]");
    if (shape.size() != 3 || shape[0] < 1 || shape[1] < 1 || shape[2] < 1) {
      throw ConfigError("config key 'input_shape': expected three positive integers [c, h, w]");
    }
    space.input_shape = TensorShape{shape[0], shape[1], shape[2]};
  }
  if (doc.contains("num_classes")) space.num_classes = static_cast<int>(config_int(doc, "num_classes", 1));
  if (doc.contains("pool_stride")) space.pool_stride = static_cast<int>(config_int(doc, "pool_stride", 1));
  const int pool_bound = max_pools_bound(space.input_shape, space.pool_stride);
  if (doc.contains("max_pools")) {
    space.max_pools = static_cast<int>(config_int(doc, "max_pools", 0));
    if (space.max_pools > pool_bound) {
      throw ConfigError("config key 'max_pools': must be <= " + std::to_string(pool_bound) +
                        " for input " + to_string(space.input_shape) + " and pool_stride " +
                        std::to_string(space.pool_stride));
    }
  } else {
    space.max_pools = pool_bound;
  }

  auto& evo = cfg.evolution;
  if (doc.contains("population_size")) {
    evo.population_size = static_cast<std::size_t>(config_int(doc, "population_size", 1));
  }
  if (doc.contains("generations")) {
    evo.generations = static_cast<std::size_t>(config_int(doc, "generations", 0));
  }
  if (doc.contains("p_c")) evo.crossover_probability = config_probability(doc, "p_c");
  if (doc.contains("p_m")) evo.mutation_probability = config_probability(doc, "p_m");
  if (doc.contains("mutation_ops")) {
    const auto names = config_value<std::vector<std::string>>(doc, "mutation_ops", "a list of names");
    if (names.size() != 4) throw ConfigError("config key 'mutation_ops': expected 4 entries");
    for (std::size_t i = 0; i < 4; ++i) {
      auto op = mutation_op_from_string(names[i]);
      if (!op) {
        throw ConfigError("config key 'mutation_ops': unknown operation '" + names[i] +
                          "' (add_skip, add_pool, remove, modify)");
      }
      evo.mutation_ops[i] = *op;
    }
  }
  if (doc.contains("mutation_probabilities")) {
    const auto probs = config_value<std::vector<double>>(doc, "mutation_probabilities",
                                                         "a list of numbers");
    if (probs.size() != 4) throw ConfigError("config key 'mutation_probabilities': expected 4 entries");
    double sum = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      if (!(probs[i] >= 0.0)) {
        throw ConfigError("config key 'mutation_probabilities': entries must be >= 0");
      }
      evo.mutation_op_probabilities[i] = probs[i];
      sum += probs[i];
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ConfigError("config key 'mutation_probabilities': entries must sum to 1");
    }
  }
  if (doc.contains("elitism_count")) {
    evo.elitism_count = static_cast<std::size_t>(config_int(doc, "elitism_count", 1));
  }
  if (doc.contains("seed")) evo.seed = static_cast<std::uint64_t>(config_int(doc, "seed", 0));

  if (doc.contains("epochs")) cfg.budget.epochs = static_cast<int>(config_int(doc, "epochs", 1));
  if (doc.contains("dataset")) {
    if (!doc["dataset"].is_object()) throw ConfigError("config key 'dataset': expected an object");
    cfg.budget.dataset = doc["dataset"];
  }
  if (doc.contains("evaluator")) cfg.evaluator = parse_evaluator(doc["evaluator"]);

  if (doc.contains("output_path")) {
    cfg.output_path = config_value<std::string>(doc, "output_path", "a path");
    require_parent_exists(cfg.output_path, "output_path");
  }
  if (doc.contains("cache_path")) {
    cfg.cache_path = config_value<std::string>(doc, "cache_path", "a path");
    require_parent_exists(*cfg.cache_path, "cache_path");
  }
  if (doc.contains("checkpoint_path")) {
    cfg.checkpoint_path = config_value<std::string>(doc, "checkpoint_path", "a path");
    require_parent_exists(*cfg.checkpoint_path, "checkpoint_path");
  }
  if (doc.contains("eval_threads")) {
    cfg.eval_threads = static_cast<std::size_t>(config_int(doc, "eval_threads", 1));
  }
  if (doc.contains("cache_conflict")) {
    const auto policy = config_value<std::string>(doc, "cache_conflict", "a string");
    if (policy == "error") {
      cfg.cache_conflict = ConflictPolicy::error;
    } else if (policy == "keep_first") {
      cfg.cache_conflict = ConflictPolicy::keep_first;
    } else {
      throw ConfigError("config key 'cache_conflict': must be \"error\" or \"keep_first\"");
    }
  }

  space.check();
  evo.check();
  if (evo.generations > 0 && evo.population_size < 2) {
    throw ConfigError("config key 'population_size': must be >= 2 when generations > 0");
  }
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

inline std::unique_ptr<Evaluator> make_evaluator(const RunConfig& cfg) {
  if (cfg.evaluator.kind == EvaluatorConfig::Kind::surrogate) {
    return std::make_unique<SurrogateEvaluator>(cfg.space);
  }
  ExternalEvaluator::Options options;
  options.timeout = std::chrono::milliseconds(
      static_cast<std::int64_t>(cfg.evaluator.timeout_seconds * 1000.0));
  options.connections = cfg.evaluator.connections;
  options.deterministic = cfg.evaluator.deterministic;
  if (!cfg.evaluator.address.empty()) {
    return std::make_unique<ExternalEvaluator>(
        ExternalEvaluator::connecting(cfg.evaluator.address, options));
  }
  return std::make_unique<ExternalEvaluator>(
      ExternalEvaluator::spawning(cfg.evaluator.command, options));
}

/// Everything that changes what fitness a genome id maps to.
inline std::string cache_fingerprint(const RunConfig& cfg, const Evaluator& evaluator) {
  return cfg.space.fingerprint() + ";evaluator=" + evaluator.description() +
         ";epochs=" + std::to_string(cfg.budget.epochs) + ";dataset=" + cfg.budget.dataset.dump();
}

}  // namespace evonas
