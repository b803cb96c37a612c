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
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "evonas/error.hpp"
#include "evonas/genome.hpp"

namespace evonas {

struct CacheStats {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t inserts = 0;
  friend bool operator==(const CacheStats&, const CacheStats&) = default;
};

/// What to do when an id is re-inserted with a different fitness.
enum class ConflictPolicy {
  error,       // throw ConflictError
  keep_first,  // keep the stored value, warn on stderr
};

inline void check_fitness_range(double fitness) {
  if (!(fitness >= 0.0 && fitness <= 1.0)) {
    throw RangeError("fitness " + std::to_string(fitness) + " outside [0, 1]");
  }
}

/// Global fitness cache: genome id -> fitness, write-once per id.
///
/// All operations are linearizable; persist() writes a consistent snapshot.
/// On disk the cache is UTF-8 newline-delimited JSON. An optional first line
/// {"fingerprint": "..."} names the search-space/evaluator configuration the
/// ids were scored under; every following line is {"id": ..., "fitness": ...}.
class FitnessCache {
 public:
  explicit FitnessCache(std::string fingerprint = {},
                        ConflictPolicy policy = ConflictPolicy::error)
      : fingerprint_(std::move(fingerprint)), policy_(policy) {}

  FitnessCache(const FitnessCache&) = delete;
  FitnessCache& operator=(const FitnessCache&) = delete;
  FitnessCache(FitnessCache&& other) noexcept
      : fingerprint_(std::move(other.fingerprint_)),
        policy_(other.policy_),
        entries_(std::move(other.entries_)),
        stats_(other.stats_) {}

  std::optional<double> lookup(const GenomeId& id) {
    std::lock_guard lock(mutex_);
    if (auto it = entries_.find(id.value); it != entries_.end()) {
      ++stats_.hits;
      return it->second;
    }
    ++stats_.misses;
    return std::nullopt;
  }

  /// Membership test that leaves the statistics untouched.
  bool contains(const GenomeId& id) const {
    std::lock_guard lock(mutex_);
    return entries_.count(id.value) > 0;
  }

  void insert(const GenomeId& id, double fitness) {
    check_fitness_range(fitness);
    std::lock_guard lock(mutex_);
    auto [it, inserted] = entries_.try_emplace(id.value, fitness);
    if (inserted) {
      ++stats_.inserts;
      return;
    }
    if (it->second == fitness) return;
    if (policy_ == ConflictPolicy::keep_first) {
      std::cerr << "warning: fitness for " << id.value << " changed from "
                << it->second << " to " << fitness << "; keeping the first value\n";
      return;
    }
    throw ConflictError("cache already holds fitness " + std::to_string(it->second) +
                        " for " + id.value + ", refusing " + std::to_string(fitness));
  }

  CacheStats stats() const {
    std::lock_guard lock(mutex_);
    return stats_;
  }

  void reset_stats() {
    std::lock_guard lock(mutex_);
    stats_ = {};
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
  }

  const std::string& fingerprint() const noexcept { return fingerprint_; }
  ConflictPolicy policy() const noexcept { return policy_; }

  /// Snapshot sorted by id.
  std::vector<std::pair<GenomeId, double>> entries() const {
    std::vector<std::pair<GenomeId, double>> out;
    {
      std::lock_guard lock(mutex_);
      out.reserve(entries_.size());
      for (const auto& [id, fitness] : entries_) out.emplace_back(GenomeId{id}, fitness);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Atomically replaces `path` (write to a sibling temp file, then rename).
  void persist(const std::filesystem::path& path) const {
    const auto snapshot = entries();
    auto tmp = path;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw IoError("cannot write cache file " + tmp.string());
      if (!fingerprint_.empty()) {
        out << nlohmann::json{{"fingerprint", fingerprint_}}.dump() << '\n';
      }
      for (const auto& [id, fitness] : snapshot) {
        out << nlohmann::json{{"id", id.value}, {"fitness", fitness}}.dump() << '\n';
      }
      out.flush();
      if (!out) throw IoError("failed writing cache file " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
      throw IoError("cannot replace cache file " + path.string() + ": " + ec.message());
    }
  }

  /// Loads a file written by persist(). Statistics start at zero. When
  /// `expected_fingerprint` is non-empty, a file recorded under a different
  /// fingerprint is rejected with FormatError.
  static FitnessCache restore(const std::filesystem::path& path,
                              const std::string& expected_fingerprint = {},
                              ConflictPolicy policy = ConflictPolicy::error) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open cache file " + path.string());

    FitnessCache cache(expected_fingerprint, policy);
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& why) -> FormatError {
      return FormatError(path.string() + ":" + std::to_string(line_no) + ": " + why);
    };
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      nlohmann::json record;
      try {
        record = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception&) {
        throw fail("malformed JSON record");
      }
      if (!record.is_object()) throw fail("record is not an object");

      if (record.contains("fingerprint")) {
        if (line_no != 1 || record.size() != 1 || !record["fingerprint"].is_string()) {
          throw fail("misplaced fingerprint header");
        }
        const auto stored = record["fingerprint"].get<std::string>();
        if (!expected_fingerprint.empty() && stored != expected_fingerprint) {
          throw fail("cache was recorded under '" + stored + "', expected '" +
                     expected_fingerprint + "'");
        }
        cache.fingerprint_ = stored;
        continue;
      }

      if (record.size() != 2 || !record.contains("id") || !record["id"].is_string() ||
          !record.contains("fitness") || !record["fitness"].is_number()) {
        throw fail("expected {\"id\": <string>, \"fitness\": <number>}");
      }
      const auto id = record["id"].get<std::string>();
      try {
        if (serialize(parse(id)) != id) throw ParseError("non-canonical id");
      } catch (const ParseError& e) {
        throw fail(std::string("invalid genome id: ") + e.what());
      }
      const double fitness = record["fitness"].get<double>();
      try {
        cache.insert(GenomeId{id}, fitness);
      } catch (const Error& e) {
        throw fail(e.what());
      }
    }
    if (in.bad()) throw IoError("failed reading cache file " + path.string());
    cache.stats_ = {};
    return cache;
  }

 private:
  std::string fingerprint_;
  ConflictPolicy policy_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, double> entries_;
  CacheStats stats_;
};

}  // namespace evonas
