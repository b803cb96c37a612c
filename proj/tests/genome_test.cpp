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

#include <set>
#include <string>
#include <unordered_set>

#include "evonas/genome.hpp"
#include "oracles.hpp"

namespace evonas {
namespace {

bool mentions(const std::vector<std::string>& problems, const std::string& needle) {
  for (const auto& p : problems) {
    if (p.find(needle) != std::string::npos) return true;
  }
  return false;
}

SearchSpaceConfig small_space() {
  SearchSpaceConfig cfg;
  cfg.feature_maps = {64, 128};
  cfg.max_length = 4;
  return cfg;
}

TEST(MaxPoolsBound, MatchesShrinkingSides) {
  EXPECT_EQ(max_pools_bound({3, 32, 32}, 2), 5);
  EXPECT_EQ(max_pools_bound({3, 48, 48}, 2), 5);
  EXPECT_EQ(max_pools_bound({3, 64, 32}, 2), 5);
  EXPECT_EQ(max_pools_bound({3, 32, 32}, 1), 31);
  EXPECT_EQ(max_pools_bound({3, 1, 1}, 2), 0);
  EXPECT_EQ(max_pools_bound({3, 27, 27}, 3), 3);
}

TEST(RandomGenome, SingletonSpace) {
  SearchSpaceConfig cfg;
  cfg.max_length = 1;
  cfg.feature_maps = {64};
  cfg.max_pools = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    EXPECT_EQ(serialize(random_genome(cfg, rng)), "S64.64");
  }
}

TEST(RandomGenome, LengthWithinBounds) {
  auto cfg = small_space();
  Rng rng(7);
  const Genome g = random_genome(cfg, rng);
  EXPECT_GE(g.size(), 1u);
  EXPECT_LE(g.size(), 4u);
  EXPECT_TRUE(is_valid(g, cfg));
}

TEST(RandomGenome, RespectsPoolBudget) {
  SearchSpaceConfig cfg;
  cfg.max_pools = 2;
  Rng rng(1);
  int over = 0;
  for (int i = 0; i < 10000; ++i) {
    if (random_genome(cfg, rng).pool_count() > 2) ++over;
  }
  EXPECT_EQ(over, 0);
}

TEST(RandomGenome, AlwaysValid) {
  SearchSpaceConfig cfg;
  Rng rng(2);
  for (int i = 0; i < 10000; ++i) {
    const Genome g = random_genome(cfg, rng);
    ASSERT_TRUE(is_valid(g, cfg)) << serialize(g);
  }
}

TEST(RandomGenome, SkipShareNearSeventyPercent) {
  SearchSpaceConfig cfg;
  cfg.max_pools = 20;  // keep pools from being clipped
  Rng rng(3);
  std::size_t skips = 0;
  std::size_t total = 0;
  for (int i = 0; i < 5000; ++i) {
    const Genome g = random_genome(cfg, rng);
    skips += g.skip_count();
    total += g.size();
  }
  EXPECT_NEAR(static_cast<double>(skips) / static_cast<double>(total), 0.7, 0.01);
}

TEST(Validate, AcceptsPlainSkip) {
  EXPECT_TRUE(validate(Genome({SkipGene{64, 128}}), SearchSpaceConfig{}).empty());
}

TEST(Validate, RejectsEmpty) {
  EXPECT_TRUE(mentions(validate(Genome{}, SearchSpaceConfig{}), "length < 1"));
}

TEST(Validate, RejectsUnknownChannels) {
  EXPECT_TRUE(mentions(validate(Genome({SkipGene{64, 100}}), SearchSpaceConfig{}),
                       "f2 not in feature-map set"));
  EXPECT_TRUE(mentions(validate(Genome({SkipGene{100, 64}}), SearchSpaceConfig{}),
                       "f1 not in feature-map set"));
}

TEST(Validate, RejectsTooLongAndTooManyPools) {
  auto cfg = small_space();
  cfg.max_pools = 1;
  const auto problems = validate(parse("Pmax|Pmax|S64.64|S64.64|S64.64"), cfg);
  EXPECT_EQ(problems.size(), 2u);
}

TEST(Repair, EmptyGetsOneSkip) {
  const auto cfg = small_space();
  Rng rng(0);
  const Genome g = repair(Genome{}, cfg, rng);
  ASSERT_EQ(g.size(), 1u);
  EXPECT_TRUE(is_skip(g.genes()[0]));
  EXPECT_TRUE(is_valid(g, cfg));
}

TEST(Repair, IdentityOnValid) {
  const auto cfg = small_space();
  Rng rng(0);
  const Genome g = parse("S64.128|Pmean|S128.128");
  EXPECT_EQ(repair(g, cfg, rng), g);
}

TEST(Repair, DropsTrailingPools) {
  SearchSpaceConfig cfg;
  cfg.max_pools = 2;
  Rng rng(0);
  EXPECT_EQ(serialize(repair(parse("Pmax|Pmax|Pmax"), cfg, rng)), "Pmax|Pmax");
  EXPECT_EQ(serialize(repair(parse("Pmax|S64.64|Pmean|Pmax|S64.64"), cfg, rng)),
            "Pmax|S64.64|Pmean|S64.64");
}

TEST(Repair, TruncatesTail) {
  const auto cfg = small_space();
  Rng rng(0);
  EXPECT_EQ(serialize(repair(parse("S64.64|Pmax|S64.128|Pmean|S128.128|S64.64"), cfg, rng)),
            "S64.64|Pmax|S64.128|Pmean");
}

TEST(Repair, SnapsChannelsToAllowedSet) {
  const auto cfg = small_space();
  Rng rng(0);
  EXPECT_EQ(serialize(repair(parse("S70.200"), cfg, rng)), "S64.128");
}

TEST(Repair, Idempotent) {
  SearchSpaceConfig cfg;
  cfg.max_length = 5;
  cfg.max_pools = 1;
  SearchSpaceConfig wide;
  wide.max_length = 12;
  wide.max_pools = 12;
  Rng rng(11);
  for (int i = 0; i < 2000; ++i) {
    const Genome raw = random_genome(wide, rng);
    const Genome once = repair(raw, cfg, rng);
    ASSERT_TRUE(is_valid(once, cfg));
    ASSERT_EQ(repair(once, cfg, rng), once);
  }
}

TEST(CanonicalId, Format) {
  EXPECT_EQ(canonical_id(Genome({SkipGene{64, 128}, PoolGene{PoolKind::max}})).value,
            "S64.128|Pmax");
  EXPECT_NE(canonical_id(Genome({SkipGene{64, 128}})), canonical_id(Genome({SkipGene{128, 64}})));
  EXPECT_EQ(canonical_id(parse("S64.64|Pmean")),
            canonical_id(Genome({SkipGene{64, 64}, PoolGene{PoolKind::mean}})));
}

TEST(CanonicalId, InjectiveOnSmallSpace) {
  auto cfg = small_space();
  const auto all = oracle::enumerate_valid(cfg);
  std::unordered_set<GenomeId> ids;
  for (const auto& g : all) ids.insert(canonical_id(g));
  EXPECT_EQ(ids.size(), all.size());
}

TEST(Parse, RoundTrips) {
  EXPECT_EQ(serialize(parse("S64.64")), "S64.64");
  EXPECT_EQ(parse("Pmax|S256.512"),
            Genome({PoolGene{PoolKind::max}, SkipGene{256, 512}}));
  auto cfg = small_space();
  for (const auto& g : oracle::enumerate_valid(cfg)) {
    ASSERT_EQ(parse(serialize(g)), g);
  }
}

TEST(Parse, UnknownTag) {
  try {
    parse("X9");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("unknown gene tag"), std::string::npos);
  }
}

TEST(Parse, RejectsMalformed) {
  for (const char* text : {"", "|", "S64.64|", "S64", "S64.", "S.64", "S6a.64", "S64.64 ",
                           "Pmin", "S-1.64", "S064.64", "S64.64||Pmax",
                           "S99999999999999999999.64"}) {
    EXPECT_THROW(parse(text), ParseError) << text;
  }
}

}  // namespace
}  // namespace evonas
