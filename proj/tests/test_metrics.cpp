#include <gtest/gtest.h>

#include <cmath>

#include "mcmh/error.hpp"
#include "mcmh/metrics.hpp"
#include "mcmh/random.hpp"
#include "oracles.hpp"

using namespace mcmh;

TEST(AveragePrecision, HandComputed) {
  // Ranking: +, -, +  -> (1/1 + 2/3) / 2
  const std::vector<ScoredItem> items{{0.9, 1}, {0.8, 0}, {0.1, 1}};
  EXPECT_DOUBLE_EQ(*average_precision(items), (1.0 + 2.0 / 3.0) / 2.0);
  EXPECT_FALSE(average_precision(std::vector<ScoredItem>{{0.3, 0}}).has_value());
}

TEST(AveragePrecision, TiesKeepInputOrder) {
  const std::vector<ScoredItem> neg_first{{0.5, 0}, {0.5, 1}};
  const std::vector<ScoredItem> pos_first{{0.5, 1}, {0.5, 0}};
  EXPECT_DOUBLE_EQ(*average_precision(neg_first), 0.5);
  EXPECT_DOUBLE_EQ(*average_precision(pos_first), 1.0);
}

TEST(AveragePrecision, InvariantUnderMonotoneTransform) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ScoredItem> a(2 + rng.below(20));
    for (auto& s : a) s = {rng.uniform(), rng.bernoulli(0.4) ? 1 : 0};
    a[0].label = 1;
    auto b = a;
    for (auto& s : b) s.score = std::exp(3.0 * s.score) + 7.0;
    EXPECT_DOUBLE_EQ(*average_precision(a), *average_precision(b));
  }
}

TEST(Map, MatchesBruteForceAndStaysInRange) {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<RankedGroup> groups;
    std::vector<std::vector<ScoredItem>> raw;
    const std::size_t n = 1 + rng.below(8);
    for (std::size_t g = 0; g < n; ++g) {
      std::vector<ScoredItem> items(1 + rng.below(12));
      for (auto& s : items) s = {static_cast<double>(rng.below(5)) / 4.0, rng.bernoulli(0.3) ? 1 : 0};
      raw.push_back(items);
      groups.push_back({g, items});
    }
    const auto expected = oracle::brute_force_map(raw);
    if (!expected) {
      EXPECT_THROW(map_score(groups), DataError);
      continue;
    }
    const auto report = map_score(groups);
    EXPECT_NEAR(report.map, *expected, 1e-12);
    EXPECT_GE(report.map, 0.0);
    EXPECT_LE(report.map, 1.0);
    EXPECT_EQ(report.groups.size() + report.skipped, n);
  }
}

TEST(Map, PerfectIffPositivesFirst) {
  std::vector<RankedGroup> groups{{0, {{0.9, 1}, {0.2, 0}}}, {1, {{0.7, 1}, {0.6, 1}, {0.1, 0}}}};
  EXPECT_DOUBLE_EQ(map_score(groups).map, 1.0);
  groups[1].items[2].score = 0.65;
  EXPECT_LT(map_score(groups).map, 1.0);
}

TEST(Map, GroupsWithoutPositivesAreSkippedAndCounted) {
  const std::vector<RankedGroup> groups{{0, {{0.9, 1}}}, {1, {{0.3, 0}, {0.2, 0}}}};
  const auto report = map_score(groups);
  EXPECT_DOUBLE_EQ(report.map, 1.0);
  EXPECT_EQ(report.skipped, 1u);
  EXPECT_THROW(map_score(std::vector<RankedGroup>{{0, {{0.1, 0}}}}), DataError);
}

TEST(Map, RandomRankingMatchesClosedFormExpectation) {
  // A constant scorer ranks in input order; averaging over uniformly shuffled
  // inputs recovers the expected AP of a random ranking.
  for (const auto [n, r] : {std::pair<std::size_t, std::size_t>{2, 1}, {5, 2}, {9, 4}}) {
    std::vector<ScoredItem> items(n, {0.5, 0});
    for (std::size_t i = 0; i < r; ++i) items[i].label = 1;
    Rng rng(n);
    double total = 0.0;
    const int rounds = 100000;
    for (int k = 0; k < rounds; ++k) {
      rng.shuffle(std::span(items));
      total += *average_precision(items);
    }
    EXPECT_NEAR(total / rounds, oracle::expected_random_ap(n, r), 5e-3);
  }
}

TEST(Grouping, ByHeadOrderedByKey) {
  std::vector<Instance> insts(4);
  insts[0] = {5, 1, Label::positive, {}};
  insts[1] = {2, 1, Label::negative, {}};
  insts[2] = {5, 2, Label::negative, {}};
  insts[3] = {2, 3, Label::positive, {}};
  const std::vector<double> scores{0.1, 0.2, 0.3, 0.4};
  const auto groups = group_scores(insts, scores, GroupBy::head);
  ASSERT_EQ(groups.size(), 2u);
  EXPECT_EQ(groups[0].key, 2u);
  EXPECT_EQ(groups[1].items.size(), 2u);
  EXPECT_EQ(group_scores(insts, scores, GroupBy::global).size(), 1u);
  const std::vector<double> bad{0.1, NAN, 0.3, 0.4};
  EXPECT_THROW(group_scores(insts, bad, GroupBy::head), NumericError);
}

TEST(Permutation, IdenticalListsAreNotSignificant) {
  const std::vector<double> a{0.5, 0.7, 0.9, 0.4};
  EXPECT_DOUBLE_EQ(paired_permutation_test(a, a, 999, 1), 1.0);
  std::vector<double> hi(30), lo(30);
  for (int i = 0; i < 30; ++i) {
    hi[i] = 0.9 + 0.001 * i;
    lo[i] = 0.5 + 0.002 * i;
  }
  EXPECT_LT(paired_permutation_test(hi, lo, 999, 1), 0.01);
}
