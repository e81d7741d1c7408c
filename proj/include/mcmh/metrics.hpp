#pragma once

// Ranking metrics: average precision, MAP over query groups, and a paired
// permutation test for comparing two systems group by group.

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "mcmh/chains.hpp"

namespace mcmh {

struct ScoredItem {
  double score = 0.0;
  int label = 0;
};

/// Items are ranked by descending score; ties keep input order. Returns
/// nullopt when there is no positive item (the group is skipped).
std::optional<double> average_precision(std::span<const ScoredItem> items);

struct RankedGroup {
  std::uint64_t key = 0;
  std::vector<ScoredItem> items;
};

struct GroupAp {
  std::uint64_t key = 0;
  std::size_t items = 0;
  std::size_t positives = 0;
  double ap = 0.0;
};

struct MapReport {
  double map = 0.0;
  std::vector<GroupAp> groups;
  /// Groups without a positive item, excluded from the mean.
  std::size_t skipped = 0;
};

/// Unweighted mean AP over groups with at least one positive. Throws
/// DataError when every group is skipped.
MapReport map_score(std::span<const RankedGroup> groups);

enum class GroupBy { head, global };

const char* group_by_name(GroupBy g);
GroupBy parse_group_by(std::string_view name);

/// Groups scored instances by head entity (ascending key) or into one
/// global group. Items keep input order within each group.
std::vector<RankedGroup> group_scores(std::span<const Instance> instances,
                                      std::span<const double> scores, GroupBy group_by);

/// Two-sided sign-flip permutation test on paired per-group values. Returns
/// the p-value with the observed statistic counted as one permutation.
double paired_permutation_test(std::span<const double> a, std::span<const double> b,
                               std::size_t rounds, std::uint64_t seed);

}  // namespace mcmh
