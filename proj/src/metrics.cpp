#include "mcmh/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

#include "mcmh/error.hpp"
#include "mcmh/random.hpp"

namespace mcmh {

std::optional<double> average_precision(std::span<const ScoredItem> items) {
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return items[a].score > items[b].score; });
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (items[order[rank]].label > 0) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  if (hits == 0) return std::nullopt;
  return sum / static_cast<double>(hits);
}

MapReport map_score(std::span<const RankedGroup> groups) {
  MapReport report;
  double total = 0.0;
  for (const auto& group : groups) {
    const auto ap = average_precision(group.items);
    if (!ap) {
      ++report.skipped;
      continue;
    }
    const auto positives = static_cast<std::size_t>(std::count_if(
        group.items.begin(), group.items.end(), [](const ScoredItem& s) { return s.label > 0; }));
    report.groups.push_back({group.key, group.items.size(), positives, *ap});
    total += *ap;
  }
  if (report.groups.empty()) throw DataError("MAP undefined: no group has a positive item");
  report.map = total / static_cast<double>(report.groups.size());
  return report;
}

const char* group_by_name(GroupBy g) { return g == GroupBy::head ? "head" : "global"; }

GroupBy parse_group_by(std::string_view name) {
  if (name == "head") return GroupBy::head;
  if (name == "global") return GroupBy::global;
  throw std::invalid_argument("unknown grouping '" + std::string(name) + "'");
}

std::vector<RankedGroup> group_scores(std::span<const Instance> instances,
                                      std::span<const double> scores, GroupBy group_by) {
  if (instances.size() != scores.size()) {
    throw std::invalid_argument("group_scores: one score per instance required");
  }
  std::map<std::uint64_t, std::vector<ScoredItem>> by_key;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (!std::isfinite(scores[i])) throw NumericError("non-finite score");
    const std::uint64_t key = group_by == GroupBy::head ? instances[i].head : 0;
    by_key[key].push_back({scores[i], instances[i].label_index()});
  }
  std::vector<RankedGroup> groups;
  groups.reserve(by_key.size());
  for (auto& [key, items] : by_key) groups.push_back({key, std::move(items)});
  return groups;
}

double paired_permutation_test(std::span<const double> a, std::span<const double> b,
                               std::size_t rounds, std::uint64_t seed) {
  if (a.size() != b.size() || a.empty()) {
    throw std::invalid_argument("permutation test needs two equal-length, non-empty lists");
  }
  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  const double observed = std::abs(std::accumulate(diff.begin(), diff.end(), 0.0));
  Rng rng(seed);
  std::size_t extreme = 0;
  for (std::size_t r = 0; r < rounds; ++r) {
    double total = 0.0;
    for (const double d : diff) total += rng.bernoulli(0.5) ? d : -d;
    // Small tolerance so exact ties with the observed statistic count.
    if (std::abs(total) >= observed - 1e-12) ++extreme;
  }
  return static_cast<double>(extreme + 1) / static_cast<double>(rounds + 1);
}

}  // namespace mcmh
