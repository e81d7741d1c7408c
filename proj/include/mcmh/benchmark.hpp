#pragma once

// Synthetic planted-rule datasets with known ground truth.
//
// Layout: query pairs are head x tail combinations. Each chain c of length L
// realized for (h, t) runs through intermediates private to (h, c):
//   h -c1-> m1(h,c) -c2-> ... -cL-> t
// so only the last edge is pair specific. With every chain of length >= 2
// the graph is layered (heads, intermediates, tails) and the chains between
// a query pair are exactly the ones planted for it.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mcmh/kg.hpp"

namespace mcmh {

enum class BenchmarkRule {
  single,       ///< positive iff the first planted chain connects the pair
  conjunction,  ///< positive iff every planted chain connects the pair
  noisy_weak,   ///< label drawn first; weak chains appear more often on positives
};

const char* rule_name(BenchmarkRule rule);
BenchmarkRule parse_rule(std::string_view name);

struct BenchmarkSpec {
  BenchmarkRule rule = BenchmarkRule::conjunction;
  std::size_t heads = 10;
  std::size_t tails = 30;
  std::size_t train_pairs = 200;
  std::size_t test_pairs = 100;
  /// Relation-name sequences; used by single and conjunction.
  std::vector<std::vector<std::string>> planted = {{"plays_for", "home_stadium"},
                                                   {"member_of", "league_venue"}};
  /// Number of generated weak chains for noisy_weak.
  std::size_t weak_chains = 5;
  double weak_rate_positive = 0.5;
  double weak_rate_negative = 0.15;
  /// Label-independent chains over a small relation alphabet.
  std::size_t distractor_chains = 24;
  std::size_t distractor_relations = 6;
  double distractor_rate = 0.3;
  double positive_rate = 0.35;
  /// Conjunction negatives that carry a non-empty proper subset of the planted chains.
  double near_miss_rate = 0.85;
  /// Label flip probability.
  double noise = 0.0;
  int max_hops = 3;
  std::string target = "target_relation";
  std::uint64_t seed = 0;
};

struct Benchmark {
  KnowledgeGraph graph;
  TaskDataset task;
  /// Chains that determine (or correlate with) the label, as "a->b" text.
  std::vector<std::string> planted;
  std::vector<std::string> distractors;
  /// The training pool before the train/dev split, in file order.
  std::vector<LabeledPair> train_pool;
};

/// Throws std::invalid_argument for an infeasible spec (chain longer than
/// max_hops, chain using the target relation, too few pairs, ...).
Benchmark make_benchmark(const BenchmarkSpec& spec, const TaskOptions& task_options = {});

/// Writes `<dir>/graph.tsv` and `<dir>/tasks/<target>/{train,test}.pairs`.
void write_benchmark(const Benchmark& benchmark, const std::filesystem::path& dir);

}  // namespace mcmh
