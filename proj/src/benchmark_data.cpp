#include "mcmh/benchmark.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>

#include "mcmh/error.hpp"
#include "mcmh/random.hpp"

namespace mcmh {
namespace {

using NameChain = std::vector<std::string>;

std::string join(const NameChain& chain) {
  std::string out;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    if (i > 0) out += "->";
    out += chain[i];
  }
  return out;
}

void validate(const BenchmarkSpec& spec, const std::vector<NameChain>& planted) {
  if (spec.max_hops < 1) throw std::invalid_argument("benchmark: max_hops must be >= 1");
  if (spec.heads == 0 || spec.tails == 0) throw std::invalid_argument("benchmark: no entities");
  if (spec.train_pairs + spec.test_pairs > spec.heads * spec.tails) {
    throw std::invalid_argument("benchmark: more query pairs than head x tail combinations");
  }
  if (planted.empty()) throw std::invalid_argument("benchmark: no planted chains");
  if (spec.rule == BenchmarkRule::conjunction && planted.size() < 2) {
    throw std::invalid_argument("benchmark: a conjunction needs at least two planted chains");
  }
  for (const auto& chain : planted) {
    if (chain.empty()) throw std::invalid_argument("benchmark: empty planted chain");
    if (static_cast<int>(chain.size()) > spec.max_hops) {
      throw std::invalid_argument("benchmark: planted chain " + join(chain) +
                                  " is longer than max_hops");
    }
    for (const auto& r : chain) {
      if (r == spec.target || inverse_relation_name(r) == spec.target) {
        throw std::invalid_argument("benchmark: planted chain " + join(chain) +
                                    " uses the target relation");
      }
    }
  }
}

std::vector<NameChain> label_chains(const BenchmarkSpec& spec) {
  if (spec.rule != BenchmarkRule::noisy_weak) {
    if (spec.rule == BenchmarkRule::single && !spec.planted.empty()) return {spec.planted.front()};
    return spec.planted;
  }
  std::vector<NameChain> weak;
  for (std::size_t i = 0; i < spec.weak_chains; ++i) {
    weak.push_back({"weak" + std::to_string(i) + "_a", "weak" + std::to_string(i) + "_b"});
  }
  return weak;
}

std::vector<NameChain> make_distractors(const BenchmarkSpec& spec,
                                        const std::vector<NameChain>& planted, Rng& rng) {
  if (spec.distractor_chains == 0) return {};
  if (spec.distractor_relations == 0 || spec.max_hops < 2) {
    throw std::invalid_argument("benchmark: distractors need relations and max_hops >= 2");
  }
  const std::size_t max_len = std::min<std::size_t>(3, static_cast<std::size_t>(spec.max_hops));
  std::size_t capacity = 0;
  std::size_t power = spec.distractor_relations;
  for (std::size_t len = 2; len <= max_len; ++len) {
    power *= spec.distractor_relations;
    capacity += power;
  }
  if (spec.distractor_chains > capacity) {
    throw std::invalid_argument("benchmark: not enough distinct distractor chains");
  }
  std::set<NameChain> used(planted.begin(), planted.end());
  std::vector<NameChain> out;
  while (out.size() < spec.distractor_chains) {
    // Two of three distractors have length 2, the rest length 3 when allowed.
    const std::size_t len = (max_len == 3 && rng.below(3) == 0) ? 3 : 2;
    NameChain chain;
    for (std::size_t k = 0; k < len; ++k) {
      chain.push_back("rel" + std::to_string(rng.below(spec.distractor_relations)));
    }
    if (used.insert(chain).second) out.push_back(std::move(chain));
  }
  return out;
}

}  // namespace

const char* rule_name(BenchmarkRule rule) {
  switch (rule) {
    case BenchmarkRule::single: return "single";
    case BenchmarkRule::conjunction: return "conjunction";
    case BenchmarkRule::noisy_weak: return "noisy_weak";
  }
  return "?";
}

BenchmarkRule parse_rule(std::string_view name) {
  for (const auto rule :
       {BenchmarkRule::single, BenchmarkRule::conjunction, BenchmarkRule::noisy_weak}) {
    if (name == rule_name(rule)) return rule;
  }
  throw std::invalid_argument("unknown benchmark rule '" + std::string(name) + "'");
}

Benchmark make_benchmark(const BenchmarkSpec& spec, const TaskOptions& task_options) {
  const auto planted = label_chains(spec);
  validate(spec, planted);
  Rng rng(derive_seed(spec.seed, "benchmark"));
  const auto distractors = make_distractors(spec, planted, rng);

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t h = 0; h < spec.heads; ++h) {
    for (std::size_t t = 0; t < spec.tails; ++t) pairs.emplace_back(h, t);
  }
  rng.shuffle(std::span(pairs));
  pairs.resize(spec.train_pairs + spec.test_pairs);

  GraphBuilder builder;
  for (std::size_t h = 0; h < spec.heads; ++h) builder.add_entity("h" + std::to_string(h));
  for (std::size_t t = 0; t < spec.tails; ++t) builder.add_entity("t" + std::to_string(t));

  auto plant = [&](std::size_t h, std::size_t t, const NameChain& chain, std::string_view tag) {
    const std::string head = "h" + std::to_string(h);
    const std::string tail = "t" + std::to_string(t);
    std::string prev = head;
    for (std::size_t k = 0; k + 1 < chain.size(); ++k) {
      // Intermediates are private to (head, chain); re-adding an edge is deduplicated.
      std::string mid = "m" + std::to_string(h) + "_" + std::string(tag) + "_" + std::to_string(k);
      builder.add(prev, chain[k], mid);
      prev = std::move(mid);
    }
    builder.add(prev, chain.back(), tail);
  };

  std::vector<LabeledPair> labeled;
  labeled.reserve(pairs.size());
  const std::size_t n_planted = planted.size();
  for (const auto& [h, t] : pairs) {
    std::vector<bool> present(n_planted, false);
    bool positive = false;
    switch (spec.rule) {
      case BenchmarkRule::single:
        positive = rng.bernoulli(spec.positive_rate);
        present[0] = positive;
        break;
      case BenchmarkRule::conjunction:
        positive = rng.bernoulli(spec.positive_rate);
        if (positive) {
          std::fill(present.begin(), present.end(), true);
        } else if (rng.bernoulli(spec.near_miss_rate)) {
          // Uniform over the non-empty proper subsets.
          const std::uint64_t subsets = (std::uint64_t{1} << n_planted) - 2;
          const std::uint64_t pick = 1 + rng.below(subsets);
          for (std::size_t i = 0; i < n_planted; ++i) present[i] = (pick >> i) & 1U;
        }
        break;
      case BenchmarkRule::noisy_weak:
        positive = rng.bernoulli(spec.positive_rate);
        for (std::size_t i = 0; i < n_planted; ++i) {
          present[i] = rng.bernoulli(positive ? spec.weak_rate_positive : spec.weak_rate_negative);
        }
        break;
    }
    for (std::size_t i = 0; i < n_planted; ++i) {
      if (present[i]) plant(h, t, planted[i], "p" + std::to_string(i));
    }
    for (std::size_t i = 0; i < distractors.size(); ++i) {
      if (rng.bernoulli(spec.distractor_rate)) plant(h, t, distractors[i], "d" + std::to_string(i));
    }
    if (spec.noise > 0.0 && rng.bernoulli(spec.noise)) positive = !positive;
    labeled.push_back({static_cast<EntityId>(h), static_cast<EntityId>(spec.heads + t),
                       positive ? Label::positive : Label::negative});
  }

  Benchmark out;
  out.graph = std::move(builder).build(true);
  out.train_pool.assign(labeled.begin(), labeled.begin() + static_cast<std::ptrdiff_t>(spec.train_pairs));
  std::vector<LabeledPair> test(labeled.begin() + static_cast<std::ptrdiff_t>(spec.train_pairs),
                                labeled.end());
  out.task = make_task(out.graph, spec.target, out.train_pool, std::move(test), task_options);
  for (const auto& c : planted) out.planted.push_back(join(c));
  for (const auto& c : distractors) out.distractors.push_back(join(c));
  return out;
}

void write_benchmark(const Benchmark& benchmark, const std::filesystem::path& dir) {
  const auto task_dir = dir / "tasks" / benchmark.task.target_name;
  std::filesystem::create_directories(task_dir);
  auto open = [](const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    return out;
  };
  {
    auto out = open(dir / "graph.tsv");
    write_triples(out, benchmark.graph);
  }
  {
    auto out = open(task_dir / std::string(kTrainPairsFile));
    write_pairs(out, benchmark.graph, benchmark.train_pool);
  }
  {
    auto out = open(task_dir / std::string(kTestPairsFile));
    write_pairs(out, benchmark.graph, benchmark.task.test);
  }
}

}  // namespace mcmh
