#include "mcmh/reference.hpp"

#include <unordered_map>

#include "mcmh/error.hpp"

namespace mcmh::reference {

ChainVocabulary build_vocabulary_serial(const KnowledgeGraph& graph,
                                        std::span<const EntityPair> positives,
                                        RelationId target, const VocabularyOptions& options) {
  const PathOptions path_options{options.max_hops, target, options.policy};
  std::vector<RelationChain> seen;
  std::vector<std::size_t> supports;
  std::unordered_map<RelationChain, std::size_t, RelationChainHash> position;
  for (const auto& pair : positives) {
    for (auto& chain : enumerate_paths(graph, pair.head, pair.tail, path_options)) {
      auto [it, inserted] = position.emplace(chain, seen.size());
      if (inserted) {
        seen.push_back(std::move(chain));
        supports.push_back(0);
      }
      ++supports[it->second];
    }
  }
  if (seen.empty()) throw DataError("no candidate chains");
  std::vector<RelationChain> chains;
  std::vector<std::size_t> kept;
  for (const auto pos : rank_by_support(supports, options.max_size)) {
    chains.push_back(std::move(seen[pos]));
    kept.push_back(supports[pos]);
  }
  return ChainVocabulary(target, std::move(chains), std::move(kept), options);
}

std::vector<Instance> encode_instances_serial(const ChainVocabulary& vocab,
                                              const KnowledgeGraph& graph,
                                              std::span<const LabeledPair> pairs) {
  std::vector<Instance> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(encode_instance(vocab, graph, p.head, p.tail, p.label));
  return out;
}

std::vector<double> predict_all_serial(const GameModel& model,
                                       std::span<const Instance> instances) {
  std::vector<double> scores;
  scores.reserve(instances.size());
  for (const auto& inst : instances) scores.push_back(predict(model, inst));
  return scores;
}

}  // namespace mcmh::reference
