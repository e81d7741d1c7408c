#pragma once

// Single-threaded versions of the parallel kernels. Tests compare against
// them and the benchmark target times both.

#include <span>
#include <vector>

#include "mcmh/chains.hpp"
#include "mcmh/game.hpp"

namespace mcmh::reference {

ChainVocabulary build_vocabulary_serial(const KnowledgeGraph& graph,
                                        std::span<const EntityPair> positives,
                                        RelationId target, const VocabularyOptions& options = {});

std::vector<Instance> encode_instances_serial(const ChainVocabulary& vocab,
                                              const KnowledgeGraph& graph,
                                              std::span<const LabeledPair> pairs);

std::vector<double> predict_all_serial(const GameModel& model,
                                       std::span<const Instance> instances);

}  // namespace mcmh::reference
