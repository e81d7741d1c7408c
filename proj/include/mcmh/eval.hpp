#pragma once

// Task-level training and evaluation for each run mode.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mcmh/chains.hpp"
#include "mcmh/game.hpp"
#include "mcmh/kg.hpp"
#include "mcmh/metrics.hpp"

namespace mcmh {

enum class RunMode {
  game_mlp,          ///< three-player game, MLP predictors
  game_linear,       ///< three-player game, single-layer predictors
  d_all,             ///< predictor on every available chain, no generator
  single_chain_gen,  ///< d=1 game, frozen generator, fresh predictor on its top-d
};

const char* mode_name(RunMode mode);
RunMode parse_mode(std::string_view name);
/// File-name friendly label: "game_mlp-d2", "d_all".
std::string mode_tag(RunMode mode, std::size_t d);

struct EncodedTask {
  std::size_t dim = 0;
  std::vector<Instance> train;
  std::vector<Instance> dev;
  std::vector<Instance> test;
};

struct ExtractedTask {
  ChainVocabulary vocab;
  EncodedTask encoded;
};

/// Builds the vocabulary from the training positives and encodes every split.
ExtractedTask extract_task(const KnowledgeGraph& graph, const TaskDataset& task,
                           const VocabularyOptions& options = {});

/// MAP of `model` on `test`. Throws DataError on an empty test set or when no
/// group has a positive.
MapReport evaluate_task(const GameModel& model, std::span<const Instance> test,
                        GroupBy group_by = GroupBy::head);

TrainResult train_mode(const EncodedTask& task, RunMode mode, std::size_t d, double lambda_s,
                       const TrainConfig& config);

struct ModeResult {
  TrainResult training;
  MapReport test;
};

ModeResult run_mode(const EncodedTask& task, RunMode mode, std::size_t d, double lambda_s,
                    const TrainConfig& config);

}  // namespace mcmh
