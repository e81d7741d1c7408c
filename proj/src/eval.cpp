#include "mcmh/eval.hpp"

#include <stdexcept>

#include "mcmh/error.hpp"
#include "mcmh/random.hpp"

namespace mcmh {

const char* mode_name(RunMode mode) {
  switch (mode) {
    case RunMode::game_mlp: return "game_mlp";
    case RunMode::game_linear: return "game_linear";
    case RunMode::d_all: return "d_all";
    case RunMode::single_chain_gen: return "single_chain_gen";
  }
  return "?";
}

RunMode parse_mode(std::string_view name) {
  for (const auto mode : {RunMode::game_mlp, RunMode::game_linear, RunMode::d_all,
                          RunMode::single_chain_gen}) {
    if (name == mode_name(mode)) return mode;
  }
  throw std::invalid_argument("unknown mode '" + std::string(name) + "'");
}

std::string mode_tag(RunMode mode, std::size_t d) {
  if (mode == RunMode::d_all) return mode_name(mode);
  return std::string(mode_name(mode)) + "-d" + std::to_string(d);
}

ExtractedTask extract_task(const KnowledgeGraph& graph, const TaskDataset& task,
                           const VocabularyOptions& options) {
  std::vector<EntityPair> positives;
  for (const auto& p : task.train) {
    if (p.label == Label::positive) positives.push_back({p.head, p.tail});
  }
  if (positives.empty()) throw DataError("task " + task.target_name + " has no training positives");
  ExtractedTask out{build_vocabulary(graph, positives, task.target, options), {}};
  out.encoded.dim = out.vocab.size();
  out.encoded.train = encode_instances(out.vocab, graph, task.train);
  out.encoded.dev = encode_instances(out.vocab, graph, task.dev);
  out.encoded.test = encode_instances(out.vocab, graph, task.test);
  return out;
}

MapReport evaluate_task(const GameModel& model, std::span<const Instance> test,
                        GroupBy group_by) {
  if (test.empty()) throw DataError("MAP undefined: empty test set");
  const auto scores = predict_all(model, test);
  return map_score(group_scores(test, scores, group_by));
}

TrainResult train_mode(const EncodedTask& task, RunMode mode, std::size_t d, double lambda_s,
                       const TrainConfig& config) {
  switch (mode) {
    case RunMode::game_mlp:
      return train_task(task.train, task.dev, task.dim, d, Arch::mlp, lambda_s, config);
    case RunMode::game_linear:
      return train_task(task.train, task.dev, task.dim, d, Arch::linear, lambda_s, config);
    case RunMode::d_all: {
      GameModel model = GameModel::create(task.dim, d, lambda_s, Arch::mlp, config.seed);
      model.selection = Selection::all;
      return train_predictor(std::move(model), task.train, task.dev, config);
    }
    case RunMode::single_chain_gen: {
      TrainResult stage1 =
          train_task(task.train, task.dev, task.dim, 1, Arch::mlp, lambda_s, config);
      GameModel model = std::move(stage1.model);
      model.d = d;
      Rng rng(derive_seed(config.seed, "init", 3));
      model.predictor = make_network(Arch::mlp, task.dim, 2, &rng);
      TrainConfig stage2 = config;
      stage2.seed = derive_seed(config.seed, "stage2");
      return train_predictor(std::move(model), task.train, task.dev, stage2);
    }
  }
  throw std::invalid_argument("unknown mode");
}

ModeResult run_mode(const EncodedTask& task, RunMode mode, std::size_t d, double lambda_s,
                    const TrainConfig& config) {
  ModeResult result{train_mode(task, mode, d, lambda_s, config), {}};
  result.test = evaluate_task(result.training.model, task.test, config.group_by);
  return result;
}

}  // namespace mcmh
