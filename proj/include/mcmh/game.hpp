#pragma once

// The three-player selection game: a generator picks a chain subset per
// instance, a predictor scores the target from the subset and a complement
// predictor from the rest. Predictors minimize cross-entropy; the generator
// is trained with REINFORCE on an accuracy-based reward.

#include <cstdint>
#include <span>
#include <vector>

#include "mcmh/chains.hpp"
#include "mcmh/metrics.hpp"
#include "mcmh/neural.hpp"

namespace mcmh {

class Rng;

/// How the predictor's input is formed at inference time.
enum class Selection {
  top_d,  ///< top-d chains by generator probability
  all,    ///< the full availability vector (no generator)
};

struct GameModel {
  /// D -> floor(D/2) -> floor(D/4) -> 2D, read as D rows of (select, reject) logits.
  DenseParams generator;
  DenseParams predictor;
  DenseParams complement;
  std::size_t dim = 0;
  std::size_t d = 1;
  double lambda_s = 1.0;
  Arch predictor_arch = Arch::mlp;
  Selection selection = Selection::top_d;

  /// Random initialization from the "init" sub-stream of `seed`.
  static GameModel create(std::size_t dim, std::size_t d, double lambda_s, Arch predictor_arch,
                          std::uint64_t seed);
  /// All weights zero.
  static GameModel zeros(std::size_t dim, std::size_t d, double lambda_s, Arch predictor_arch);
};

struct TrainConfig {
  int epochs = 100;
  std::size_t batch_size = 20;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  double baseline_momentum = 0.9;
  std::size_t mc_samples_per_instance = 1;
  GroupBy group_by = GroupBy::head;
};

/// Per-chain selection probabilities; zero where the chain is unavailable.
std::vector<double> generator_probs(const GameModel& model, const Instance& instance);

/// Independent Bernoulli draw per available position.
SelectionMask sample_mask(std::span<const double> probs, const BitVector& availability, Rng& rng);

/// The d available positions with the highest probability (ties: lower index).
SelectionMask select_top_d(std::span<const double> probs, const BitVector& availability,
                           std::size_t d);

/// max((|S| - d) / |R|, 0), or 0 when the instance has no candidates.
double sparsity_loss(const SelectionMask& mask, std::size_t d);

/// log pi(mask | probs) summed over available positions.
double mask_log_prob(std::span<const double> probs, const SelectionMask& mask);

/// acc_p - acc_c - lambda_s * sparsity
double game_reward(int acc_p, int acc_c, double lambda_s, double sparsity);

/// 1 when argmax of the network's logits on `input` equals `label`.
int is_correct(const DenseParams& net, const BitVector& input, int label);

/// Reward of one mask under the current (frozen) predictors.
double mask_reward(const GameModel& model, const Instance& instance, const SelectionMask& mask);

/// Gradient of -advantage * log pi(mask) with respect to the generator.
DenseParams reinforce_gradient(const GameModel& model, const Instance& instance,
                               const SelectionMask& mask, double advantage);

struct BatchItem {
  const Instance* instance = nullptr;
  SelectionMask mask;
};

struct PredictorStepResult {
  double loss_p = 0.0;
  double loss_c = 0.0;
  std::vector<int> acc_p;
  std::vector<int> acc_c;
};

/// One Adam step for each predictor on the batch's masked inputs. Losses and
/// accuracies are measured before the update.
PredictorStepResult predictor_step(GameModel& model, std::span<const BatchItem> batch,
                                   AdamState& predictor_opt, AdamState& complement_opt);

struct RewardBaseline {
  double value = 0.0;
  double momentum = 0.9;

  void update(double mean_reward) { value = momentum * value + (1.0 - momentum) * mean_reward; }
};

struct GeneratorStepResult {
  double mean_reward = 0.0;
  double mean_selected = 0.0;
};

GeneratorStepResult generator_step(GameModel& model, std::span<const BatchItem> batch,
                                   std::span<const int> acc_p, std::span<const int> acc_c,
                                   RewardBaseline& baseline, AdamState& generator_opt);

/// The predictor input used at inference for this model.
BitVector inference_input(const GameModel& model, const Instance& instance);

/// softmax(predictor logits)[positive] on the inference input.
double predict(const GameModel& model, const Instance& instance);

/// predict over many instances, parallel with an index-stable result.
std::vector<double> predict_all(const GameModel& model, std::span<const Instance> instances);

struct EpochLog {
  int epoch = 0;
  double loss_p = 0.0;
  double loss_c = 0.0;
  double mean_reward = 0.0;
  double mean_selected = 0.0;
  double dev_map = 0.0;
};

struct TrainResult {
  GameModel model;
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_dev_map = 0.0;
};

/// Dev MAP of the model; NaN when the dev set has no positive.
double dev_map(const GameModel& model, std::span<const Instance> dev, GroupBy group_by);

/// Full three-player training. Returns the model state with the best dev MAP
/// (ties: earlier epoch); epochs = 0 returns the initialized model.
TrainResult train_task(std::span<const Instance> train, std::span<const Instance> dev,
                       std::size_t dim, std::size_t d, Arch predictor_arch, double lambda_s,
                       const TrainConfig& config);

/// Trains only `model.predictor` on inference inputs (the generator, if
/// used, stays frozen). Used for the all-chains and two-stage modes.
TrainResult train_predictor(GameModel model, std::span<const Instance> train,
                            std::span<const Instance> dev, const TrainConfig& config);

void write_training_log(std::ostream& out, std::span<const EpochLog> log);

}  // namespace mcmh
