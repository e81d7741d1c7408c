#include "mcmh/game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

#include "mcmh/error.hpp"
#include "mcmh/format.hpp"
#include "mcmh/random.hpp"

namespace mcmh {
namespace {

std::vector<double> to_input(const BitVector& bits) { return {bits.begin(), bits.end()}; }

// Probability of the "select" column of a (select, reject) logit pair.
double select_probability(double select_logit, double reject_logit) {
  const double z = select_logit - reject_logit;
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::vector<double> probs_from_logits(std::span<const double> logits, const BitVector& availability) {
  std::vector<double> probs(availability.size(), 0.0);
  for (std::size_t j = 0; j < availability.size(); ++j) {
    if (availability[j]) probs[j] = select_probability(logits[2 * j], logits[2 * j + 1]);
  }
  return probs;
}

void check_instance(const GameModel& model, const Instance& instance) {
  if (instance.dim() != model.dim) {
    throw std::invalid_argument("instance has " + std::to_string(instance.dim()) +
                                " chains, model expects " + std::to_string(model.dim));
  }
}

void require_finite(double value, const char* what) {
  if (!std::isfinite(value)) throw NumericError(std::string("non-finite ") + what);
}

void require_both_classes(std::span<const Instance> train) {
  bool pos = false;
  bool neg = false;
  for (const auto& inst : train) {
    (inst.label == Label::positive ? pos : neg) = true;
  }
  if (!pos || !neg) {
    throw DataError("training set needs at least one positive and one negative instance");
  }
}

// Keeps the first strictly better finite dev MAP.
struct BestTracker {
  GameModel model;
  int epoch = 0;
  double map = std::numeric_limits<double>::quiet_NaN();
  bool seen_finite = false;

  void offer(const GameModel& candidate, int candidate_epoch, double candidate_map) {
    if (!std::isfinite(candidate_map)) return;
    if (!seen_finite || candidate_map > map) {
      model = candidate;
      epoch = candidate_epoch;
      map = candidate_map;
      seen_finite = true;
    }
  }
};

TrainResult finish(BestTracker best, const GameModel& last, std::vector<EpochLog> log) {
  TrainResult result;
  if (best.seen_finite) {
    result.model = std::move(best.model);
    result.best_epoch = best.epoch;
    result.best_dev_map = best.map;
  } else {
    result.model = last;
    result.best_epoch = log.empty() ? 0 : log.back().epoch;
    result.best_dev_map = std::numeric_limits<double>::quiet_NaN();
  }
  result.log = std::move(log);
  return result;
}

}  // namespace

GameModel GameModel::create(std::size_t dim, std::size_t d, double lambda_s, Arch predictor_arch,
                            std::uint64_t seed) {
  if (dim == 0) throw DataError("empty chain vocabulary");
  if (d == 0) throw std::invalid_argument("d must be at least 1");
  if (lambda_s < 0.0) throw std::invalid_argument("lambda_s must be non-negative");
  Rng gen_rng(derive_seed(seed, "init", 0));
  Rng pred_rng(derive_seed(seed, "init", 1));
  Rng comp_rng(derive_seed(seed, "init", 2));
  GameModel model;
  model.generator = make_network(Arch::mlp, dim, 2 * dim, &gen_rng);
  model.predictor = make_network(predictor_arch, dim, 2, &pred_rng);
  model.complement = make_network(predictor_arch, dim, 2, &comp_rng);
  model.dim = dim;
  model.d = d;
  model.lambda_s = lambda_s;
  model.predictor_arch = predictor_arch;
  return model;
}

GameModel GameModel::zeros(std::size_t dim, std::size_t d, double lambda_s, Arch predictor_arch) {
  GameModel model;
  model.generator = make_network(Arch::mlp, dim, 2 * dim, nullptr);
  model.predictor = make_network(predictor_arch, dim, 2, nullptr);
  model.complement = make_network(predictor_arch, dim, 2, nullptr);
  model.dim = dim;
  model.d = d;
  model.lambda_s = lambda_s;
  model.predictor_arch = predictor_arch;
  return model;
}

std::vector<double> generator_probs(const GameModel& model, const Instance& instance) {
  check_instance(model, instance);
  const auto cache = forward(model.generator, to_input(instance.availability));
  return probs_from_logits(cache.logits(), instance.availability);
}

SelectionMask sample_mask(std::span<const double> probs, const BitVector& availability, Rng& rng) {
  if (probs.size() != availability.size()) {
    throw std::invalid_argument("sample_mask: dimension mismatch");
  }
  BitVector selected(availability.size(), 0);
  for (std::size_t j = 0; j < availability.size(); ++j) {
    if (availability[j]) selected[j] = rng.bernoulli(probs[j]) ? 1 : 0;
  }
  return make_mask(availability, std::move(selected));
}

SelectionMask select_top_d(std::span<const double> probs, const BitVector& availability,
                           std::size_t d) {
  if (probs.size() != availability.size()) {
    throw std::invalid_argument("select_top_d: dimension mismatch");
  }
  std::vector<std::size_t> candidates;
  for (std::size_t j = 0; j < availability.size(); ++j) {
    if (availability[j]) candidates.push_back(j);
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
  BitVector selected(availability.size(), 0);
  for (std::size_t k = 0; k < std::min(d, candidates.size()); ++k) selected[candidates[k]] = 1;
  return make_mask(availability, std::move(selected));
}

double sparsity_loss(const SelectionMask& mask, std::size_t d) {
  const std::size_t candidates = mask.candidate_count();
  if (candidates == 0) return 0.0;
  const double excess =
      static_cast<double>(mask.selected_count()) - static_cast<double>(d);
  return std::max(excess / static_cast<double>(candidates), 0.0);
}

double mask_log_prob(std::span<const double> probs, const SelectionMask& mask) {
  double total = 0.0;
  for (std::size_t j = 0; j < probs.size(); ++j) {
    if (mask.selected[j]) {
      total += std::log(probs[j]);
    } else if (mask.complement[j]) {
      total += std::log1p(-probs[j]);
    }
  }
  return total;
}

double game_reward(int acc_p, int acc_c, double lambda_s, double sparsity) {
  return static_cast<double>(acc_p) - static_cast<double>(acc_c) - lambda_s * sparsity;
}

int is_correct(const DenseParams& net, const BitVector& input, int label) {
  const auto cache = forward(net, to_input(input));
  const auto logits = cache.logits();
  const auto argmax = std::max_element(logits.begin(), logits.end()) - logits.begin();
  return argmax == label ? 1 : 0;
}

double mask_reward(const GameModel& model, const Instance& instance, const SelectionMask& mask) {
  const int label = instance.label_index();
  return game_reward(is_correct(model.predictor, mask.selected, label),
                     is_correct(model.complement, mask.complement, label), model.lambda_s,
                     sparsity_loss(mask, model.d));
}

DenseParams reinforce_gradient(const GameModel& model, const Instance& instance,
                               const SelectionMask& mask, double advantage) {
  check_instance(model, instance);
  const auto cache = forward(model.generator, to_input(instance.availability));
  const auto probs = probs_from_logits(cache.logits(), instance.availability);
  std::vector<double> dlogits(2 * model.dim, 0.0);
  for (std::size_t j = 0; j < model.dim; ++j) {
    if (!instance.availability[j]) continue;
    // d log pi / d(select logit) = s - p, and the opposite for the reject logit.
    const double g = -advantage * (static_cast<double>(mask.selected[j]) - probs[j]);
    dlogits[2 * j] = g;
    dlogits[2 * j + 1] = -g;
  }
  return backward(model.generator, cache, dlogits);
}

PredictorStepResult predictor_step(GameModel& model, std::span<const BatchItem> batch,
                                   AdamState& predictor_opt, AdamState& complement_opt) {
  PredictorStepResult result;
  if (batch.empty()) return result;
  DenseParams grad_p = zeros_like(model.predictor);
  DenseParams grad_c = zeros_like(model.complement);
  const double scale = 1.0 / static_cast<double>(batch.size());
  auto step_one = [scale](const DenseParams& net, const BitVector& bits, int label,
                          DenseParams& grad, double& loss) {
    const auto cache = forward(net, to_input(bits));
    const auto ce = cross_entropy(cache.logits(), label);
    accumulate(grad, backward(net, cache, ce.dlogits), scale);
    loss += ce.loss * scale;
    const auto logits = cache.logits();
    return (std::max_element(logits.begin(), logits.end()) - logits.begin()) == label ? 1 : 0;
  };
  for (const auto& item : batch) {
    check_instance(model, *item.instance);
    const int label = item.instance->label_index();
    result.acc_p.push_back(step_one(model.predictor, item.mask.selected, label, grad_p, result.loss_p));
    result.acc_c.push_back(
        step_one(model.complement, item.mask.complement, label, grad_c, result.loss_c));
  }
  require_finite(result.loss_p, "predictor loss");
  require_finite(result.loss_c, "complement predictor loss");
  adam_step(model.predictor, grad_p, predictor_opt);
  adam_step(model.complement, grad_c, complement_opt);
  return result;
}

GeneratorStepResult generator_step(GameModel& model, std::span<const BatchItem> batch,
                                   std::span<const int> acc_p, std::span<const int> acc_c,
                                   RewardBaseline& baseline, AdamState& generator_opt) {
  GeneratorStepResult result;
  if (batch.empty()) return result;
  if (acc_p.size() != batch.size() || acc_c.size() != batch.size()) {
    throw std::invalid_argument("generator_step: accuracy lists do not match the batch");
  }
  DenseParams grad = zeros_like(model.generator);
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& mask = batch[i].mask;
    const double reward =
        game_reward(acc_p[i], acc_c[i], model.lambda_s, sparsity_loss(mask, model.d));
    accumulate(grad, reinforce_gradient(model, *batch[i].instance, mask, reward - baseline.value),
               scale);
    result.mean_reward += reward * scale;
    result.mean_selected += static_cast<double>(mask.selected_count()) * scale;
  }
  adam_step(model.generator, grad, generator_opt);
  baseline.update(result.mean_reward);
  return result;
}

BitVector inference_input(const GameModel& model, const Instance& instance) {
  check_instance(model, instance);
  if (model.selection == Selection::all) return instance.availability;
  return select_top_d(generator_probs(model, instance), instance.availability, model.d).selected;
}

double predict(const GameModel& model, const Instance& instance) {
  const auto cache = forward(model.predictor, to_input(inference_input(model, instance)));
  return softmax(cache.logits())[1];
}

std::vector<double> predict_all(const GameModel& model, std::span<const Instance> instances) {
  std::vector<double> scores(instances.size());
  const auto n = static_cast<std::int64_t>(instances.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      scores[i] = predict(model, instances[i]);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return scores;
}

double dev_map(const GameModel& model, std::span<const Instance> dev, GroupBy group_by) {
  if (dev.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto scores = predict_all(model, dev);
  const auto groups = group_scores(dev, scores, group_by);
  try {
    return map_score(groups).map;
  } catch (const DataError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

TrainResult train_task(std::span<const Instance> train, std::span<const Instance> dev,
                       std::size_t dim, std::size_t d, Arch predictor_arch, double lambda_s,
                       const TrainConfig& config) {
  if (config.batch_size == 0) throw std::invalid_argument("batch_size must be at least 1");
  if (config.baseline_momentum < 0.0 || config.baseline_momentum >= 1.0) {
    throw std::invalid_argument("baseline_momentum must lie in [0, 1)");
  }
  GameModel model = GameModel::create(dim, d, lambda_s, predictor_arch, config.seed);
  require_both_classes(train);

  BestTracker best;
  if (config.epochs <= 0) {
    best.offer(model, 0, dev_map(model, dev, config.group_by));
    return finish(std::move(best), model, {});
  }

  AdamState gen_opt = AdamState::for_params(model.generator, config.lr);
  AdamState pred_opt = AdamState::for_params(model.predictor, config.lr);
  AdamState comp_opt = AdamState::for_params(model.complement, config.lr);
  RewardBaseline baseline{0.0, config.baseline_momentum};
  const auto shuffle_seed = derive_seed(config.seed, "shuffle");
  const auto sampling_seed = derive_seed(config.seed, "sampling");
  const std::size_t samples = std::max<std::size_t>(config.mc_samples_per_instance, 1);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<EpochLog> log;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng shuffler(derive_seed(shuffle_seed, static_cast<std::uint64_t>(epoch), 0));
    shuffler.shuffle(std::span(order));
    EpochLog entry{epoch, 0, 0, 0, 0, 0};
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(start + config.batch_size, order.size());
      std::vector<BatchItem> batch;
      batch.reserve((end - start) * samples);
      for (std::size_t k = start; k < end; ++k) {
        const Instance& inst = train[order[k]];
        const auto probs = generator_probs(model, inst);
        for (std::size_t s = 0; s < samples; ++s) {
          // Each (epoch, instance, sample) draws from its own stream.
          Rng rng(derive_seed(sampling_seed, static_cast<std::uint64_t>(epoch), order[k], s));
          batch.push_back({&inst, sample_mask(probs, inst.availability, rng)});
        }
      }
      const auto pred = predictor_step(model, batch, pred_opt, comp_opt);
      const auto gen = generator_step(model, batch, pred.acc_p, pred.acc_c, baseline, gen_opt);
      const auto n = static_cast<double>(batch.size());
      entry.loss_p += pred.loss_p * n;
      entry.loss_c += pred.loss_c * n;
      entry.mean_reward += gen.mean_reward * n;
      entry.mean_selected += gen.mean_selected * n;
      seen += batch.size();
    }
    const auto total = static_cast<double>(std::max<std::size_t>(seen, 1));
    entry.loss_p /= total;
    entry.loss_c /= total;
    entry.mean_reward /= total;
    entry.mean_selected /= total;
    entry.dev_map = dev_map(model, dev, config.group_by);
    log.push_back(entry);
    best.offer(model, epoch, entry.dev_map);
  }
  return finish(std::move(best), model, std::move(log));
}

TrainResult train_predictor(GameModel model, std::span<const Instance> train,
                            std::span<const Instance> dev, const TrainConfig& config) {
  if (config.batch_size == 0) throw std::invalid_argument("batch_size must be at least 1");
  require_both_classes(train);
  BestTracker best;
  if (config.epochs <= 0) {
    best.offer(model, 0, dev_map(model, dev, config.group_by));
    return finish(std::move(best), model, {});
  }

  // The generator is frozen, so predictor inputs are fixed for the whole run.
  std::vector<std::vector<double>> inputs;
  inputs.reserve(train.size());
  double mean_selected = 0.0;
  for (const auto& inst : train) {
    const auto bits = inference_input(model, inst);
    mean_selected += static_cast<double>(popcount(bits));
    inputs.push_back(to_input(bits));
  }
  mean_selected /= static_cast<double>(train.size());

  AdamState opt = AdamState::for_params(model.predictor, config.lr);
  const auto shuffle_seed = derive_seed(config.seed, "shuffle");
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<EpochLog> log;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng shuffler(derive_seed(shuffle_seed, static_cast<std::uint64_t>(epoch), 0));
    shuffler.shuffle(std::span(order));
    EpochLog entry{epoch, 0, 0, 0, mean_selected, 0};
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(start + config.batch_size, order.size());
      const double scale = 1.0 / static_cast<double>(end - start);
      DenseParams grad = zeros_like(model.predictor);
      double loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const auto cache = forward(model.predictor, inputs[order[k]]);
        const auto ce = cross_entropy(cache.logits(), train[order[k]].label_index());
        accumulate(grad, backward(model.predictor, cache, ce.dlogits), scale);
        loss += ce.loss;
      }
      require_finite(loss, "predictor loss");
      adam_step(model.predictor, grad, opt);
      entry.loss_p += loss;
    }
    entry.loss_p /= static_cast<double>(train.size());
    entry.dev_map = dev_map(model, dev, config.group_by);
    log.push_back(entry);
    best.offer(model, epoch, entry.dev_map);
  }
  return finish(std::move(best), model, std::move(log));
}

void write_training_log(std::ostream& out, std::span<const EpochLog> log) {
  out << "# mcmh-training-log v1\n";
  out << "epoch\tloss_p\tloss_c\tmean_reward\tmean_selected\tdev_map\n";
  for (const auto& e : log) {
    out << e.epoch << '\t' << fixed(e.loss_p) << '\t' << fixed(e.loss_c) << '\t'
        << fixed(e.mean_reward) << '\t' << fixed(e.mean_selected) << '\t' << fixed(e.dev_map)
        << '\n';
  }
}

}  // namespace mcmh
