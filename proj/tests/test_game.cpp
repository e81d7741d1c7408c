#include <gtest/gtest.h>

#include <cmath>

#include "game_oracles.hpp"
#include "mcmh/benchmark.hpp"
#include "mcmh/error.hpp"
#include "mcmh/eval.hpp"
#include "mcmh/game.hpp"
#include "mcmh/random.hpp"

using namespace mcmh;

namespace {

SelectionMask mask_of(const BitVector& avail, const BitVector& sel) { return make_mask(avail, sel); }

Instance instance(BitVector bits, Label label = Label::positive) {
  return {0, 1, label, std::move(bits)};
}

}  // namespace

TEST(Generator, ZeroWeightsGiveHalfOnAvailablePositions) {
  const auto model = GameModel::zeros(4, 1, 1.0, Arch::mlp);
  EXPECT_EQ(generator_probs(model, instance({1, 1, 0, 1})),
            (std::vector<double>{0.5, 0.5, 0.0, 0.5}));
  EXPECT_EQ(generator_probs(model, instance({0, 0, 0, 0})), (std::vector<double>(4, 0.0)));
  EXPECT_THROW(generator_probs(model, instance({1, 1})), std::invalid_argument);
}

TEST(Generator, ProbabilitiesBoundedByAvailability) {
  const auto model = GameModel::create(10, 2, 1.0, Arch::mlp, 4);
  Rng rng(8);
  for (int k = 0; k < 50; ++k) {
    BitVector bits(10);
    for (auto& b : bits) b = rng.bernoulli(0.5) ? 1 : 0;
    const auto probs = generator_probs(model, instance(bits));
    for (std::size_t j = 0; j < 10; ++j) {
      EXPECT_GE(probs[j], 0.0);
      EXPECT_LE(probs[j], static_cast<double>(bits[j]));
    }
  }
}

TEST(Sampling, DegenerateProbabilities) {
  Rng rng(1);
  const BitVector avail{1, 0, 1, 1};
  const auto all = sample_mask(std::vector<double>{1, 0, 1, 1}, avail, rng);
  EXPECT_EQ(all.selected, avail);
  const auto none = sample_mask(std::vector<double>(4, 0.0), avail, rng);
  EXPECT_EQ(none.selected_count(), 0u);
  EXPECT_EQ(none.complement, avail);
}

TEST(Sampling, BernoulliFrequency) {
  Rng rng(derive_seed(0, "sampling"));
  const BitVector avail(10, 1);
  const std::vector<double> probs(10, 0.3);
  std::size_t hits = 0;
  const int draws = 10000;
  for (int k = 0; k < draws; ++k) hits += sample_mask(probs, avail, rng).selected_count();
  EXPECT_NEAR(static_cast<double>(hits) / (10.0 * draws), 0.3, 0.01);
}

TEST(Sampling, MasksAreValid) {
  Rng rng(3);
  for (int k = 0; k < 200; ++k) {
    BitVector avail(12);
    std::vector<double> probs(12);
    for (std::size_t j = 0; j < 12; ++j) {
      avail[j] = rng.bernoulli(0.6) ? 1 : 0;
      probs[j] = avail[j] ? rng.uniform() : 0.0;
    }
    for (const auto& m : {sample_mask(probs, avail, rng), select_top_d(probs, avail, 1 + rng.below(5))}) {
      for (std::size_t j = 0; j < 12; ++j) {
        EXPECT_LE(m.selected[j], avail[j]);
        EXPECT_FALSE(m.selected[j] && m.complement[j]);
        EXPECT_EQ(m.selected[j] | m.complement[j], avail[j]);
      }
    }
  }
}

TEST(Sparsity, WorkedValues) {
  auto mask_with = [](std::size_t selected, std::size_t candidates) {
    BitVector avail(candidates, 1), sel(candidates, 0);
    for (std::size_t j = 0; j < selected; ++j) sel[j] = 1;
    return make_mask(avail, sel);
  };
  EXPECT_EQ(sparsity_loss(mask_with(7, 20), 5), 0.1);
  EXPECT_EQ(sparsity_loss(mask_with(5, 20), 5), 0.0);
  EXPECT_EQ(sparsity_loss(mask_with(2, 4), 5), 0.0);
  EXPECT_EQ(sparsity_loss(mask_with(0, 0), 1), 0.0);
}

TEST(TopD, Examples) {
  const BitVector avail4(4, 1);
  EXPECT_EQ(select_top_d(std::vector<double>{0.9, 0.1, 0.8, 0.4}, avail4, 2).selected,
            (BitVector{1, 0, 1, 0}));
  const BitVector avail3(3, 1);
  EXPECT_EQ(select_top_d(std::vector<double>{0.5, 0.5, 0.5}, avail3, 2).selected,
            (BitVector{1, 1, 0}));
  const BitVector sparse{0, 1, 0, 1};
  EXPECT_EQ(select_top_d(std::vector<double>{0, 0.2, 0, 0.7}, sparse, 5).selected, sparse);
}

TEST(Reward, DefinitionAndBounds) {
  EXPECT_EQ(game_reward(1, 0, 1.0, 0.0), 1.0);
  EXPECT_EQ(game_reward(1, 1, 1.0, 0.0), 0.0);
  EXPECT_EQ(game_reward(0, 1, 2.0, 1.0), -3.0);
  Rng rng(2);
  for (int k = 0; k < 200; ++k) {
    const double lambda = rng.uniform(0.0, 3.0);
    BitVector avail(8), sel(8);
    for (std::size_t j = 0; j < 8; ++j) {
      avail[j] = rng.bernoulli(0.7) ? 1 : 0;
      sel[j] = avail[j] && rng.bernoulli(0.5) ? 1 : 0;
    }
    const double r = game_reward(static_cast<int>(rng.below(2)), static_cast<int>(rng.below(2)),
                                 lambda, sparsity_loss(make_mask(avail, sel), 1 + rng.below(4)));
    EXPECT_GE(r, -1.0 - lambda);
    EXPECT_LE(r, 1.0);
  }
}

TEST(Reinforce, GradientMatchesFiniteDifferenceOfLogProbability) {
  auto [model, inst] = oracle::reinforce_fixture(5);
  inst.availability = {1, 0, 1, 1, 0, 1, 1, 1};
  const auto mask = mask_of(inst.availability, {1, 0, 0, 1, 0, 0, 1, 0});
  const double advantage = 0.7;
  const auto analytic = oracle::flatten(reinforce_gradient(model, inst, mask, advantage));
  const auto numeric = oracle::numeric_gradient(model.generator, [&](const DenseParams& g) {
    GameModel m = model;
    m.generator = g;
    return -advantage * mask_log_prob(generator_probs(m, inst), mask);
  });
  EXPECT_LT(oracle::relative_error(analytic, numeric), 1e-6);
}

TEST(Reinforce, MonteCarloAgreesWithExhaustiveExpectation) {
  const auto [model, inst] = oracle::reinforce_fixture(6);
  double expected_reward = 0.0;
  oracle::exhaustive_policy_gradient(model, inst, 0.0, &expected_reward);
  const auto exact = oracle::exhaustive_policy_gradient(model, inst, expected_reward);
  const auto probs = generator_probs(model, inst);
  Rng rng(derive_seed(6, "sampling"));
  std::vector<double> mean(exact.size(), 0.0);
  const int samples = 20000;
  for (int s = 0; s < samples; ++s) {
    const auto mask = sample_mask(probs, inst.availability, rng);
    const auto g = oracle::flatten(
        reinforce_gradient(model, inst, mask, mask_reward(model, inst, mask) - expected_reward));
    for (std::size_t i = 0; i < g.size(); ++i) mean[i] += g[i] / samples;
  }
  EXPECT_LT(oracle::relative_error(mean, exact), 0.1);
}

TEST(PredictorStep, ZeroPredictorsStartAtLogTwo) {
  auto model = GameModel::zeros(3, 1, 1.0, Arch::mlp);
  const auto a = instance({1, 0, 1}, Label::positive);
  const auto b = instance({0, 1, 1}, Label::negative);
  std::vector<BatchItem> batch{{&a, mask_of(a.availability, {1, 0, 0})},
                               {&b, mask_of(b.availability, {0, 1, 0})}};
  auto po = AdamState::for_params(model.predictor, 1e-3);
  auto co = AdamState::for_params(model.complement, 1e-3);
  const auto result = predictor_step(model, batch, po, co);
  EXPECT_DOUBLE_EQ(result.loss_p, std::log(2.0));
  EXPECT_DOUBLE_EQ(result.loss_c, std::log(2.0));
  // Equal logits: argmax picks class 0, so only the negative counts as correct.
  EXPECT_EQ(result.acc_p, (std::vector<int>{0, 1}));
}

TEST(Predict, ZeroPredictorGivesHalfAndOrderDoesNotMatter) {
  const auto zero = GameModel::zeros(5, 2, 1.0, Arch::mlp);
  EXPECT_DOUBLE_EQ(predict(zero, instance({1, 0, 1, 1, 0})), 0.5);
  const auto model = GameModel::create(5, 2, 1.0, Arch::mlp, 9);
  std::vector<Instance> insts;
  Rng rng(1);
  for (int k = 0; k < 20; ++k) {
    BitVector bits(5);
    for (auto& b : bits) b = rng.bernoulli(0.5) ? 1 : 0;
    insts.push_back(instance(bits));
  }
  const auto forward_order = predict_all(model, insts);
  std::vector<Instance> reversed(insts.rbegin(), insts.rend());
  const auto backward_order = predict_all(model, reversed);
  for (std::size_t i = 0; i < insts.size(); ++i) {
    EXPECT_EQ(forward_order[i], backward_order[insts.size() - 1 - i]);
  }
}

TEST(Create, ValidatesArguments) {
  EXPECT_THROW(GameModel::create(0, 1, 1.0, Arch::mlp, 0), DataError);
  EXPECT_THROW(GameModel::create(3, 0, 1.0, Arch::mlp, 0), std::invalid_argument);
  EXPECT_THROW(GameModel::create(3, 1, -1.0, Arch::mlp, 0), std::invalid_argument);
  const auto m = GameModel::create(6, 1, 1.0, Arch::linear, 0);
  EXPECT_EQ(m.generator.output_dim(), 12u);
  EXPECT_EQ(m.predictor.layers.size(), 1u);
  EXPECT_EQ(m.complement.layers.size(), 1u);
}

class Training : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    BenchmarkSpec spec;
    spec.seed = 1;
    const auto bench = make_benchmark(spec);
    task_ = new EncodedTask(extract_task(bench.graph, bench.task).encoded);
  }
  static void TearDownTestSuite() { delete task_; }
  static EncodedTask* task_;
};

EncodedTask* Training::task_ = nullptr;

TEST_F(Training, ZeroEpochsReturnsInitializedModel) {
  TrainConfig config;
  config.epochs = 0;
  config.seed = 3;
  const auto result = train_task(task_->train, task_->dev, task_->dim, 2, Arch::mlp, 1.0, config);
  const auto init = GameModel::create(task_->dim, 2, 1.0, Arch::mlp, 3);
  EXPECT_EQ(result.model.predictor, init.predictor);
  EXPECT_EQ(result.model.generator, init.generator);
  EXPECT_TRUE(result.log.empty());
  EXPECT_EQ(result.best_epoch, 0);
  EXPECT_DOUBLE_EQ(result.best_dev_map, dev_map(init, task_->dev, GroupBy::head));
}

TEST_F(Training, IdenticalSeedsGiveIdenticalRuns) {
  TrainConfig config;
  config.epochs = 5;
  const auto a = train_task(task_->train, task_->dev, task_->dim, 2, Arch::mlp, 1.0, config);
  const auto b = train_task(task_->train, task_->dev, task_->dim, 2, Arch::mlp, 1.0, config);
  EXPECT_EQ(a.model.generator, b.model.generator);
  EXPECT_EQ(a.model.predictor, b.model.predictor);
  ASSERT_EQ(a.log.size(), b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) EXPECT_EQ(a.log[i].loss_p, b.log[i].loss_p);
}

TEST_F(Training, BestEpochHasTheHighestDevMap) {
  TrainConfig config;
  config.epochs = 15;
  const auto r = train_task(task_->train, task_->dev, task_->dim, 2, Arch::mlp, 1.0, config);
  double best = -1.0;
  int first = 0;
  for (const auto& e : r.log) {
    if (e.dev_map > best) {
      best = e.dev_map;
      first = e.epoch;
    }
  }
  EXPECT_EQ(r.best_epoch, first);
  EXPECT_EQ(r.best_dev_map, best);
}

TEST_F(Training, SparsityPressureShrinksSelection) {
  TrainConfig config;
  config.epochs = 5;
  const auto r = train_task(task_->train, task_->dev, task_->dim, 1, Arch::mlp, 10.0, config);
  ASSERT_EQ(r.log.size(), 5u);
  for (std::size_t i = 1; i < r.log.size(); ++i) {
    EXPECT_LE(r.log[i].mean_selected, r.log[i - 1].mean_selected + 0.1);
  }
  EXPECT_LT(r.log.back().mean_selected, r.log.front().mean_selected);
}

TEST_F(Training, SingleClassTrainingSetIsRejected) {
  std::vector<Instance> positives;
  for (const auto& inst : task_->train) {
    if (inst.label == Label::positive) positives.push_back(inst);
  }
  EXPECT_THROW(train_task(positives, task_->dev, task_->dim, 2, Arch::mlp, 1.0, {}), DataError);
}
