#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>

#include "mcmh/error.hpp"
#include "mcmh/log.hpp"
#include "mcmh/pipeline.hpp"

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mcmh: multi-chain multi-hop rule learning for knowledge-graph completion"};
  app.set_config("--config", "", "key=value file supplying defaults; flags override");
  app.fallthrough();
  app.require_subcommand(1);

  mcmh::RunConfig config;
  std::string graph, task_dir, out_dir = config.out_dir.string(), checkpoint;
  std::string arch = "mlp", policy = "no_backtrack", group_by = "head";
  std::vector<std::string> modes = {"game"};
  bool verbose = false;

  app.add_option("--graph", graph, "triples file (head TAB relation TAB tail)");
  app.add_option("--task-dir", task_dir, "directory with <relation>/{train,test}.pairs");
  app.add_option("--relation", config.relations, "target relation(s)")->delimiter(',');
  app.add_option("--max-hops", config.max_hops, "longest chain length")->capture_default_str()
      ->check(CLI::Range(1, 6));
  app.add_option("--d", config.d, "chains selected per instance")->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--predictor-arch", arch, "predictor architecture for mode 'game'")
      ->capture_default_str()->check(CLI::IsMember({"mlp", "linear"}));
  app.add_option("--mode", modes, "game, game_mlp, game_linear, d_all, single_chain_gen")
      ->delimiter(',')->capture_default_str()
      ->check(CLI::IsMember({"game", "game_mlp", "game_linear", "d_all", "single_chain_gen"}));
  app.add_option("--epochs", config.epochs)->capture_default_str()->check(CLI::NonNegativeNumber);
  app.add_option("--lr", config.lr)->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--batch-size", config.batch_size)->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--lambda-s", config.lambda_s, "sparsity weight")->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  app.add_option("--seed", config.seed)->capture_default_str();
  app.add_option("--out", out_dir, "artifact directory")->capture_default_str();
  app.add_option("--max-vocab", config.max_vocab, "chains kept per relation")
      ->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--path-policy", policy)->capture_default_str()
      ->check(CLI::IsMember({"no_backtrack", "simple"}));
  app.add_option("--split-ratio", config.split_ratio, "train share of the training pool")
      ->capture_default_str()->check(CLI::Range(0.0, 1.0));
  app.add_option("--negative-ratio", config.negative_ratio,
                 "training negatives kept per positive; 0 keeps all")
      ->capture_default_str()->check(CLI::NonNegativeNumber);
  app.add_option("--group-by", group_by, "MAP grouping")->capture_default_str()
      ->check(CLI::IsMember({"head", "global"}));
  app.add_option("--top-n", config.top_n, "chains listed per instance by export-rules")
      ->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--checkpoint", checkpoint, "checkpoint for eval/export-rules");
  app.add_flag("-v,--verbose", verbose, "progress on stderr");

  auto* extract = app.add_subcommand("extract", "build chain vocabularies and instance caches");
  auto* train = app.add_subcommand("train", "train models and write checkpoints");
  auto* eval = app.add_subcommand("eval", "test MAP per relation and mode");
  auto* rules = app.add_subcommand("export-rules", "explain predictions with selected chains");
  auto* bench = app.add_subcommand("benchmark", "generate a synthetic planted-rule dataset");

  mcmh::BenchmarkSpec spec;
  std::string rule = "conjunction";
  bench->add_option("--rule", rule)->capture_default_str()
      ->check(CLI::IsMember({"single", "conjunction", "noisy_weak"}));
  bench->add_option("--noise", spec.noise, "label flip rate")->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  bench->add_option("--heads", spec.heads)->capture_default_str();
  bench->add_option("--tails", spec.tails)->capture_default_str();
  bench->add_option("--train-pairs", spec.train_pairs)->capture_default_str();
  bench->add_option("--test-pairs", spec.test_pairs)->capture_default_str();
  bench->add_option("--distractors", spec.distractor_chains)->capture_default_str();
  bench->add_option("--weak-chains", spec.weak_chains)->capture_default_str();
  bench->add_option("--target", spec.target)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  mcmh::log::set_level(verbose ? mcmh::log::Level::info : mcmh::log::Level::quiet);
  config.graph = graph;
  config.task_dir = task_dir;
  config.out_dir = out_dir;
  config.predictor_arch = mcmh::parse_arch(arch.c_str());
  config.policy = policy == "simple" ? mcmh::PathPolicy::simple : mcmh::PathPolicy::no_backtrack;
  config.group_by = mcmh::parse_group_by(group_by);
  if (!checkpoint.empty()) config.checkpoint = checkpoint;
  config.modes.clear();
  for (const auto& m : modes) {
    if (m == "game") {
      config.modes.push_back(config.predictor_arch == mcmh::Arch::mlp ? mcmh::RunMode::game_mlp
                                                                      : mcmh::RunMode::game_linear);
    } else {
      config.modes.push_back(mcmh::parse_mode(m));
    }
  }

  auto need = [&](bool ok, const char* flag) {
    if (!ok) {
      std::cerr << "mcmh: " << flag << " is required for this command\n";
      std::exit(kUsage);
    }
  };

  try {
    if (*extract) {
      need(!graph.empty(), "--graph");
      need(!task_dir.empty(), "--task-dir");
      need(!config.relations.empty(), "--relation");
      mcmh::cmd_extract(config, std::cout);
    } else if (*train) {
      need(!config.relations.empty(), "--relation");
      mcmh::cmd_train(config, std::cout);
    } else if (*eval) {
      need(!config.relations.empty(), "--relation");
      mcmh::cmd_eval(config, std::cout);
    } else if (*rules) {
      need(!config.relations.empty(), "--relation");
      mcmh::cmd_export_rules(config, std::cout);
    } else if (*bench) {
      spec.rule = mcmh::parse_rule(rule);
      spec.seed = config.seed;
      spec.max_hops = config.max_hops;
      mcmh::cmd_benchmark(spec, config.out_dir, std::cout);
    }
  } catch (const mcmh::NumericError& e) {
    std::cerr << "mcmh: numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::invalid_argument& e) {
    std::cerr << "mcmh: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "mcmh: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}
