#pragma once

// The command implementations behind the CLI. Artifacts live under
// `out_dir/<relation>/`:
//   vocab.tsv, {train,dev,test}.instances   written by extract
//   <tag>.ckpt, <tag>.log                  written by train
//   <tag>.rules.txt                        written by export-rules
// and the reports extract_stats.tsv and eval_report.tsv sit in out_dir.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mcmh/benchmark.hpp"
#include "mcmh/chains.hpp"
#include "mcmh/eval.hpp"
#include "mcmh/game.hpp"
#include "mcmh/metrics.hpp"
#include "mcmh/neural.hpp"

namespace mcmh {

struct RunConfig {
  std::filesystem::path graph;
  std::filesystem::path task_dir;
  std::vector<std::string> relations;
  int max_hops = 3;
  std::size_t d = 5;
  /// Predictor architecture for the plain "game" mode.
  Arch predictor_arch = Arch::mlp;
  std::vector<RunMode> modes = {RunMode::game_mlp};
  int epochs = 100;
  double lr = 0.001;
  std::size_t batch_size = 20;
  double lambda_s = 1.0;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "mcmh-out";
  std::size_t max_vocab = 10000;
  PathPolicy policy = PathPolicy::no_backtrack;
  double split_ratio = 0.8;
  double negative_ratio = 0.0;
  GroupBy group_by = GroupBy::head;
  std::size_t top_n = 5;
  /// Explicit checkpoint for eval/export-rules; otherwise derived from mode.
  std::optional<std::filesystem::path> checkpoint;
};

TrainConfig train_config(const RunConfig& config);

inline constexpr const char* kVocabularyFile = "vocab.tsv";
inline constexpr const char* kExtractReport = "extract_stats.tsv";
inline constexpr const char* kEvalReport = "eval_report.tsv";

/// Vocabulary, instance caches and the statistics report.
void cmd_extract(const RunConfig& config, std::ostream& console);
/// One checkpoint and training log per relation and mode.
void cmd_train(const RunConfig& config, std::ostream& console);
/// Test MAP per relation and mode; writes eval_report.tsv and a console table.
void cmd_eval(const RunConfig& config, std::ostream& console);
/// Top chains by generator probability with predictor confidence.
void cmd_export_rules(const RunConfig& config, std::ostream& console);
void cmd_benchmark(const BenchmarkSpec& spec, const std::filesystem::path& out_dir,
                   std::ostream& console);

/// Extraction artifacts of one relation read back from disk.
struct LoadedTask {
  VocabularyFile vocabulary;
  SymbolTable entities;
  EncodedTask encoded;
};

LoadedTask load_extracted(const std::filesystem::path& out_dir, const std::string& relation);

/// Human rule report for `instances` (Fig. 2 style explanations).
void write_rule_report(std::ostream& out, const GameModel& model, const VocabularyFile& vocab,
                       const SymbolTable& entities, std::span<const Instance> instances,
                       std::size_t top_n, const std::string& title);

}  // namespace mcmh
