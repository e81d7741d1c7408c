#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mcmh/checkpoint.hpp"
#include "mcmh/error.hpp"
#include "mcmh/pipeline.hpp"

using namespace mcmh;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("mcmh-test-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RunConfig benchmark_config(const fs::path& root, const std::string& run) {
  RunConfig config;
  config.graph = root / "data" / "graph.tsv";
  config.task_dir = root / "data" / "tasks";
  config.relations = {"target_relation"};
  config.out_dir = root / run;
  config.d = 2;
  config.epochs = 8;
  config.modes = {RunMode::game_mlp, RunMode::d_all};
  return config;
}

void full_run(const RunConfig& config) {
  std::ostringstream console;
  cmd_extract(config, console);
  cmd_train(config, console);
  cmd_eval(config, console);
  cmd_export_rules(config, console);
}

class Pipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = new fs::path(scratch("pipeline"));
    BenchmarkSpec spec;
    spec.seed = 12;
    std::ostringstream console;
    cmd_benchmark(spec, *root_ / "data", console);
  }
  static void TearDownTestSuite() {
    fs::remove_all(*root_);
    delete root_;
  }
  static fs::path* root_;
};

fs::path* Pipeline::root_ = nullptr;

}  // namespace

TEST_F(Pipeline, EndToEndIsByteIdentical) {
  const auto a = benchmark_config(*root_, "a");
  const auto b = benchmark_config(*root_, "b");
  full_run(a);
  full_run(b);
  for (const char* file : {"extract_stats.tsv", "eval_report.tsv", "target_relation/vocab.tsv",
                           "target_relation/train.instances", "target_relation/game_mlp-d2.ckpt",
                           "target_relation/game_mlp-d2.log", "target_relation/d_all.ckpt",
                           "target_relation/game_mlp-d2.rules.txt"}) {
    EXPECT_EQ(slurp(a.out_dir / file), slurp(b.out_dir / file)) << file;
    EXPECT_FALSE(slurp(a.out_dir / file).empty()) << file;
  }
}

TEST_F(Pipeline, ExtractStatisticsMatchDirectCounting) {
  const auto config = benchmark_config(*root_, "stats");
  std::ostringstream console;
  cmd_extract(config, console);
  const auto loaded = load_extracted(config.out_dir, "target_relation");
  std::size_t bits = 0, n = 0;
  for (const auto* split : {&loaded.encoded.train, &loaded.encoded.dev, &loaded.encoded.test}) {
    for (const auto& inst : *split) {
      for (const auto b : inst.availability) bits += b;
      ++n;
    }
  }
  std::istringstream report(slurp(config.out_dir / kExtractReport));
  std::string line;
  std::getline(report, line);
  EXPECT_EQ(line, "# mcmh-report extract v1");
  std::getline(report, line);
  std::getline(report, line);
  std::istringstream row(line);
  std::string relation;
  std::size_t chains = 0;
  double mean = 0.0;
  row >> relation >> chains >> mean;
  EXPECT_EQ(relation, "target_relation");
  EXPECT_EQ(chains, loaded.encoded.dim);
  EXPECT_NEAR(mean, static_cast<double>(bits) / static_cast<double>(n), 1e-6);
}

TEST_F(Pipeline, ZeroEpochCheckpointIsTheInitializedModel) {
  auto config = benchmark_config(*root_, "zero");
  config.epochs = 0;
  config.modes = {RunMode::game_mlp};
  std::ostringstream console;
  cmd_extract(config, console);
  cmd_train(config, console);
  const auto cp = load_checkpoint(config.out_dir / "target_relation" / "game_mlp-d2.ckpt");
  const auto init = GameModel::create(cp.model.dim, 2, 1.0, Arch::mlp, config.seed);
  EXPECT_EQ(cp.model.generator, init.generator);
  EXPECT_EQ(cp.model.predictor, init.predictor);
  EXPECT_EQ(cp.meta.epoch, 0);
}

TEST_F(Pipeline, CheckpointRoundTripPredictsIdentically) {
  const auto config = benchmark_config(*root_, "roundtrip");
  std::ostringstream console;
  cmd_extract(config, console);
  const auto loaded = load_extracted(config.out_dir, "target_relation");
  TrainConfig tc = train_config(config);
  tc.epochs = 3;
  Checkpoint cp;
  cp.model = train_mode(loaded.encoded, RunMode::game_mlp, 2, 1.0, tc).model;
  cp.meta.relation = "target_relation";
  std::stringstream buffer;
  write_checkpoint(buffer, cp);
  const auto back = read_checkpoint(buffer);
  EXPECT_EQ(back.model.generator, cp.model.generator);
  EXPECT_EQ(back.model.predictor, cp.model.predictor);
  EXPECT_EQ(back.model.complement, cp.model.complement);
  std::vector<Instance> probes = loaded.encoded.train;
  probes.resize(std::min<std::size_t>(100, probes.size()));
  for (const auto& inst : probes) EXPECT_EQ(predict(back.model, inst), predict(cp.model, inst));
}

TEST_F(Pipeline, TamperedDimensionIsRejected) {
  auto config = benchmark_config(*root_, "tamper");
  config.epochs = 1;
  config.modes = {RunMode::game_mlp};
  std::ostringstream console;
  cmd_extract(config, console);
  cmd_train(config, console);
  const auto path = config.out_dir / "target_relation" / "game_mlp-d2.ckpt";
  auto cp = load_checkpoint(path);
  const std::size_t dim = cp.model.dim + 1;
  cp.model = GameModel::create(dim, 2, 1.0, Arch::mlp, 0);
  save_checkpoint(path, cp);
  EXPECT_THROW(cmd_eval(config, console), DataError);

  // Editing only the header makes the document inconsistent.
  std::string text = slurp(path);
  const auto pos = text.find("dim=");
  text.replace(pos, text.find('\n', pos) - pos, "dim=3");
  std::istringstream in(text);
  EXPECT_THROW(read_checkpoint(in), DataError);
}

TEST_F(Pipeline, EvalReportHasOneColumnPerModeAndAnAverageRow) {
  const auto config = benchmark_config(*root_, "report");
  full_run(config);
  std::istringstream report(slurp(config.out_dir / kEvalReport));
  std::string header, columns, row, average;
  std::getline(report, header);
  std::getline(report, columns);
  std::getline(report, row);
  std::getline(report, average);
  EXPECT_EQ(header.rfind("# mcmh-report eval v1", 0), 0u);
  EXPECT_EQ(columns, "relation\tgame_mlp-d2\td_all");
  EXPECT_EQ(row.substr(row.find('\t')), average.substr(average.find('\t')));
  EXPECT_EQ(average.rfind("average\t", 0), 0u);
}

TEST_F(Pipeline, MissingTaskDirectoryIsADataError) {
  auto config = benchmark_config(*root_, "missing");
  config.relations = {"nowhere"};
  std::ostringstream console;
  try {
    cmd_extract(config, console);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find((config.task_dir / "nowhere").string()), std::string::npos);
  }
}

TEST(RuleReport, MarksEmptyInstancesAndClampsTopN) {
  auto model = GameModel::create(3, 2, 1.0, Arch::mlp, 1);
  VocabularyFile vocab;
  vocab.entries = {{0, 3, "a->b"}, {1, 2, "c"}, {2, 1, "d->e->f"}};
  SymbolTable names;
  names.intern("h");
  names.intern("t");
  const std::vector<Instance> insts{{0, 1, Label::positive, {1, 1, 1}},
                                    {0, 1, Label::negative, {0, 0, 0}}};
  std::ostringstream out;
  write_rule_report(out, model, vocab, names, insts, 50, "test");
  const auto text = out.str();
  EXPECT_NE(text.find("top_n=3"), std::string::npos);
  EXPECT_NE(text.find("(no chains)"), std::string::npos);
  std::size_t selected = 0;
  for (auto pos = text.find("[selected]"); pos != std::string::npos; pos = text.find("[selected]", pos + 1)) {
    ++selected;
  }
  EXPECT_EQ(selected, 2u);
  vocab.entries.pop_back();
  EXPECT_THROW(write_rule_report(out, model, vocab, names, insts, 5, "x"), DataError);
}
