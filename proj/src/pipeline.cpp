#include "mcmh/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

#include "mcmh/checkpoint.hpp"
#include "mcmh/error.hpp"
#include "mcmh/format.hpp"
#include "mcmh/log.hpp"

namespace mcmh {
namespace fs = std::filesystem;
namespace {

constexpr const char* kSplits[] = {"train", "dev", "test"};

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(std::string("missing ") + what + " " + path.string());
  return in;
}

void require_relations(const RunConfig& config) {
  if (config.relations.empty()) throw std::invalid_argument("no relation given");
}

fs::path checkpoint_path(const RunConfig& config, const std::string& relation,
                         const std::string& tag) {
  return config.out_dir / relation / (tag + ".ckpt");
}

std::vector<std::string> mode_tags(const RunConfig& config) {
  std::vector<std::string> tags;
  for (const auto mode : config.modes) {
    auto tag = mode_tag(mode, config.d);
    if (std::find(tags.begin(), tags.end(), tag) == tags.end()) tags.push_back(std::move(tag));
  }
  return tags;
}

// Runs `body(i)` for every relation index in parallel and rethrows the first
// failure in relation order.
template <typename Body>
void for_each_relation(std::size_t count, Body body) {
  std::vector<std::exception_ptr> failures(count);
  const auto n = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      failures[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
}

void print_table(std::ostream& console, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c > 0) console << "  ";
      console << std::left << std::setw(static_cast<int>(width[c])) << cells[c];
    }
    console << '\n';
  };
  line(header);
  std::size_t total = 0;
  for (const auto w : width) total += w;
  console << std::string(total + 2 * (width.size() - 1), '-') << '\n';
  for (const auto& row : rows) line(row);
}

}  // namespace

TrainConfig train_config(const RunConfig& config) {
  TrainConfig tc;
  tc.epochs = config.epochs;
  tc.batch_size = config.batch_size;
  tc.lr = config.lr;
  tc.seed = config.seed;
  tc.group_by = config.group_by;
  return tc;
}

void cmd_extract(const RunConfig& config, std::ostream& console) {
  require_relations(config);
  const KnowledgeGraph graph = load_triples(config.graph);
  log::info("graph: " + std::to_string(graph.entity_count()) + " entities, " +
            std::to_string(graph.triple_count()) + " triples");
  const TaskOptions task_options{config.split_ratio, config.negative_ratio, config.seed};
  const VocabularyOptions vocab_options{config.max_hops, config.max_vocab, config.policy};

  struct Stats {
    std::size_t vocab = 0;
    double mean = 0.0;
    std::size_t sizes[3] = {0, 0, 0};
  };
  std::vector<Stats> stats(config.relations.size());
  // Extraction kernels are parallel themselves; relations run one after another.
  for (std::size_t i = 0; i < config.relations.size(); ++i) {
    const auto& relation = config.relations[i];
    const TaskDataset task = load_task(graph, config.task_dir, relation, task_options);
    const ExtractedTask extracted = extract_task(graph, task, vocab_options);
    const fs::path dir = config.out_dir / relation;
    fs::create_directories(dir);
    {
      auto out = open_out(dir / kVocabularyFile);
      write_vocabulary(out, graph, extracted.vocab, relation);
    }
    const std::vector<Instance>* splits[] = {&extracted.encoded.train, &extracted.encoded.dev,
                                             &extracted.encoded.test};
    std::vector<Instance> all;
    for (std::size_t s = 0; s < 3; ++s) {
      auto out = open_out(dir / (std::string(kSplits[s]) + ".instances"));
      write_instances(out, graph.entities(), *splits[s]);
      stats[i].sizes[s] = splits[s]->size();
      all.insert(all.end(), splits[s]->begin(), splits[s]->end());
    }
    const auto cs = chain_statistics(extracted.vocab, all);
    stats[i].vocab = cs.total_chains;
    stats[i].mean = cs.mean_chains_per_instance;
  }

  auto report = open_out(config.out_dir / kExtractReport);
  report << "# mcmh-report extract v1\n";
  report << "relation\ttotal_chains\tmean_chains_per_instance\ttrain\tdev\ttest\n";
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const auto& s = stats[i];
    report << config.relations[i] << '\t' << s.vocab << '\t' << fixed(s.mean) << '\t'
           << s.sizes[0] << '\t' << s.sizes[1] << '\t' << s.sizes[2] << '\n';
    rows.push_back({config.relations[i], std::to_string(s.vocab), fixed(s.mean, 2),
                    std::to_string(s.sizes[0]), std::to_string(s.sizes[1]),
                    std::to_string(s.sizes[2])});
  }
  print_table(console, {"relation", "#chains", "chains/instance", "train", "dev", "test"}, rows);
}

LoadedTask load_extracted(const fs::path& out_dir, const std::string& relation) {
  const fs::path dir = out_dir / relation;
  if (!fs::is_directory(dir)) {
    throw DataError("no extraction artifacts for '" + relation + "' in " + dir.string() +
                    " (run extract first)");
  }
  LoadedTask loaded;
  {
    const auto path = dir / kVocabularyFile;
    auto in = open_in(path, "vocabulary");
    loaded.vocabulary = read_vocabulary_file(in, path.string());
  }
  loaded.encoded.dim = loaded.vocabulary.entries.size();
  std::vector<Instance>* splits[] = {&loaded.encoded.train, &loaded.encoded.dev,
                                     &loaded.encoded.test};
  for (std::size_t s = 0; s < 3; ++s) {
    const auto path = dir / (std::string(kSplits[s]) + ".instances");
    auto in = open_in(path, "instance cache");
    *splits[s] = read_instances(in, loaded.entities, loaded.encoded.dim, path.string());
  }
  return loaded;
}

void cmd_train(const RunConfig& config, std::ostream& console) {
  require_relations(config);
  const TrainConfig tc = train_config(config);
  std::vector<LoadedTask> tasks(config.relations.size());
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    tasks[i] = load_extracted(config.out_dir, config.relations[i]);
  }

  struct Outcome {
    std::string tag;
    int best_epoch = 0;
    double best_dev_map = 0.0;
  };
  std::vector<std::vector<Outcome>> outcomes(tasks.size());
  for_each_relation(tasks.size(), [&](std::size_t i) {
    const auto& relation = config.relations[i];
    for (const auto mode : config.modes) {
      const auto tag = mode_tag(mode, config.d);
      log::info("training " + relation + " " + tag);
      TrainResult result = train_mode(tasks[i].encoded, mode, config.d, config.lambda_s, tc);
      Checkpoint cp;
      cp.meta = {relation, mode_name(mode), config.seed, result.best_dev_map,
                 result.best_epoch, kVocabularyFile};
      cp.model = std::move(result.model);
      save_checkpoint(checkpoint_path(config, relation, tag), cp);
      auto log_out = open_out(config.out_dir / relation / (tag + ".log"));
      write_training_log(log_out, result.log);
      outcomes[i].push_back({tag, result.best_epoch, result.best_dev_map});
    }
  });

  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    for (const auto& o : outcomes[i]) {
      rows.push_back({config.relations[i], o.tag, std::to_string(o.best_epoch),
                      fixed(o.best_dev_map, 4)});
    }
  }
  print_table(console, {"relation", "model", "best epoch", "dev MAP"}, rows);
}

void cmd_eval(const RunConfig& config, std::ostream& console) {
  require_relations(config);
  const auto tags = mode_tags(config);
  if (config.checkpoint && (config.relations.size() != 1 || tags.size() != 1)) {
    throw std::invalid_argument("--checkpoint needs exactly one relation and one mode");
  }
  std::vector<std::vector<double>> maps(config.relations.size(),
                                        std::vector<double>(tags.size(), 0.0));
  for (std::size_t i = 0; i < config.relations.size(); ++i) {
    const auto& relation = config.relations[i];
    const LoadedTask task = load_extracted(config.out_dir, relation);
    for (std::size_t m = 0; m < tags.size(); ++m) {
      const auto path = config.checkpoint.value_or(checkpoint_path(config, relation, tags[m]));
      const Checkpoint cp = load_checkpoint(path);
      if (cp.model.dim != task.encoded.dim) {
        throw DataError("checkpoint " + path.string() + " has D=" + std::to_string(cp.model.dim) +
                        " but the vocabulary of '" + relation + "' has D=" +
                        std::to_string(task.encoded.dim));
      }
      maps[i][m] = evaluate_task(cp.model, task.encoded.test, config.group_by).map;
    }
  }

  std::vector<double> average(tags.size(), 0.0);
  for (std::size_t m = 0; m < tags.size(); ++m) {
    for (const auto& row : maps) average[m] += row[m];
    average[m] /= static_cast<double>(maps.size());
  }

  auto report = open_out(config.out_dir / kEvalReport);
  report << "# mcmh-report eval v1\tgroup_by=" << group_by_name(config.group_by) << '\n';
  report << "relation";
  for (const auto& tag : tags) report << '\t' << tag;
  report << '\n';
  std::vector<std::vector<std::string>> rows;
  auto emit = [&](const std::string& name, const std::vector<double>& values) {
    report << name;
    std::vector<std::string> row{name};
    for (const double v : values) {
      report << '\t' << fixed(v);
      row.push_back(fixed(v, 3));
    }
    report << '\n';
    rows.push_back(std::move(row));
  };
  for (std::size_t i = 0; i < maps.size(); ++i) emit(config.relations[i], maps[i]);
  emit("average", average);

  std::vector<std::string> header{"relation"};
  header.insert(header.end(), tags.begin(), tags.end());
  console << "MAP (" << group_by_name(config.group_by) << " grouping)\n";
  print_table(console, header, rows);
}

void write_rule_report(std::ostream& out, const GameModel& model, const VocabularyFile& vocab,
                       const SymbolTable& entities, std::span<const Instance> instances,
                       std::size_t top_n, const std::string& title) {
  if (vocab.entries.size() != model.dim) {
    throw DataError("checkpoint has D=" + std::to_string(model.dim) + " but the vocabulary has D=" +
                    std::to_string(vocab.entries.size()));
  }
  const std::size_t shown = std::min(top_n, model.dim);
  std::vector<std::size_t> frequency(model.dim, 0);
  out << "# mcmh-rules v1\t" << title << "\td=" << model.d << "\ttop_n=" << shown << '\n';
  for (const auto& inst : instances) {
    out << "\ninstance " << entities.name(inst.head) << " -> " << entities.name(inst.tail)
        << "  label=" << inst.label_index() << "  confidence=" << fixed(predict(model, inst))
        << '\n';
    if (inst.candidate_count() == 0) {
      out << "  (no chains)\n";
      continue;
    }
    const auto probs = generator_probs(model, inst);
    const auto top = select_top_d(probs, inst.availability, model.d);
    std::vector<std::size_t> order;
    for (std::size_t j = 0; j < model.dim; ++j) {
      if (inst.availability[j]) order.push_back(j);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
    if (order.size() > shown) order.resize(shown);
    for (const auto j : order) {
      const bool selected = top.selected[j] != 0;
      if (selected) ++frequency[j];
      out << "  " << (selected ? "[selected] " : "           ") << fixed(probs[j], 4) << "  "
          << vocab.entries[j].text << '\n';
    }
  }

  std::vector<std::size_t> ranked(model.dim);
  std::iota(ranked.begin(), ranked.end(), std::size_t{0});
  std::stable_sort(ranked.begin(), ranked.end(),
                   [&](std::size_t a, std::size_t b) { return frequency[a] > frequency[b]; });
  out << "\n# chains most often selected over " << instances.size() << " instances\n";
  for (std::size_t k = 0; k < std::min(shown, ranked.size()); ++k) {
    if (frequency[ranked[k]] == 0) break;
    out << frequency[ranked[k]] << '\t' << vocab.entries[ranked[k]].text << '\n';
  }
}

void cmd_export_rules(const RunConfig& config, std::ostream& console) {
  require_relations(config);
  const auto tags = mode_tags(config);
  if (config.checkpoint && (config.relations.size() != 1 || tags.size() != 1)) {
    throw std::invalid_argument("--checkpoint needs exactly one relation and one mode");
  }
  for (const auto& relation : config.relations) {
    const LoadedTask task = load_extracted(config.out_dir, relation);
    for (const auto& tag : tags) {
      const auto path = config.checkpoint.value_or(checkpoint_path(config, relation, tag));
      const Checkpoint cp = load_checkpoint(path);
      const auto report_path = config.out_dir / relation / (tag + ".rules.txt");
      auto out = open_out(report_path);
      write_rule_report(out, cp.model, task.vocabulary, task.entities, task.encoded.test,
                        config.top_n, "relation=" + relation + "\tmodel=" + tag);
      console << "wrote " << report_path.string() << '\n';
    }
  }
}

void cmd_benchmark(const BenchmarkSpec& spec, const fs::path& out_dir, std::ostream& console) {
  const Benchmark bench = make_benchmark(spec);
  write_benchmark(bench, out_dir);
  std::size_t positives = 0;
  for (const auto& p : bench.train_pool) positives += p.label == Label::positive ? 1 : 0;
  console << "benchmark (" << rule_name(spec.rule) << ") written to " << out_dir.string() << '\n'
          << "  entities " << bench.graph.entity_count() << ", triples "
          << bench.graph.triple_count() << '\n'
          << "  train pool " << bench.train_pool.size() << " (" << positives << " positive), test "
          << bench.task.test.size() << '\n'
          << "  relation " << spec.target << ", task dir " << (out_dir / "tasks").string() << '\n';
  for (const auto& c : bench.planted) console << "  label chain " << c << '\n';
}

}  // namespace mcmh
