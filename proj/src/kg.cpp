#include "mcmh/kg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "mcmh/error.hpp"
#include "mcmh/log.hpp"
#include "mcmh/random.hpp"

namespace mcmh {
namespace {

struct TripleHash {
  std::size_t operator()(const Triple& t) const noexcept {
    std::uint64_t h = t.head;
    h = h * 0x9e3779b97f4a7c15ULL + t.relation;
    h = h * 0x9e3779b97f4a7c15ULL + t.tail;
    return static_cast<std::size_t>(h ^ (h >> 29));
  }
};

// Splits on tabs; trailing '\r' is stripped so CRLF files load.
std::vector<std::string_view> split_tabs(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

bool skippable(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line.empty() || line.front() == '#';
}

std::string location(std::string_view source, std::size_t line_no) {
  std::ostringstream os;
  os << source << ':' << line_no;
  return os.str();
}

}  // namespace

std::uint32_t SymbolTable::intern(std::string_view name) {
  if (auto it = ids_.find(std::string(name)); it != ids_.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(names_.size());
  names_.emplace_back(name);
  ids_.emplace(names_.back(), id);
  return id;
}

std::optional<std::uint32_t> SymbolTable::find(std::string_view name) const {
  if (auto it = ids_.find(std::string(name)); it != ids_.end()) return it->second;
  return std::nullopt;
}

std::string inverse_relation_name(std::string_view name) {
  if (name.size() > kInverseSuffix.size() && name.ends_with(kInverseSuffix)) {
    return std::string(name.substr(0, name.size() - kInverseSuffix.size()));
  }
  return std::string(name) + std::string(kInverseSuffix);
}

EntityId KnowledgeGraph::entity_id(std::string_view name) const {
  if (auto id = entities_.find(name)) return *id;
  throw DataError("unknown entity '" + std::string(name) + "'");
}

RelationId KnowledgeGraph::inverse(RelationId r) const {
  if (r >= inverse_.size()) return kNoRelation;
  return inverse_[r];
}

std::span<const Edge> KnowledgeGraph::neighbors(EntityId e) const {
  if (e >= out_.size()) throw std::out_of_range("unknown entity id " + std::to_string(e));
  return out_[e];
}

std::span<const Edge> KnowledgeGraph::in_edges(EntityId e) const {
  if (e >= in_.size()) throw std::out_of_range("unknown entity id " + std::to_string(e));
  return in_[e];
}

bool KnowledgeGraph::has_edge(EntityId head, RelationId relation, EntityId tail) const {
  const auto edges = neighbors(head);
  return std::find(edges.begin(), edges.end(), Edge{relation, tail}) != edges.end();
}

void GraphBuilder::add(std::string_view head, std::string_view relation,
                       std::string_view tail) {
  const auto h = entities_.intern(head);
  const auto r = relations_.intern(relation);
  const auto t = entities_.intern(tail);
  raw_.push_back({h, r, t});
}

KnowledgeGraph GraphBuilder::build(bool add_inverses) && {
  KnowledgeGraph g;
  g.entities_ = std::move(entities_);
  g.relations_ = std::move(relations_);
  g.has_inverses_ = add_inverses;

  std::unordered_set<Triple, TripleHash> seen_input;
  for (const auto& t : raw_) {
    if (seen_input.insert(t).second) {
      g.triples_.push_back(t);
    } else {
      ++g.duplicates_dropped_;
    }
  }

  const std::size_t originals = g.relations_.size();
  g.inverse_.assign(originals, kNoRelation);
  if (add_inverses) {
    for (RelationId r = 0; r < originals; ++r) {
      if (g.inverse_[r] != kNoRelation) continue;
      const RelationId inv = g.relations_.intern(inverse_relation_name(g.relations_.name(r)));
      if (inv >= g.inverse_.size()) g.inverse_.resize(inv + 1, kNoRelation);
      g.inverse_[r] = inv;
      g.inverse_[inv] = r;
    }
  }

  g.out_.assign(g.entities_.size(), {});
  g.in_.assign(g.entities_.size(), {});
  // Input like "r" and "r_inv" together can yield the same augmented edge twice.
  std::unordered_set<Triple, TripleHash> seen_edges;
  auto add_edge = [&](EntityId h, RelationId r, EntityId t) {
    if (!seen_edges.insert({h, r, t}).second) return;
    g.out_[h].push_back({r, t});
    g.in_[t].push_back({r, h});
    ++g.edge_count_;
  };
  for (const auto& t : g.triples_) {
    add_edge(t.head, t.relation, t.tail);
    if (add_inverses) add_edge(t.tail, g.inverse_[t.relation], t.head);
  }

  if (g.duplicates_dropped_ > 0) {
    log::info("dropped " + std::to_string(g.duplicates_dropped_) + " duplicate triples");
  }
  return g;
}

KnowledgeGraph read_triples(std::istream& in, bool add_inverses, std::string_view source) {
  GraphBuilder builder;
  std::string line;
  std::size_t line_no = 0;
  std::size_t parsed = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skippable(line)) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty() || fields[2].empty()) {
      throw DataError(location(source, line_no) +
                      ": expected three non-empty tab-separated fields");
    }
    builder.add(fields[0], fields[1], fields[2]);
    ++parsed;
  }
  if (parsed == 0) throw DataError(std::string(source) + ": no triples");
  return std::move(builder).build(add_inverses);
}

KnowledgeGraph load_triples(const std::filesystem::path& path, bool add_inverses) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open triples file " + path.string());
  return read_triples(in, add_inverses, path.string());
}

void write_triples(std::ostream& out, const KnowledgeGraph& graph) {
  for (const auto& t : graph.triples()) {
    out << graph.entity_name(t.head) << '\t' << graph.relation_name(t.relation) << '\t'
        << graph.entity_name(t.tail) << '\n';
  }
}

std::vector<Edge> neighbors(const KnowledgeGraph& graph, EntityId entity) {
  const auto edges = graph.neighbors(entity);
  return {edges.begin(), edges.end()};
}

std::vector<LabeledPair> read_pairs(std::istream& in, const KnowledgeGraph& graph,
                                    std::string_view source) {
  std::vector<LabeledPair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skippable(line)) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw DataError(location(source, line_no) + ": expected head, tail and label");
    }
    Label label;
    if (fields[2] == "1") {
      label = Label::positive;
    } else if (fields[2] == "0") {
      label = Label::negative;
    } else {
      throw DataError(location(source, line_no) + ": label must be 1 or 0, got '" +
                      std::string(fields[2]) + "'");
    }
    const auto head = graph.find_entity(fields[0]);
    const auto tail = graph.find_entity(fields[1]);
    if (!head || !tail) {
      throw DataError(location(source, line_no) + ": unknown entity '" +
                      std::string(head ? fields[1] : fields[0]) + "'");
    }
    pairs.push_back({*head, *tail, label});
  }
  return pairs;
}

void write_pairs(std::ostream& out, const KnowledgeGraph& graph,
                 std::span<const LabeledPair> pairs) {
  for (const auto& p : pairs) {
    out << graph.entity_name(p.head) << '\t' << graph.entity_name(p.tail) << '\t'
        << (p.label == Label::positive ? '1' : '0') << '\n';
  }
}

std::vector<LabeledPair> downsample_negatives(std::span<const LabeledPair> pairs,
                                              double ratio, std::uint64_t seed) {
  std::vector<std::size_t> negatives;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].label == Label::positive) {
      ++positives;
    } else {
      negatives.push_back(i);
    }
  }
  const auto target = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(positives)));
  std::vector<bool> keep(pairs.size(), true);
  if (negatives.size() > target) {
    Rng rng(seed);
    rng.shuffle(std::span(negatives));
    for (std::size_t k = target; k < negatives.size(); ++k) keep[negatives[k]] = false;
  }
  std::vector<LabeledPair> out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (keep[i]) out.push_back(pairs[i]);
  }
  return out;
}

void split_train_dev(std::span<const LabeledPair> pool, double ratio, std::uint64_t seed,
                     std::vector<LabeledPair>& train, std::vector<LabeledPair>& dev) {
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span(order));
  const auto n_train = static_cast<std::size_t>(
      std::lround(std::clamp(ratio, 0.0, 1.0) * static_cast<double>(pool.size())));
  train.clear();
  dev.clear();
  for (std::size_t k = 0; k < order.size(); ++k) {
    (k < n_train ? train : dev).push_back(pool[order[k]]);
  }
}

TaskDataset load_task(const KnowledgeGraph& graph, const std::filesystem::path& dir,
                      std::string_view relation, const TaskOptions& options) {
  const auto task_dir = dir / std::string(relation);
  if (!std::filesystem::is_directory(task_dir)) {
    throw DataError("unknown relation '" + std::string(relation) + "': no directory " +
                    task_dir.string());
  }
  auto read_file = [&](std::string_view name) {
    const auto path = task_dir / std::string(name);
    std::ifstream in(path);
    if (!in) throw DataError("missing task file " + path.string());
    return read_pairs(in, graph, path.string());
  };

  return make_task(graph, relation, read_file(kTrainPairsFile), read_file(kTestPairsFile),
                   options);
}

TaskDataset make_task(const KnowledgeGraph& graph, std::string_view relation,
                      std::vector<LabeledPair> pool, std::vector<LabeledPair> test,
                      const TaskOptions& options) {
  TaskDataset task;
  task.target_name = std::string(relation);
  task.target = graph.find_relation(relation).value_or(kNoRelation);
  task.test = std::move(test);

  const std::uint64_t task_seed =
      options.seed + (task.target == kNoRelation ? 0 : task.target);
  if (options.negative_ratio > 0.0) {
    pool = downsample_negatives(pool, options.negative_ratio,
                                derive_seed(task_seed, "downsample"));
  }
  split_train_dev(pool, options.split_ratio, derive_seed(task_seed, "split"), task.train,
                  task.dev);
  return task;
}

}  // namespace mcmh
