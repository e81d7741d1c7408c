#include "mcmh/chains.hpp"

#include <algorithm>
#include <exception>
#include <limits>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "mcmh/error.hpp"

namespace mcmh {
namespace {

class PathSearch {
 public:
  PathSearch(const KnowledgeGraph& graph, EntityId head, EntityId tail,
             const PathOptions& options)
      : graph_(graph), head_(head), tail_(tail), options_(options) {
    // Relations on edges x -> tail, keyed by x, for the last hop.
    for (const auto& e : graph.in_edges(tail)) into_tail_[e.target].push_back(e.relation);
    exclude_inverse_ =
        options.exclude == kNoRelation ? kNoRelation : graph.inverse(options.exclude);
  }

  std::vector<RelationChain> run() {
    if (options_.policy == PathPolicy::simple) on_path_.insert(head_);
    visit(head_, kNoEntity, kNoRelation);
    std::vector<RelationChain> out(found_.begin(), found_.end());
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  static constexpr EntityId kNoEntity = std::numeric_limits<EntityId>::max();

  bool is_backtrack(EntityId next, RelationId relation, EntityId prev,
                    RelationId prev_relation) const {
    return prev != kNoEntity && next == prev && prev_relation != kNoRelation &&
           relation == graph_.inverse(prev_relation);
  }

  bool allowed(EntityId next, RelationId relation, EntityId prev,
               RelationId prev_relation) const {
    if (options_.policy == PathPolicy::simple) return !on_path_.contains(next);
    return !is_backtrack(next, relation, prev, prev_relation);
  }

  void visit(EntityId at, EntityId prev, RelationId prev_relation) {
    const bool first_hop = path_.empty();
    if (auto it = into_tail_.find(at); it != into_tail_.end()) {
      for (const RelationId r : it->second) {
        if (first_hop && options_.exclude != kNoRelation &&
            (r == options_.exclude || r == exclude_inverse_)) {
          continue;
        }
        if (!allowed(tail_, r, prev, prev_relation)) continue;
        path_.push_back(r);
        found_.insert(RelationChain{path_});
        path_.pop_back();
      }
    }
    if (static_cast<int>(path_.size()) + 1 >= options_.max_hops) return;
    for (const auto& e : graph_.neighbors(at)) {
      if (!allowed(e.target, e.relation, prev, prev_relation)) continue;
      // A simple path cannot pass through the tail before ending there.
      if (options_.policy == PathPolicy::simple && e.target == tail_) continue;
      path_.push_back(e.relation);
      if (options_.policy == PathPolicy::simple) on_path_.insert(e.target);
      visit(e.target, at, e.relation);
      if (options_.policy == PathPolicy::simple) on_path_.erase(e.target);
      path_.pop_back();
    }
  }

  const KnowledgeGraph& graph_;
  EntityId head_;
  EntityId tail_;
  const PathOptions& options_;
  RelationId exclude_inverse_ = kNoRelation;
  std::unordered_map<EntityId, std::vector<RelationId>> into_tail_;
  std::unordered_set<EntityId> on_path_;
  std::vector<RelationId> path_;
  std::unordered_set<RelationChain, RelationChainHash> found_;
};

std::vector<std::string_view> split(std::string_view text, std::string_view sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + sep.size();
  }
}

std::string_view trim_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

std::size_t parse_size(std::string_view text, const std::string& where) {
  std::size_t value = 0;
  std::size_t used = 0;
  try {
    value = std::stoull(std::string(text), &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw DataError(where + ": expected a non-negative integer, got '" + std::string(text) + "'");
  }
  return value;
}

std::string where(std::string_view source, std::size_t line_no) {
  return std::string(source) + ':' + std::to_string(line_no);
}

const char* policy_name(PathPolicy policy) {
  return policy == PathPolicy::simple ? "simple" : "no_backtrack";
}

}  // namespace

std::size_t RelationChainHash::operator()(const RelationChain& chain) const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ chain.relations.size();
  for (const RelationId r : chain.relations) {
    h ^= r;
    h *= 0x100000001b3ULL;
    h ^= h >> 32;
  }
  return static_cast<std::size_t>(h);
}

std::string chain_text(const KnowledgeGraph& graph, const RelationChain& chain) {
  std::string out;
  for (std::size_t i = 0; i < chain.relations.size(); ++i) {
    if (i > 0) out += kChainSeparator;
    out += graph.relation_name(chain.relations[i]);
  }
  return out;
}

RelationChain parse_chain(const KnowledgeGraph& graph, std::string_view text) {
  RelationChain chain;
  for (const auto name : split(text, kChainSeparator)) {
    const auto id = graph.find_relation(name);
    if (!id) throw DataError("unknown relation '" + std::string(name) + "' in chain " + std::string(text));
    chain.relations.push_back(*id);
  }
  return chain;
}

std::vector<RelationChain> enumerate_paths(const KnowledgeGraph& graph, EntityId head,
                                           EntityId tail, const PathOptions& options) {
  if (head >= graph.entity_count() || tail >= graph.entity_count()) {
    throw std::out_of_range("enumerate_paths: unknown entity id");
  }
  if (options.max_hops < 1) throw std::invalid_argument("enumerate_paths: max_hops must be >= 1");
  return PathSearch(graph, head, tail, options).run();
}

ChainVocabulary::ChainVocabulary(RelationId target, std::vector<RelationChain> chains,
                                 std::vector<std::size_t> supports, VocabularyOptions options)
    : target_(target),
      chains_(std::move(chains)),
      supports_(std::move(supports)),
      options_(options) {
  if (chains_.size() != supports_.size()) {
    throw std::invalid_argument("ChainVocabulary: chains and supports differ in length");
  }
  for (std::size_t i = 0; i < chains_.size(); ++i) {
    if (!index_.emplace(chains_[i], i).second) {
      throw std::invalid_argument("ChainVocabulary: duplicate chain at index " + std::to_string(i));
    }
  }
}

std::optional<std::size_t> ChainVocabulary::find(const RelationChain& chain) const {
  if (auto it = index_.find(chain); it != index_.end()) return it->second;
  return std::nullopt;
}

std::vector<std::size_t> rank_by_support(std::span<const std::size_t> supports,
                                         std::size_t max_size) {
  std::vector<std::size_t> order(supports.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return supports[a] > supports[b]; });
  if (order.size() > max_size) order.resize(max_size);
  return order;
}

ChainVocabulary build_vocabulary(const KnowledgeGraph& graph,
                                 std::span<const EntityPair> positives, RelationId target,
                                 const VocabularyOptions& options) {
  const PathOptions path_options{options.max_hops, target, options.policy};
  std::vector<std::vector<RelationChain>> per_pair(positives.size());
  const auto n = static_cast<std::int64_t>(positives.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 8)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      per_pair[i] = enumerate_paths(graph, positives[i].head, positives[i].tail, path_options);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<RelationChain> seen;
  std::vector<std::size_t> supports;
  std::unordered_map<RelationChain, std::size_t, RelationChainHash> position;
  for (auto& chains : per_pair) {
    for (auto& chain : chains) {
      auto [it, inserted] = position.emplace(chain, seen.size());
      if (inserted) {
        seen.push_back(std::move(chain));
        supports.push_back(0);
      }
      ++supports[it->second];
    }
  }
  if (seen.empty()) throw DataError("no candidate chains");

  const auto order = rank_by_support(supports, options.max_size);
  std::vector<RelationChain> chains;
  std::vector<std::size_t> kept_supports;
  chains.reserve(order.size());
  for (const auto pos : order) {
    chains.push_back(std::move(seen[pos]));
    kept_supports.push_back(supports[pos]);
  }
  return ChainVocabulary(target, std::move(chains), std::move(kept_supports), options);
}

std::size_t popcount(const BitVector& bits) {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

std::size_t SelectionMask::candidate_count() const {
  std::size_t n = 0;
  for (std::size_t j = 0; j < selected.size(); ++j) n += (selected[j] | complement[j]) ? 1 : 0;
  return n;
}

SelectionMask make_mask(const BitVector& availability, BitVector selected) {
  if (selected.size() != availability.size()) {
    throw std::invalid_argument("make_mask: dimension mismatch");
  }
  SelectionMask mask;
  mask.complement.assign(availability.size(), 0);
  for (std::size_t j = 0; j < availability.size(); ++j) {
    selected[j] = (selected[j] && availability[j]) ? 1 : 0;
    mask.complement[j] = (availability[j] && !selected[j]) ? 1 : 0;
  }
  mask.selected = std::move(selected);
  return mask;
}

Instance encode_instance(const ChainVocabulary& vocab, const KnowledgeGraph& graph,
                         EntityId head, EntityId tail, Label label) {
  Instance instance{head, tail, label, BitVector(vocab.size(), 0)};
  for (const auto& chain : enumerate_paths(graph, head, tail, vocab.path_options())) {
    if (auto j = vocab.find(chain)) instance.availability[*j] = 1;
  }
  return instance;
}

std::vector<Instance> encode_instances(const ChainVocabulary& vocab,
                                       const KnowledgeGraph& graph,
                                       std::span<const LabeledPair> pairs) {
  std::vector<Instance> out(pairs.size());
  const auto n = static_cast<std::int64_t>(pairs.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 8)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      out[i] = encode_instance(vocab, graph, pairs[i].head, pairs[i].tail, pairs[i].label);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

ChainStatistics chain_statistics(std::size_t vocab_size, std::span<const Instance> instances) {
  if (instances.empty()) throw DataError("chain statistics need at least one instance");
  std::size_t total = 0;
  for (const auto& inst : instances) total += inst.candidate_count();
  return {vocab_size, static_cast<double>(total) / static_cast<double>(instances.size())};
}

ChainStatistics chain_statistics(const ChainVocabulary& vocab,
                                 std::span<const Instance> instances) {
  return chain_statistics(vocab.size(), instances);
}

void write_vocabulary(std::ostream& out, const KnowledgeGraph& graph,
                      const ChainVocabulary& vocab, std::string_view target_name) {
  out << "# mcmh-vocabulary v1\ttarget=" << target_name
      << "\tmax_hops=" << vocab.options().max_hops
      << "\tpolicy=" << policy_name(vocab.options().policy) << '\n';
  for (std::size_t j = 0; j < vocab.size(); ++j) {
    out << j << '\t' << vocab.support(j) << '\t' << chain_text(graph, vocab.chain(j)) << '\n';
  }
}

VocabularyFile read_vocabulary_file(std::istream& in, std::string_view source) {
  VocabularyFile file;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim_cr(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line.starts_with("# mcmh-vocabulary")) {
        for (const auto field : split(line, "\t")) {
          if (field.starts_with("target=")) file.target_name = std::string(field.substr(7));
          if (field.starts_with("max_hops=")) {
            file.options.max_hops =
                static_cast<int>(parse_size(field.substr(9), where(source, line_no)));
          }
          if (field == "policy=simple") file.options.policy = PathPolicy::simple;
        }
      }
      continue;
    }
    const auto fields = split(line, "\t");
    if (fields.size() != 3 || fields[2].empty()) {
      throw DataError(where(source, line_no) + ": expected index, support and chain");
    }
    VocabularyEntry entry{parse_size(fields[0], where(source, line_no)),
                          parse_size(fields[1], where(source, line_no)), std::string(fields[2])};
    if (entry.index != file.entries.size()) {
      throw DataError(where(source, line_no) + ": expected index " +
                      std::to_string(file.entries.size()));
    }
    file.entries.push_back(std::move(entry));
  }
  if (file.entries.empty()) throw DataError(std::string(source) + ": empty vocabulary");
  return file;
}

ChainVocabulary resolve_vocabulary(const KnowledgeGraph& graph, const VocabularyFile& file) {
  std::vector<RelationChain> chains;
  std::vector<std::size_t> supports;
  for (const auto& entry : file.entries) {
    chains.push_back(parse_chain(graph, entry.text));
    supports.push_back(entry.support);
  }
  VocabularyOptions options = file.options;
  options.max_size = std::max(options.max_size, chains.size());
  return ChainVocabulary(graph.find_relation(file.target_name).value_or(kNoRelation),
                         std::move(chains), std::move(supports), options);
}

std::string bits_to_string(const BitVector& bits) {
  std::string s(bits.size(), '0');
  for (std::size_t j = 0; j < bits.size(); ++j) {
    if (bits[j]) s[j] = '1';
  }
  return s;
}

void write_instances(std::ostream& out, const SymbolTable& entities,
                     std::span<const Instance> instances) {
  for (const auto& inst : instances) {
    out << entities.name(inst.head) << '\t' << entities.name(inst.tail) << '\t'
        << (inst.label == Label::positive ? '1' : '0') << '\t'
        << bits_to_string(inst.availability) << '\n';
  }
}

std::vector<Instance> read_instances(std::istream& in, SymbolTable& entities, std::size_t dim,
                                     std::string_view source) {
  std::vector<Instance> out;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim_cr(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split(line, "\t");
    if (fields.size() != 4) {
      throw DataError(where(source, line_no) + ": expected head, tail, label and bits");
    }
    if (fields[2] != "1" && fields[2] != "0") {
      throw DataError(where(source, line_no) + ": label must be 1 or 0");
    }
    if (fields[3].size() != dim) {
      throw DataError(where(source, line_no) + ": availability has " +
                      std::to_string(fields[3].size()) + " bits, vocabulary has " +
                      std::to_string(dim));
    }
    Instance inst;
    inst.head = entities.intern(fields[0]);
    inst.tail = entities.intern(fields[1]);
    inst.label = fields[2] == "1" ? Label::positive : Label::negative;
    inst.availability.resize(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      const char c = fields[3][j];
      if (c != '0' && c != '1') throw DataError(where(source, line_no) + ": bits must be 0/1");
      inst.availability[j] = c == '1' ? 1 : 0;
    }
    out.push_back(std::move(inst));
  }
  return out;
}

}  // namespace mcmh
