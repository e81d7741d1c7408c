#pragma once

// Relation-chain enumeration, per-relation chain vocabularies and the binary
// instance encoding consumed by the game.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mcmh/kg.hpp"

namespace mcmh {

/// Ordered relation labels r1 -> ... -> rm. Equality and hashing use the
/// full id sequence; ordering is by length, then lexicographic ids.
struct RelationChain {
  std::vector<RelationId> relations;

  std::size_t length() const { return relations.size(); }

  friend bool operator==(const RelationChain&, const RelationChain&) = default;
  friend bool operator<(const RelationChain& a, const RelationChain& b) {
    if (a.relations.size() != b.relations.size()) {
      return a.relations.size() < b.relations.size();
    }
    return a.relations < b.relations;
  }
};

struct RelationChainHash {
  std::size_t operator()(const RelationChain& chain) const noexcept;
};

inline constexpr std::string_view kChainSeparator = "->";

/// "r1->r2->r3" using the graph's relation names.
std::string chain_text(const KnowledgeGraph& graph, const RelationChain& chain);
/// Inverse of chain_text; throws DataError on an unknown relation name.
RelationChain parse_chain(const KnowledgeGraph& graph, std::string_view text);

enum class PathPolicy {
  /// Entities may repeat, except stepping straight back along r then inv(r).
  no_backtrack,
  /// No entity appears twice on a path.
  simple,
};

struct PathOptions {
  int max_hops = 3;
  /// Length-1 chains equal to this relation or its inverse are dropped.
  RelationId exclude = kNoRelation;
  PathPolicy policy = PathPolicy::no_backtrack;
};

/// Every distinct relation sequence of length <= max_hops realized by an
/// entity path from head to tail, in canonical (sorted) order.
std::vector<RelationChain> enumerate_paths(const KnowledgeGraph& graph, EntityId head,
                                           EntityId tail, const PathOptions& options = {});

struct VocabularyOptions {
  int max_hops = 3;
  std::size_t max_size = 10000;
  PathPolicy policy = PathPolicy::no_backtrack;
};

/// Candidate chain set for one target relation, indexed 0..D-1 in order of
/// decreasing positive support (ties: earlier first occurrence).
class ChainVocabulary {
 public:
  ChainVocabulary() = default;
  ChainVocabulary(RelationId target, std::vector<RelationChain> chains,
                  std::vector<std::size_t> supports, VocabularyOptions options);

  RelationId target() const { return target_; }
  std::size_t size() const { return chains_.size(); }
  const RelationChain& chain(std::size_t index) const { return chains_.at(index); }
  std::size_t support(std::size_t index) const { return supports_.at(index); }
  std::span<const RelationChain> chains() const { return chains_; }
  std::span<const std::size_t> supports() const { return supports_; }
  const VocabularyOptions& options() const { return options_; }
  std::optional<std::size_t> find(const RelationChain& chain) const;

  PathOptions path_options() const {
    return {options_.max_hops, target_, options_.policy};
  }

 private:
  RelationId target_ = kNoRelation;
  std::vector<RelationChain> chains_;
  std::vector<std::size_t> supports_;
  VocabularyOptions options_;
  std::unordered_map<RelationChain, std::size_t, RelationChainHash> index_;
};

struct EntityPair {
  EntityId head = 0;
  EntityId tail = 0;
};

/// Union of enumerate_paths over the positive pairs, filtered to the
/// max_size best-supported chains. Throws DataError when no chain is found.
/// Enumeration runs in parallel; the merge follows pair order.
ChainVocabulary build_vocabulary(const KnowledgeGraph& graph,
                                 std::span<const EntityPair> positives, RelationId target,
                                 const VocabularyOptions& options = {});

/// Keeps at most max_size chains by decreasing support, ties broken by first
/// occurrence. Returns the kept positions into `supports`, in index order.
std::vector<std::size_t> rank_by_support(std::span<const std::size_t> supports,
                                         std::size_t max_size);

using BitVector = std::vector<std::uint8_t>;

std::size_t popcount(const BitVector& bits);

struct Instance {
  EntityId head = 0;
  EntityId tail = 0;
  Label label = Label::negative;
  /// Bit j is set iff vocabulary chain j connects head to tail.
  BitVector availability;

  std::size_t dim() const { return availability.size(); }
  std::size_t candidate_count() const { return popcount(availability); }
  int label_index() const { return label == Label::positive ? 1 : 0; }
};

/// A chain subset S and its complement within the instance's candidates.
struct SelectionMask {
  BitVector selected;
  BitVector complement;

  std::size_t selected_count() const { return popcount(selected); }
  std::size_t candidate_count() const;
};

/// Builds the mask whose complement is `availability` minus `selected`.
/// Selected bits outside the availability are dropped.
SelectionMask make_mask(const BitVector& availability, BitVector selected);

Instance encode_instance(const ChainVocabulary& vocab, const KnowledgeGraph& graph,
                         EntityId head, EntityId tail, Label label);

/// Parallel over pairs; output order matches input order.
std::vector<Instance> encode_instances(const ChainVocabulary& vocab,
                                       const KnowledgeGraph& graph,
                                       std::span<const LabeledPair> pairs);

struct ChainStatistics {
  std::size_t total_chains = 0;
  double mean_chains_per_instance = 0.0;
};

ChainStatistics chain_statistics(const ChainVocabulary& vocab,
                                 std::span<const Instance> instances);
ChainStatistics chain_statistics(std::size_t vocab_size, std::span<const Instance> instances);

// File formats ---------------------------------------------------------------

/// One vocabulary line as stored on disk.
struct VocabularyEntry {
  std::size_t index = 0;
  std::size_t support = 0;
  std::string text;
};

struct VocabularyFile {
  std::string target_name;
  VocabularyOptions options;
  std::vector<VocabularyEntry> entries;
};

void write_vocabulary(std::ostream& out, const KnowledgeGraph& graph,
                      const ChainVocabulary& vocab, std::string_view target_name);
VocabularyFile read_vocabulary_file(std::istream& in, std::string_view source = "<stream>");
/// Resolves a vocabulary file against a graph; indices are reproduced exactly.
ChainVocabulary resolve_vocabulary(const KnowledgeGraph& graph, const VocabularyFile& file);

/// Instance cache line: head TAB tail TAB label TAB availability bits.
void write_instances(std::ostream& out, const SymbolTable& entities,
                     std::span<const Instance> instances);
/// Entity names are interned into `entities`; every row must have `dim` bits.
std::vector<Instance> read_instances(std::istream& in, SymbolTable& entities, std::size_t dim,
                                     std::string_view source = "<stream>");

std::string bits_to_string(const BitVector& bits);

}  // namespace mcmh
