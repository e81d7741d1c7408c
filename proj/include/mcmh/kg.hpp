#pragma once

// Knowledge graph storage and per-relation task datasets.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mcmh {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

inline constexpr RelationId kNoRelation = std::numeric_limits<RelationId>::max();
inline constexpr std::string_view kInverseSuffix = "_inv";

struct Triple {
  EntityId head = 0;
  RelationId relation = 0;
  EntityId tail = 0;

  friend bool operator==(const Triple&, const Triple&) = default;
};

struct Edge {
  RelationId relation = 0;
  EntityId target = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Bidirectional name <-> dense id map. Ids are handed out in first-seen order.
class SymbolTable {
 public:
  std::uint32_t intern(std::string_view name);
  std::optional<std::uint32_t> find(std::string_view name) const;
  const std::string& name(std::uint32_t id) const { return names_.at(id); }
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> ids_;
};

/// Returns the inverse-relation name for `name`: "r" <-> "r_inv".
std::string inverse_relation_name(std::string_view name);

/// Immutable triple store with forward and reverse adjacency. Build with
/// GraphBuilder or load_triples.
class KnowledgeGraph {
 public:
  std::size_t entity_count() const { return entities_.size(); }
  std::size_t relation_count() const { return relations_.size(); }
  /// Number of directed edges, inverse edges included.
  std::size_t edge_count() const { return edge_count_; }
  /// Number of distinct input triples (before inverse augmentation).
  std::size_t triple_count() const { return triples_.size(); }
  std::size_t duplicates_dropped() const { return duplicates_dropped_; }
  bool has_inverses() const { return has_inverses_; }

  const SymbolTable& entities() const { return entities_; }
  const SymbolTable& relations() const { return relations_; }

  std::optional<EntityId> find_entity(std::string_view name) const {
    return entities_.find(name);
  }
  std::optional<RelationId> find_relation(std::string_view name) const {
    return relations_.find(name);
  }
  /// Throws DataError naming the entity when it is unknown.
  EntityId entity_id(std::string_view name) const;

  const std::string& entity_name(EntityId e) const { return entities_.name(e); }
  const std::string& relation_name(RelationId r) const { return relations_.name(r); }

  /// Inverse relation id, or kNoRelation when the graph was built without
  /// augmentation or `r` has no partner.
  RelationId inverse(RelationId r) const;

  /// Outgoing edges of `e` in insertion order. Throws std::out_of_range for an
  /// unknown entity.
  std::span<const Edge> neighbors(EntityId e) const;
  /// Incoming edges of `e`; Edge::target holds the source entity.
  std::span<const Edge> in_edges(EntityId e) const;

  bool has_edge(EntityId head, RelationId relation, EntityId tail) const;

  /// Distinct input triples in first-seen order.
  std::span<const Triple> triples() const { return triples_; }

 private:
  friend class GraphBuilder;

  SymbolTable entities_;
  SymbolTable relations_;
  std::vector<RelationId> inverse_;
  std::vector<std::vector<Edge>> out_;
  std::vector<std::vector<Edge>> in_;
  std::vector<Triple> triples_;
  std::size_t edge_count_ = 0;
  std::size_t duplicates_dropped_ = 0;
  bool has_inverses_ = false;
};

class GraphBuilder {
 public:
  void add(std::string_view head, std::string_view relation, std::string_view tail);
  /// Registers an entity without edges (keeps ids stable for isolated nodes).
  EntityId add_entity(std::string_view name) { return entities_.intern(name); }
  KnowledgeGraph build(bool add_inverses = true) &&;

 private:
  SymbolTable entities_;
  SymbolTable relations_;
  std::vector<Triple> raw_;
};

/// Parses a tab-separated triples file (head, relation, tail per line; lines
/// starting with '#' are skipped).
KnowledgeGraph load_triples(const std::filesystem::path& path, bool add_inverses = true);
KnowledgeGraph read_triples(std::istream& in, bool add_inverses = true,
                            std::string_view source = "<stream>");
/// Writes the distinct input triples by name (inverse edges are not written).
void write_triples(std::ostream& out, const KnowledgeGraph& graph);

std::vector<Edge> neighbors(const KnowledgeGraph& graph, EntityId entity);

enum class Label : std::uint8_t { negative = 0, positive = 1 };

struct LabeledPair {
  EntityId head = 0;
  EntityId tail = 0;
  Label label = Label::negative;

  friend bool operator==(const LabeledPair&, const LabeledPair&) = default;
};

struct TaskDataset {
  std::string target_name;
  /// kNoRelation when the target never occurs in the graph.
  RelationId target = kNoRelation;
  std::vector<LabeledPair> train;
  std::vector<LabeledPair> dev;
  std::vector<LabeledPair> test;
};

struct TaskOptions {
  double split_ratio = 0.8;
  /// Negatives kept per positive in the training pool; 0 keeps everything.
  double negative_ratio = 0.0;
  std::uint64_t seed = 0;
};

inline constexpr std::string_view kTrainPairsFile = "train.pairs";
inline constexpr std::string_view kTestPairsFile = "test.pairs";

/// Loads `<dir>/<relation>/{train,test}.pairs`, optionally downsamples the
/// training negatives, then splits the training pool into train and dev.
TaskDataset load_task(const KnowledgeGraph& graph, const std::filesystem::path& dir,
                      std::string_view relation, const TaskOptions& options = {});

/// Applies downsampling and the train/dev split to an already-read pool;
/// shared by load_task and the synthetic benchmark so both split alike.
TaskDataset make_task(const KnowledgeGraph& graph, std::string_view relation,
                      std::vector<LabeledPair> pool, std::vector<LabeledPair> test,
                      const TaskOptions& options);

/// Reads head TAB tail TAB label lines with label in {"1", "0"}.
std::vector<LabeledPair> read_pairs(std::istream& in, const KnowledgeGraph& graph,
                                    std::string_view source);
void write_pairs(std::ostream& out, const KnowledgeGraph& graph,
                 std::span<const LabeledPair> pairs);

/// Keeps every positive and at most ceil(ratio * #positives) negatives,
/// sampled without replacement. Input order is preserved.
std::vector<LabeledPair> downsample_negatives(std::span<const LabeledPair> pairs,
                                              double ratio, std::uint64_t seed);

/// Seeded shuffle then prefix split; the first round(ratio * n) go to train.
void split_train_dev(std::span<const LabeledPair> pool, double ratio, std::uint64_t seed,
                     std::vector<LabeledPair>& train, std::vector<LabeledPair>& dev);

}  // namespace mcmh
