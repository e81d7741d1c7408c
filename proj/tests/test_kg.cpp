#include <gtest/gtest.h>

#include <sstream>

#include "mcmh/error.hpp"
#include "mcmh/kg.hpp"

using namespace mcmh;

namespace {

KnowledgeGraph parse(const std::string& text, bool inverses = true) {
  std::istringstream in(text);
  return read_triples(in, inverses, "test.tsv");
}

}  // namespace

TEST(KnowledgeGraph, AddsInverseEdges) {
  const auto g = parse("a\tr\tb\nb\ts\tc\n");
  EXPECT_EQ(g.entity_count(), 3u);
  EXPECT_EQ(g.relation_count(), 4u);
  EXPECT_EQ(g.edge_count(), 4u);
  const auto r = *g.find_relation("r");
  const auto r_inv = *g.find_relation("r_inv");
  EXPECT_EQ(g.inverse(r), r_inv);
  EXPECT_EQ(g.inverse(r_inv), r);
  EXPECT_TRUE(g.has_edge(g.entity_id("b"), r_inv, g.entity_id("a")));
}

TEST(KnowledgeGraph, WithoutInversesKeepsOnlyInputEdges) {
  const auto g = parse("a\tr\tb\n", false);
  EXPECT_EQ(g.edge_count(), 1u);
  EXPECT_EQ(g.inverse(*g.find_relation("r")), kNoRelation);
  EXPECT_TRUE(g.neighbors(g.entity_id("b")).empty());
}

TEST(KnowledgeGraph, NeighborsOfLeafIsEmpty) {
  const auto g = parse("a\tr\tb\n", false);
  EXPECT_TRUE(neighbors(g, g.entity_id("b")).empty());
  const auto out = neighbors(g, g.entity_id("a"));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].target, g.entity_id("b"));
}

TEST(KnowledgeGraph, DuplicateTriplesAreDroppedAndCounted) {
  const auto g = parse("a\tr\tb\na\tr\tb\na\tr\tb\n");
  EXPECT_EQ(g.triple_count(), 1u);
  EXPECT_EQ(g.duplicates_dropped(), 2u);
  EXPECT_EQ(g.edge_count(), 2u);
}

TEST(KnowledgeGraph, ExplicitInverseInputDoesNotDuplicateEdges) {
  const auto g = parse("a\tr\tb\nb\tr_inv\ta\n");
  EXPECT_EQ(g.triple_count(), 2u);
  EXPECT_EQ(g.edge_count(), 2u);
  EXPECT_EQ(g.relation_count(), 2u);
}

TEST(KnowledgeGraph, IdsAreDenseInFirstSeenOrder) {
  const auto g = parse("x\tq\ty\ny\tp\tz\n");
  EXPECT_EQ(g.entity_id("x"), 0u);
  EXPECT_EQ(g.entity_id("y"), 1u);
  EXPECT_EQ(g.entity_id("z"), 2u);
  EXPECT_EQ(*g.find_relation("q"), 0u);
  EXPECT_EQ(*g.find_relation("p"), 1u);
  EXPECT_EQ(*g.find_relation("q_inv"), 2u);
}

TEST(KnowledgeGraph, MalformedLineNamesTheLocation) {
  try {
    parse("a\tr\tb\nbroken line\n");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("test.tsv:2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse("a\t\tb\n"), DataError);
  EXPECT_THROW(parse("# only a comment\n"), DataError);
}

TEST(KnowledgeGraph, SkipsCommentsAndCrlf) {
  const auto g = parse("# header\r\na\tr\tb\r\n\r\n");
  EXPECT_EQ(g.triple_count(), 1u);
  EXPECT_TRUE(g.find_entity("b").has_value());
}

TEST(KnowledgeGraph, UnknownEntityThrows) {
  const auto g = parse("a\tr\tb\n");
  EXPECT_THROW(g.entity_id("nope"), DataError);
  EXPECT_THROW(g.neighbors(99), std::out_of_range);
}

TEST(KnowledgeGraph, WriteReadRoundTrip) {
  const auto g = parse("a\tr\tb\nb\ts\tc\n");
  std::ostringstream out;
  write_triples(out, g);
  EXPECT_EQ(out.str(), "a\tr\tb\nb\ts\tc\n");
}

TEST(Pairs, ReadValidatesLabelsAndEntities) {
  const auto g = parse("a\tr\tb\n");
  std::istringstream ok("a\tb\t1\nb\ta\t0\n");
  const auto pairs = read_pairs(ok, g, "p");
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[0].label, Label::positive);
  EXPECT_EQ(pairs[1].label, Label::negative);

  std::istringstream bad_label("a\tb\tyes\n");
  EXPECT_THROW(read_pairs(bad_label, g, "p"), DataError);
  std::istringstream unknown("a\tq\t1\n");
  try {
    read_pairs(unknown, g, "p.pairs");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("'q'"), std::string::npos);
  }
}

TEST(Pairs, DownsampleKeepsPositivesAndOrder) {
  std::vector<LabeledPair> pool;
  for (EntityId i = 0; i < 40; ++i) {
    pool.push_back({i, i, i % 10 == 0 ? Label::positive : Label::negative});
  }
  const auto kept = downsample_negatives(pool, 2.0, 7);
  std::size_t pos = 0, neg = 0;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    (kept[i].label == Label::positive ? pos : neg)++;
    if (i > 0) EXPECT_LT(kept[i - 1].head, kept[i].head);
  }
  EXPECT_EQ(pos, 4u);
  EXPECT_EQ(neg, 8u);
  EXPECT_EQ(downsample_negatives(pool, 2.0, 7), kept);
}

TEST(Pairs, SplitIsAPartitionWithRoundedTrainShare) {
  std::vector<LabeledPair> pool;
  for (EntityId i = 0; i < 25; ++i) pool.push_back({i, 0, Label::negative});
  std::vector<LabeledPair> train, dev;
  split_train_dev(pool, 0.8, 3, train, dev);
  EXPECT_EQ(train.size(), 20u);
  EXPECT_EQ(dev.size(), 5u);
  std::vector<bool> seen(25, false);
  for (const auto& p : train) seen[p.head] = true;
  for (const auto& p : dev) {
    EXPECT_FALSE(seen[p.head]);
    seen[p.head] = true;
  }
  EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }));
}

TEST(Task, MissingRelationDirectoryNamesThePath) {
  const auto g = parse("a\tr\tb\n");
  try {
    load_task(g, "/nonexistent/tasks", "athletePlaysForTeam");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/tasks/athletePlaysForTeam"),
              std::string::npos);
  }
}

TEST(Task, TargetAbsentFromGraphIsNoRelation) {
  const auto g = parse("a\tr\tb\n");
  const auto task = make_task(g, "missing", {{0, 1, Label::positive}}, {}, {});
  EXPECT_EQ(task.target, kNoRelation);
  EXPECT_EQ(task.target_name, "missing");
}
