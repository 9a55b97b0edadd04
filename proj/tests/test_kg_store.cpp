#include <gtest/gtest.h>

#include <random>
#include <set>
#include <tuple>

#include "attkgcn/kg_store.hpp"
#include "oracles.hpp"

using namespace attkgcn;

namespace {

std::string write_kg(const std::string& name, const std::string& text) {
  auto dir = oracle::scratch_dir("kg_" + name);
  auto path = (dir / "kg.tsv").string();
  oracle::write_file(path, text);
  return path;
}

}  // namespace

TEST(LoadTriples, CountsFromTwoLines) {
  auto g = load_triples(write_kg("two", "0\t0\t1\n1\t1\t2\n"));
  EXPECT_EQ(g.entity_count(), 3u);
  EXPECT_EQ(g.relation_count(), 2u);
  EXPECT_EQ(g.relation_table_size(), 3u);
  EXPECT_EQ(g.self_relation(), 2u);
  EXPECT_EQ(g.triples().size(), 2u);
}

TEST(LoadTriples, EmptyFile) {
  auto g = load_triples(write_kg("empty", ""));
  EXPECT_EQ(g.entity_count(), 0u);
  EXPECT_TRUE(g.triples().empty());
}

TEST(LoadTriples, CrlfAndBlankLinesAreTolerated) {
  auto g = load_triples(write_kg("crlf", "0\t0\t1\r\n\r\n1\t0\t2\r\n"));
  EXPECT_EQ(g.triples().size(), 2u);
}

TEST(LoadTriples, WrongFieldCountNamesLine) {
  auto path = write_kg("badcount", "0\t0\t1\n1\t1\n");
  try {
    load_triples(path);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(LoadTriples, NonIntegerNamesLine) {
  auto path = write_kg("nonint", "0\t0\t1\n0\t0\t1\nx\t0\t1\n");
  try {
    load_triples(path);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(load_triples(write_kg("neg", "-1\t0\t1\n")), ParseError);
}

TEST(LoadTriples, MissingFileIsIoError) {
  EXPECT_THROW(load_triples("/nonexistent/kg.tsv"), IoError);
}

TEST(Neighbors, SingleTripleIsSymmetric) {
  KnowledgeGraph g({{0, 0, 1}});
  ASSERT_EQ(g.neighbors(0).size(), 1u);
  EXPECT_EQ(g.neighbors(0)[0], (Edge{0, 1}));
  ASSERT_EQ(g.neighbors(1).size(), 1u);
  EXPECT_EQ(g.neighbors(1)[0], (Edge{0, 0}));
}

TEST(Neighbors, IsolatedEntityIsEmpty) {
  KnowledgeGraph g({{0, 0, 1}}, 4);
  EXPECT_TRUE(neighbors(g, 3).empty());
}

TEST(Neighbors, DuplicateLineAppearsOnce) {
  auto g = load_triples(write_kg("dup", "0\t0\t1\n0\t0\t1\n"));
  auto adj = oracle::adjacency({{0, 0, 1}, {0, 0, 1}});
  ASSERT_EQ(g.neighbors(0).size(), adj[0].size());
  EXPECT_EQ(g.neighbors(0)[0], (Edge{0, 1}));
}

TEST(Neighbors, OutOfRangeIsDomainError) {
  KnowledgeGraph g({{0, 0, 1}});
  EXPECT_THROW(g.neighbors(2), DomainError);
}

TEST(Neighbors, MatchesBruteForceAdjacencyOnRandomGraphs) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const std::uint32_t n_ent = 50 + trial * 40;
    std::vector<Triple> triples;
    std::vector<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>> raw;
    std::uniform_int_distribution<std::uint32_t> pe(0, n_ent - 1), pr(0, 4);
    for (int i = 0; i < 2000; ++i) {
      Triple t{pe(rng), pr(rng), pe(rng)};
      triples.push_back(t);
      raw.emplace_back(t.head, t.relation, t.tail);
    }
    KnowledgeGraph g(triples);
    auto adj = oracle::adjacency(raw);
    std::size_t degree_sum = 0;
    for (EntityId e = 0; e < g.entity_count(); ++e) {
      auto nb = g.neighbors(e);
      degree_sum += nb.size();
      std::set<std::pair<std::uint32_t, std::uint32_t>> got;
      for (const Edge& x : nb) got.insert({x.relation, x.entity});
      EXPECT_EQ(got.size(), nb.size()) << "duplicate edge at " << e;
      EXPECT_EQ(got, adj[e]);
      EXPECT_TRUE(std::is_sorted(nb.begin(), nb.end()));
      // symmetry by exhaustive scan
      for (const Edge& x : nb) {
        auto back = g.neighbors(x.entity);
        EXPECT_TRUE(std::binary_search(back.begin(), back.end(), Edge{x.relation, e}));
      }
    }
    // distinct undirected facts; a self-loop (a, r, a) is one adjacency entry
    std::set<std::tuple<EntityId, RelationId, EntityId>> facts;
    for (const Triple& t : g.triples()) facts.emplace(std::min(t.head, t.tail), t.relation, std::max(t.head, t.tail));
    std::size_t expect = 0;
    for (const auto& [a, r, b] : facts) expect += a == b ? 1 : 2;
    EXPECT_EQ(degree_sum, expect);
  }
}

TEST(SampleNeighbors, WithoutReplacementWhenDegreeAtLeastK) {
  std::vector<Triple> triples;
  for (EntityId i = 1; i <= 10; ++i) triples.push_back({0, 0, i});
  KnowledgeGraph g(triples);
  Rng rng(3);
  auto s = sample_neighbors(g, 0, 4, rng);
  ASSERT_EQ(s.size(), 4u);
  std::set<Edge> distinct(s.begin(), s.end());
  EXPECT_EQ(distinct.size(), 4u);
  for (const Edge& e : s) EXPECT_TRUE(std::binary_search(g.neighbors(0).begin(), g.neighbors(0).end(), e));
}

TEST(SampleNeighbors, SingleEdgeRepeated) {
  KnowledgeGraph g({{0, 2, 1}});
  Rng rng(3);
  auto s = sample_neighbors(g, 0, 4, rng);
  ASSERT_EQ(s.size(), 4u);
  for (const Edge& e : s) EXPECT_EQ(e, (Edge{2, 1}));
}

TEST(SampleNeighbors, IsolatedUsesSelfRelation) {
  KnowledgeGraph g({{0, 0, 1}}, 3);
  Rng rng(3);
  auto s = sample_neighbors(g, 2, 2, rng);
  ASSERT_EQ(s.size(), 2u);
  for (const Edge& e : s) EXPECT_EQ(e, (Edge{g.self_relation(), 2}));
}

TEST(SampleNeighbors, ZeroKIsDomainError) {
  KnowledgeGraph g({{0, 0, 1}});
  Rng rng(3);
  EXPECT_THROW(sample_neighbors(g, 0, 0, rng), DomainError);
}

TEST(SampleNeighbors, SeededCallsAreIdenticalAndInNeighborhood) {
  std::mt19937_64 gen(5);
  std::vector<Triple> triples;
  std::uniform_int_distribution<std::uint32_t> pe(0, 29), pr(0, 3);
  for (int i = 0; i < 60; ++i) triples.push_back({pe(gen), pr(gen), pe(gen)});
  KnowledgeGraph g(triples, 35);
  for (EntityId e = 0; e < g.entity_count(); ++e) {
    for (std::size_t k : {1u, 3u, 8u}) {
      Rng a(100 + e), b(100 + e);
      auto sa = sample_neighbors(g, e, k, a);
      auto sb = sample_neighbors(g, e, k, b);
      EXPECT_EQ(sa, sb);
      auto nb = g.neighbors(e);
      for (const Edge& x : sa) {
        const bool in_adj = std::binary_search(nb.begin(), nb.end(), x);
        const bool self = x == Edge{g.self_relation(), e};
        EXPECT_TRUE(in_adj || self);
      }
    }
  }
}

TEST(SampleNeighbors, WithReplacementIsRoughlyUniform) {
  KnowledgeGraph g({{0, 0, 1}, {0, 0, 2}, {0, 0, 3}});
  Rng rng(9);
  std::map<EntityId, int> counts;
  const int draws = 30000;
  for (int i = 0; i < draws / 6; ++i) {
    for (const Edge& e : sample_neighbors(g, 0, 6, rng)) ++counts[e.entity];
  }
  // each of 3 edges has p = 1/3; 3 sigma band
  const double sd = std::sqrt(draws * (1.0 / 3) * (2.0 / 3));
  for (EntityId e : {1u, 2u, 3u}) EXPECT_NEAR(counts[e], draws / 3.0, 3 * sd);
}

TEST(SaveTriples, RoundTrips) {
  auto dir = oracle::scratch_dir("kg_save");
  std::vector<Triple> triples{{0, 1, 2}, {3, 0, 4}};
  save_triples((dir / "kg.tsv").string(), triples);
  auto g = load_triples((dir / "kg.tsv").string());
  EXPECT_EQ(g.triples(), (std::vector<Triple>{{0, 1, 2}, {3, 0, 4}}));
}
