#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "attkgcn/metrics.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace attkgcn;

namespace {

std::vector<ScoredLabel> zip(const std::vector<double>& s, const std::vector<int>& l) {
  std::vector<ScoredLabel> out;
  for (std::size_t i = 0; i < s.size(); ++i) out.push_back({s[i], l[i]});
  return out;
}

// Seven items mapped onto the ring entities in a shuffled order, one user
// per row of `positives`.
InteractionSet ring_items(const std::vector<std::vector<ItemId>>& positives) {
  InteractionSet s;
  for (RawId i = 0; i < 7; ++i) {
    s.item_raw.push_back(100 + i);
    s.item_to_entity.push_back(static_cast<EntityId>((3 * i + 2) % 7));
  }
  for (std::size_t u = 0; u < positives.size(); ++u) {
    s.user_raw.push_back(u);
    s.user_positives.push_back(positives[u]);
  }
  return s;
}

}  // namespace

TEST(Auc, PerfectAndInverted) {
  EXPECT_EQ(auc(zip({0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1})), 1.0);
  EXPECT_EQ(auc(zip({0.9, 0.8, 0.2, 0.1}, {0, 0, 1, 1})), 0.0);
}

TEST(Auc, AllTiedIsHalf) { EXPECT_EQ(auc(zip({0.4, 0.4, 0.4, 0.4, 0.4}, {1, 0, 1, 0, 0})), 0.5); }

TEST(Auc, HandCountedWithTies) {
  // pos 0.5 vs neg {0.5, 0.2}: 0.5 + 1; pos 0.1 vs both: 0
  EXPECT_DOUBLE_EQ(auc(zip({0.5, 0.1, 0.5, 0.2}, {1, 1, 0, 0})), 1.5 / 4.0);
}

TEST(Auc, SingleClassIsUndefined) {
  EXPECT_THROW(auc(zip({0.1, 0.2}, {1, 1})), UndefinedMetricError);
  EXPECT_THROW(auc(zip({0.1, 0.2}, {0, 0})), UndefinedMetricError);
  EXPECT_THROW(auc(std::vector<ScoredLabel>{}), UndefinedMetricError);
}

TEST(Auc, MatchesPairwiseOracleOnRandomVectors) {
  std::mt19937_64 rng(77);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 99;
    std::vector<double> s(n);
    std::vector<int> l(n);
    for (std::size_t i = 0; i < n; ++i) {
      // coarse grid so ties are common
      s[i] = static_cast<double>(rng() % 20) / 20.0;
      l[i] = static_cast<int>(rng() % 2);
    }
    l[0] = 1;
    l[1] = 0;
    worst = std::max(worst, std::abs(auc(zip(s, l)) - oracle::pairwise_auc(s, l)));
  }
  EXPECT_LT(worst, 1e-12);
}

TEST(Auc, InvariantUnderStrictlyIncreasingMap) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> s(30), cubed(30);
    std::vector<int> l(30);
    for (std::size_t i = 0; i < 30; ++i) {
      s[i] = nd(rng);
      cubed[i] = s[i] * s[i] * s[i];
      l[i] = static_cast<int>(i % 3 == 0);
    }
    EXPECT_EQ(auc(zip(s, l)), auc(zip(cubed, l)));
  }
}

TEST(Classification, PrecisionOneRecallHalf) {
  // 2 positives, one predicted; no false positives
  auto m = classification_metrics(zip({0.9, 0.1, 0.2, 0.3}, {1, 1, 0, 0}));
  EXPECT_EQ(m.precision, 1.0);
  EXPECT_EQ(m.recall, 0.5);
  EXPECT_NEAR(m.f1, 2.0 / 3.0, 1e-15);
  EXPECT_EQ(m.accuracy, 0.75);
}

TEST(Classification, AllCorrect) {
  auto m = classification_metrics(zip({0.9, 0.6, 0.2, 0.3}, {1, 1, 0, 0}));
  EXPECT_EQ(m.precision, 1.0);
  EXPECT_EQ(m.recall, 1.0);
  EXPECT_EQ(m.f1, 1.0);
  EXPECT_EQ(m.accuracy, 1.0);
}

TEST(Classification, ThresholdIsInclusive) {
  auto m = classification_metrics(zip({0.5, 0.49}, {1, 0}));
  EXPECT_EQ(m.accuracy, 1.0);
}

TEST(Classification, NoPositivePredictionsIsFlagged) {
  auto m = classification_metrics(zip({0.1, 0.2, 0.3}, {1, 0, 0}));
  EXPECT_TRUE(m.no_positive_predictions);
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_EQ(m.f1, 0.0);
  EXPECT_THROW(classification_metrics(std::vector<ScoredLabel>{}), DomainError);
}

TEST(Classification, AccuracyMatchesRecount) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> s(1 + rng() % 40);
    std::vector<int> l(s.size());
    std::size_t correct = 0, tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = u(rng);
      l[i] = static_cast<int>(rng() % 2);
      const bool pred = s[i] >= 0.5;
      correct += pred == (l[i] == 1);
      tp += pred && l[i] == 1;
      fp += pred && l[i] == 0;
      fn += !pred && l[i] == 1;
    }
    auto m = classification_metrics(zip(s, l));
    EXPECT_DOUBLE_EQ(m.accuracy, static_cast<double>(correct) / static_cast<double>(s.size()));
    if (tp > 0) EXPECT_DOUBLE_EQ(m.f1, 2.0 * tp / (2.0 * tp + fp + fn));
  }
}

TEST(TopK, MatchesBruteForceScoring) {
  const auto triples = support::ring7();
  KnowledgeGraph g(triples);
  const auto adj = support::oracle_adjacency(triples);
  HyperParams hp;
  hp.dim = 4;
  hp.k = 4;  // full neighborhoods on the ring
  hp.depth = 2;
  InteractionSet data = ring_items({{}, {1, 4}});
  for (int seed = 0; seed < 5; ++seed) {
    auto p = support::random_params(2, g, hp, 900 + seed, 1.5);
    auto m = support::to_oracle(p, hp.attention);
    ModelContext ctx{g, p, hp, data};
    std::vector<ItemId> excl{1, 4};
    auto got = topk_recommend(1, 3, ctx, excl);

    std::vector<std::pair<double, ItemId>> all;
    for (ItemId i = 0; i < 7; ++i) {
      if (i == 1 || i == 4) continue;
      const double raw = oracle::inner(m.user[1], oracle::recursive_repr(m, 1, data.item_to_entity[i], 2, 2, adj));
      all.push_back({-1.0 / (1.0 + std::exp(-raw)), i});
    }
    std::sort(all.begin(), all.end());
    ASSERT_EQ(got.size(), 3u);
    for (std::size_t r = 0; r < 3; ++r) {
      EXPECT_EQ(got[r].item, all[r].second) << "seed " << seed << " rank " << r;
      EXPECT_NEAR(got[r].probability, -all[r].first, 1e-12);
    }
  }
}

TEST(TopK, TiesGoToLowerItemId) {
  KnowledgeGraph g(support::ring7());
  HyperParams hp;
  hp.dim = 4;
  hp.k = 2;
  InteractionSet data = ring_items({{}});
  auto p = support::random_params(1, g, hp, 1);
  for (double& x : p.store().value("user_emb").flat()) x = 0.0;  // every probability is 0.5
  ModelContext ctx{g, p, hp, data};
  auto got = topk_recommend(0, 4, ctx, {});
  ASSERT_EQ(got.size(), 4u);
  for (ItemId r = 0; r < 4; ++r) {
    EXPECT_EQ(got[r].item, r);
    EXPECT_EQ(got[r].probability, 0.5);
  }
}

TEST(TopK, FewerCandidatesThanRequested) {
  KnowledgeGraph g(support::ring7());
  HyperParams hp;
  hp.dim = 4;
  hp.k = 2;
  InteractionSet data = ring_items({{0, 2, 3, 5}});
  auto p = support::random_params(1, g, hp, 4);
  ModelContext ctx{g, p, hp, data};
  std::vector<ItemId> excl{0, 2, 3, 5};
  auto got = topk_recommend(0, 10, ctx, excl);
  ASSERT_EQ(got.size(), 3u);
  for (std::size_t r = 0; r < got.size(); ++r) {
    EXPECT_FALSE(std::binary_search(excl.begin(), excl.end(), got[r].item));
    if (r > 0) EXPECT_GE(got[r - 1].probability, got[r].probability);
  }
  EXPECT_THROW(topk_recommend(0, 0, ctx, excl), DomainError);
}
