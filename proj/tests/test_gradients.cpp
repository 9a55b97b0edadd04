#include <gtest/gtest.h>

#include "attkgcn/training.hpp"
#include "test_support.hpp"

using namespace attkgcn;

namespace {

HyperParams grad_hp(Aggregator agg, bool attention, std::size_t depth = 2, std::size_t k = 3) {
  HyperParams hp;
  hp.dim = 4;
  hp.k = k;
  hp.depth = depth;
  hp.aggregator = agg;
  hp.attention = attention;
  hp.l2 = 0.05;
  return hp;
}

struct Case {
  Aggregator agg;
  bool attention;
};

class BatchGradient : public ::testing::TestWithParam<Case> {};

}  // namespace

TEST_P(BatchGradient, MatchesFiniteDifferencesOnRandomInstances) {
  const auto [agg, attention] = GetParam();
  const KnowledgeGraph g = support::mixed7_graph();
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto r = support::check_batch_gradient(g, grad_hp(agg, attention), 3, 3, seed);
    EXPECT_LT(r.max_rel_error, 1e-4) << "seed " << seed << " worst tensor " << r.worst;
  }
}

INSTANTIATE_TEST_SUITE_P(AllConfigs, BatchGradient,
                         ::testing::Values(Case{Aggregator::sum, true}, Case{Aggregator::sum, false},
                                           Case{Aggregator::concat, true}, Case{Aggregator::concat, false},
                                           Case{Aggregator::neighbor, true}, Case{Aggregator::neighbor, false}),
                         [](const auto& info) {
                           return to_string(info.param.agg) + (info.param.attention ? "_attention" : "_plain");
                         });

TEST(Gradient, DepthZeroAndOne) {
  const KnowledgeGraph g = support::mixed7_graph();
  for (std::size_t depth : {0u, 1u}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      auto r = support::check_batch_gradient(g, grad_hp(Aggregator::concat, true, depth), 2, 3, seed);
      EXPECT_LT(r.max_rel_error, 1e-4) << "depth " << depth << " seed " << seed << " " << r.worst;
    }
  }
}

TEST(Gradient, RegularGraphWithoutReplacementSampling) {
  const KnowledgeGraph g(support::ring7());
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto r = support::check_batch_gradient(g, grad_hp(Aggregator::sum, true, 2, 2), 2, 4, seed);
    EXPECT_LT(r.max_rel_error, 1e-4) << "seed " << seed << " " << r.worst;
  }
}

TEST(Gradient, EpochScaledPenalty) {
  const KnowledgeGraph g = support::mixed7_graph();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto r = support::check_batch_gradient(g, grad_hp(Aggregator::neighbor, true), 3, 2, seed, 40);
    EXPECT_LT(r.max_rel_error, 1e-4) << "seed " << seed << " " << r.worst;
  }
}

TEST(Gradient, RawScoreOfSingleItem) {
  // d(raw score)/d(theta) through forward_item/backward_item directly.
  const KnowledgeGraph g = support::mixed7_graph();
  for (bool attention : {true, false}) {
    HyperParams hp = grad_hp(Aggregator::sum, attention);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      ModelParams p = support::random_params(2, g, hp, seed);
      Rng rng(seed);
      auto field = sample_receptive_field(g, 0, hp.k, hp.depth, rng);
      auto raw = [&] { return raw_score(p, 1, forward_item(p, 1, field, attention)); };
      p.store().zero_grad();
      auto fw = forward_item(p, 1, field, attention);
      axpy(1.0, fw.output(), p.store().grad("user_emb").row(1));
      auto u = p.user_emb().row(1);
      backward_item(p, 1, field, fw, attention, std::vector<double>(u.begin(), u.end()));
      auto numeric = finite_diff_grad([&](const ParamStore&) { return raw(); }, p.store(), 1e-6);
      for (const auto& [name, slot] : p.store().slots()) {
        auto a = slot.grad.flat();
        auto n = numeric.at(name).flat();
        for (std::size_t i = 0; i < a.size(); ++i) {
          EXPECT_LT(std::abs(a[i] - n[i]) / std::max(1.0, std::abs(a[i])), 1e-4) << name << "[" << i << "]";
        }
      }
    }
  }
}
