#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "attkgcn/error.hpp"
#include "attkgcn/interactions.hpp"
#include "attkgcn/kg_store.hpp"
#include "attkgcn/model.hpp"

namespace attkgcn {

struct ScoredLabel {
  double score = 0.0;
  int label = 0;
};

/// Rank-based AUC; tied scores get the average rank, so each tied
/// positive/negative pair counts one half.
inline double auc(std::span<const ScoredLabel> items) {
  const std::size_t n = items.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return items[a].score < items[b].score; });

  double rank_sum_pos = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && items[order[j]].score == items[order[i]].score) ++j;
    // 1-based ranks i+1 .. j share their mean
    const double mean_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (items[order[t]].label == 1) {
        rank_sum_pos += mean_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw UndefinedMetricError("AUC needs at least one positive and one negative");
  const double np = static_cast<double>(n_pos);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

struct ClassificationMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  // No item reached the threshold; precision and f1 are reported as 0.
  bool no_positive_predictions = false;
  // No positive labels; recall is reported as 0.
  bool no_positive_labels = false;
};

inline ClassificationMetrics classification_metrics(std::span<const ScoredLabel> items, double threshold = 0.5) {
  if (items.empty()) throw DomainError("classification_metrics: empty input");
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (const auto& x : items) {
    const bool predicted = x.score >= threshold;
    if (predicted && x.label == 1) ++tp;
    else if (predicted) ++fp;
    else if (x.label == 1) ++fn;
    else ++tn;
  }
  ClassificationMetrics m;
  m.no_positive_predictions = tp + fp == 0;
  m.no_positive_labels = tp + fn == 0;
  m.precision = m.no_positive_predictions ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  m.recall = m.no_positive_labels ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  m.f1 = m.precision + m.recall > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(items.size());
  return m;
}

/// Everything needed to score (user, item) pairs with a trained model.
struct ModelContext {
  const KnowledgeGraph& graph;
  const ModelParams& params;
  const HyperParams& hp;
  const InteractionSet& data;
};

struct Recommendation {
  ItemId item = 0;
  double probability = 0.0;
};

/// Top-N items for `user` by predicted probability under the evaluation
/// seed, skipping `exclusion` (sorted). Ties go to the lower item id.
inline std::vector<Recommendation> topk_recommend(UserId user, std::size_t n, const ModelContext& ctx,
                                                  std::span<const ItemId> exclusion) {
  if (n == 0) throw DomainError("top-n must be >= 1");
  std::vector<Recommendation> all;
  AttentionProjections proj(ctx.params);
  for (ItemId i = 0; i < ctx.data.item_count(); ++i) {
    if (std::binary_search(exclusion.begin(), exclusion.end(), i)) continue;
    all.push_back({i, predict_eval(user, ctx.data.item_to_entity[i], ctx.hp, ctx.graph, ctx.params, proj).probability});
  }
  auto better = [](const Recommendation& a, const Recommendation& b) {
    if (a.probability != b.probability) return a.probability > b.probability;
    return a.item < b.item;
  };
  if (all.size() > n) {
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), all.end(), better);
    all.resize(n);
  } else {
    std::sort(all.begin(), all.end(), better);
  }
  return all;
}

}  // namespace attkgcn
