#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "attkgcn/error.hpp"
#include "attkgcn/interactions.hpp"
#include "attkgcn/kg_store.hpp"
#include "attkgcn/metrics.hpp"
#include "attkgcn/model.hpp"
#include "attkgcn/numerics.hpp"

namespace attkgcn {

/// Mean pairwise ranking loss over the batch plus the L2 penalty on the
/// touched parameters, scaled to a per-pair weight:
///
///   mean_i -ln sigmoid(pos_i - neg_i) + (lambda / pairs_total) * ||touched||^2
///
/// pairs_total is the number of pairs the penalty is spread over (the epoch's
/// training pairs during training); 0 means the batch size.
inline double pairwise_loss(std::span<const double> pos_raw, std::span<const double> neg_raw,
                            double touched_squared_norm, double lambda, std::size_t pairs_total = 0) {
  if (pos_raw.size() != neg_raw.size()) throw DomainError("pairwise_loss: length mismatch");
  if (pos_raw.empty()) throw DomainError("pairwise_loss: no pairs");
  double s = 0.0;
  for (std::size_t i = 0; i < pos_raw.size(); ++i) s += neg_log_sigmoid(pos_raw[i] - neg_raw[i]);
  const double n = static_cast<double>(pos_raw.size());
  const double scale = pairs_total == 0 ? n : static_cast<double>(pairs_total);
  return s / n + lambda * touched_squared_norm / scale;
}

/// One (user, positive, negative) triple with its sampled receptive fields.
struct PairSample {
  UserId user = 0;
  ItemId pos = 0;
  ItemId neg = 0;
  ReceptiveField pos_field;
  ReceptiveField neg_field;
};

/// Parameters read by a batch's forward passes: embedding rows actually
/// looked up plus the shared weights the configuration uses.
struct TouchedSet {
  std::vector<UserId> users;
  std::vector<EntityId> entities;
  std::vector<RelationId> relations;
  std::vector<std::string> shared;  // whole tensors

  static TouchedSet of(std::span<const PairSample> batch, const ModelParams& p, bool attention) {
    TouchedSet t;
    for (const PairSample& s : batch) {
      t.users.push_back(s.user);
      for (const ReceptiveField* f : {&s.pos_field, &s.neg_field}) {
        for (const auto& level : f->entities) t.entities.insert(t.entities.end(), level.begin(), level.end());
        for (const auto& level : f->relations) t.relations.insert(t.relations.end(), level.begin(), level.end());
      }
    }
    auto uniq = [](auto& v) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    uniq(t.users);
    uniq(t.entities);
    uniq(t.relations);
    if (p.depth() > 0) {
      if (attention) t.shared = {"attn_W", "attn_b", "attn_h"};
      for (std::size_t i = 1; i <= p.depth(); ++i) {
        t.shared.push_back(ModelParams::agg_w_name(i));
        t.shared.push_back(ModelParams::agg_b_name(i));
      }
    }
    return t;
  }

  double squared_norm(const ModelParams& p) const {
    double s = 0.0;
    for (UserId u : users) s += dot(p.user_emb().row(u), p.user_emb().row(u));
    for (EntityId e : entities) s += dot(p.entity_emb().row(e), p.entity_emb().row(e));
    for (RelationId r : relations) s += dot(p.relation_emb().row(r), p.relation_emb().row(r));
    for (const auto& name : shared) s += dot(p.store().value(name).flat(), p.store().value(name).flat());
    return s;
  }

  // grad += 2 * lambda * theta over the touched entries.
  void add_l2_grad(ModelParams& p, double lambda) const {
    ParamStore& st = p.store();
    auto rows = [&](const std::string& name, const auto& ids) {
      const Tensor& v = st.value(name);
      Tensor& g = st.grad(name);
      for (auto id : ids) axpy(2.0 * lambda, v.row(id), g.row(id));
    };
    rows("user_emb", users);
    rows("entity_emb", entities);
    rows("relation_emb", relations);
    for (const auto& name : shared) axpy(2.0 * lambda, st.value(name).flat(), st.grad(name).flat());
  }
};

struct BatchObjective {
  double loss = 0.0;       // as returned by pairwise_loss
  double data_loss = 0.0;  // mean of -ln sigmoid(pos - neg)
  double l2_term = 0.0;    // lambda * squared norm of the touched parameters
};

/// Pairwise objective of a batch with fixed receptive fields. When
/// `with_grad` is set, gradients are accumulated into the store.
/// `pairs_total` is forwarded to pairwise_loss.
inline BatchObjective batch_objective(ModelParams& p, std::span<const PairSample> batch, const HyperParams& hp,
                                      bool with_grad, std::size_t pairs_total = 0) {
  const std::size_t n = batch.size();
  if (n == 0) throw DomainError("batch_objective: empty batch");
  const double scale = static_cast<double>(pairs_total == 0 ? n : pairs_total);
  std::vector<double> pos_raw(n), neg_raw(n);
  std::vector<ItemForward> pos_fw, neg_fw;
  pos_fw.reserve(n);
  neg_fw.reserve(n);
  AttentionProjections proj(p);
  for (std::size_t i = 0; i < n; ++i) {
    pos_fw.push_back(forward_item(p, batch[i].user, batch[i].pos_field, hp.attention, proj));
    neg_fw.push_back(forward_item(p, batch[i].user, batch[i].neg_field, hp.attention, proj));
    pos_raw[i] = raw_score(p, batch[i].user, pos_fw[i]);
    neg_raw[i] = raw_score(p, batch[i].user, neg_fw[i]);
  }
  const TouchedSet touched = TouchedSet::of(batch, p, hp.attention);
  BatchObjective obj;
  const double sq = touched.squared_norm(p);
  obj.loss = pairwise_loss(pos_raw, neg_raw, sq, hp.l2, pairs_total);
  obj.l2_term = hp.l2 * sq;
  obj.data_loss = obj.loss - obj.l2_term / scale;
  if (!with_grad) return obj;

  AttentionGradSums attn_sums(p);
  const std::size_t d = p.dim();
  std::vector<double> d_item(d);
  Tensor& g_user = p.store().grad("user_emb");
  for (std::size_t i = 0; i < n; ++i) {
    // d/dx of -ln sigmoid(x) is -(1 - sigmoid(x)) = -sigmoid(-x)
    const double g_margin = -sigmoid(neg_raw[i] - pos_raw[i]) / static_cast<double>(n);
    const UserId u = batch[i].user;
    auto u_vec = p.user_emb().row(u);
    for (int side = 0; side < 2; ++side) {
      const double g_raw = side == 0 ? g_margin : -g_margin;
      const ItemForward& fw = side == 0 ? pos_fw[i] : neg_fw[i];
      const ReceptiveField& field = side == 0 ? batch[i].pos_field : batch[i].neg_field;
      axpy(g_raw, fw.output(), g_user.row(u));
      for (std::size_t t = 0; t < d; ++t) d_item[t] = g_raw * u_vec[t];
      backward_item(p, u, field, fw, hp.attention, d_item, attn_sums);
    }
  }
  attn_sums.flush(p);
  touched.add_l2_grad(p, hp.l2 / scale);
  return obj;
}

enum class EvalSplit { train, validation, test };

inline const char* to_string(EvalSplit s) {
  switch (s) {
    case EvalSplit::train: return "train";
    case EvalSplit::validation: return "validation";
    case EvalSplit::test: return "test";
  }
  return "?";
}

struct SplitMetrics {
  std::optional<double> auc;  // empty when the split has no positives
  ClassificationMetrics cls;
  std::size_t positives = 0;
};

inline constexpr const char* kEvalPopulation =
    "each held-out positive paired with one negative sampled under the evaluation seed";
inline constexpr double kClassificationThreshold = 0.5;

/// Balanced evaluation set for one split: every positive plus one negative
/// for its user, both scored with evaluation-seeded neighbor samples.
inline std::vector<ScoredLabel> score_split(const ModelContext& ctx, std::span<const Interaction> positives,
                                            EvalSplit which) {
  std::seed_seq seq{static_cast<std::uint32_t>(ctx.hp.eval_seed), static_cast<std::uint32_t>(ctx.hp.eval_seed >> 32),
                    0x5EEDu, static_cast<std::uint32_t>(which)};
  Rng rng(seq);
  AttentionProjections proj(ctx.params);
  std::vector<ScoredLabel> out;
  out.reserve(positives.size() * 2);
  for (const Interaction& x : positives) {
    const EntityId e = ctx.data.item_to_entity[x.item];
    out.push_back({predict_eval(x.user, e, ctx.hp, ctx.graph, ctx.params, proj).probability, 1});
    try {
      const ItemId neg = sample_negative(ctx.data, x.user, rng);
      out.push_back(
          {predict_eval(x.user, ctx.data.item_to_entity[neg], ctx.hp, ctx.graph, ctx.params, proj).probability, 0});
    } catch (const SamplingError&) {
    }
  }
  return out;
}

inline SplitMetrics evaluate_split(const ModelContext& ctx, EvalSplit which) {
  std::span<const Interaction> positives = which == EvalSplit::train        ? ctx.data.train
                                           : which == EvalSplit::validation ? ctx.data.validation
                                                                            : ctx.data.test;
  SplitMetrics m;
  m.positives = positives.size();
  if (positives.empty()) return m;
  auto scored = score_split(ctx, positives, which);
  try {
    m.auc = auc(scored);
  } catch (const UndefinedMetricError&) {
  }
  m.cls = classification_metrics(scored, kClassificationThreshold);
  return m;
}

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::optional<double> train_auc;
  std::optional<double> val_auc;
  double val_f1 = 0.0;
  double val_accuracy = 0.0;
};

struct FinalRecord {
  std::optional<double> test_auc;
  double test_f1 = 0.0;
  double test_accuracy = 0.0;
  std::size_t best_epoch = 0;
};

struct RunReport {
  std::uint64_t eval_seed = 0;
  std::vector<EpochRecord> epochs;
  FinalRecord final;

  // Highest validation AUC over the recorded epochs.
  std::optional<double> best_val_auc() const {
    std::optional<double> best;
    for (const auto& e : epochs) {
      if (e.val_auc && (!best || *e.val_auc > *best)) best = e.val_auc;
    }
    return best;
  }
};

inline nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

/// One JSON object per line: a header describing the evaluation population,
/// one object per epoch, and a final test object.
inline void write_run_report(std::ostream& out, const RunReport& r) {
  nlohmann::json header = {{"eval_population", kEvalPopulation},
                           {"threshold", kClassificationThreshold},
                           {"eval_seed", r.eval_seed}};
  out << header.dump() << '\n';
  for (const auto& e : r.epochs) {
    nlohmann::json j = {{"epoch", e.epoch},
                        {"train_loss", e.train_loss},
                        {"train_auc", optional_json(e.train_auc)},
                        {"val_auc", optional_json(e.val_auc)},
                        {"val_f1", e.val_f1},
                        {"val_accuracy", e.val_accuracy}};
    out << j.dump() << '\n';
  }
  nlohmann::json fin = {{"test_auc", optional_json(r.final.test_auc)},
                        {"test_f1", r.final.test_f1},
                        {"test_accuracy", r.final.test_accuracy},
                        {"best_epoch", r.final.best_epoch}};
  out << fin.dump() << '\n';
}

/// Extends `g` so every mapped item entity is a valid entity id.
inline KnowledgeGraph graph_covering_items(const KnowledgeGraph& g, const InteractionSet& data) {
  std::size_t need = 0;
  for (EntityId e : data.item_to_entity) need = std::max<std::size_t>(need, std::size_t{e} + 1);
  return g.with_min_entities(need);
}

inline Rng stream_rng(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream};
  return Rng(seq);
}

/// Mutable state of one training run. The graph must already cover every
/// item entity (see graph_covering_items).
struct TrainState {
  ModelParams params;
  HyperParams hp;
  std::size_t epoch = 0;
  double best_val_auc = 0.0;
  std::size_t patience_used = 0;
  Rng sampling_rng;
  Rng negative_rng;
  Rng shuffle_rng;

  TrainState(const HyperParams& h, const KnowledgeGraph& g, const InteractionSet& data) : hp(h) {
    hp.validate();
    Rng init = stream_rng(hp.seed, 0);
    params = ModelParams(data.user_count(), g.entity_count(), g.relation_table_size(), hp, init);
    sampling_rng = stream_rng(hp.seed, 1);
    negative_rng = stream_rng(hp.seed, 2);
    shuffle_rng = stream_rng(hp.seed, 3);
  }
};

struct EpochStats {
  double mean_loss = 0.0;
  double grad_norm = 0.0;  // mean over batches, before the Adam step
  std::size_t pairs = 0;
};

/// One pass over the shuffled training positives, each paired with a fresh
/// negative drawn outside the user's training positives, in batches of hp.batch with one Adam step per batch.
inline EpochStats train_epoch(TrainState& st, const KnowledgeGraph& g, const InteractionSet& data) {
  if (data.train.empty()) throw DomainError("train_epoch: empty training split");
  const InteractionSet seen = training_view(data);
  std::vector<Interaction> order = data.train;
  std::shuffle(order.begin(), order.end(), st.shuffle_rng);

  EpochStats stats;
  double loss_sum = 0.0;
  double norm_sum = 0.0;
  std::size_t batches = 0;
  std::vector<PairSample> batch;
  batch.reserve(st.hp.batch);
  auto flush = [&] {
    if (batch.empty()) return;
    auto obj = batch_objective(st.params, batch, st.hp, true, data.train.size());
    loss_sum += obj.loss * static_cast<double>(batch.size());
    stats.pairs += batch.size();
    norm_sum += st.params.store().grad_norm();
    ++batches;
    adam_step(st.params.store(), st.hp.lr);
    batch.clear();
  };
  for (const Interaction& x : order) {
    PairSample s;
    s.user = x.user;
    s.pos = x.item;
    try {
      s.neg = sample_negative(seen, x.user, st.negative_rng);
    } catch (const SamplingError&) {
      continue;
    }
    s.pos_field = sample_receptive_field(g, data.item_to_entity[s.pos], st.hp.k, st.hp.depth, st.sampling_rng);
    s.neg_field = sample_receptive_field(g, data.item_to_entity[s.neg], st.hp.k, st.hp.depth, st.sampling_rng);
    batch.push_back(std::move(s));
    if (batch.size() == st.hp.batch) flush();
  }
  flush();
  ++st.epoch;
  if (stats.pairs > 0) stats.mean_loss = loss_sum / static_cast<double>(stats.pairs);
  if (batches > 0) stats.grad_norm = norm_sum / static_cast<double>(batches);
  return stats;
}

struct TrainOptions {
  // Called after every metric evaluation; tests count test-split calls.
  std::function<void(EvalSplit, const ModelParams&)> on_evaluate;
  // Called after every epoch with its record.
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  ModelParams params;  // best-validation checkpoint
  RunReport report;
};

/// Up to hp.epochs epochs with per-epoch train/validation evaluation; keeps
/// the best-validation-AUC parameters, stops after hp.patience epochs without
/// improvement (0 disables), and evaluates the test split once on the kept
/// parameters.
inline TrainResult train(const HyperParams& hp, const KnowledgeGraph& graph, const InteractionSet& data,
                         const TrainOptions& opt = {}) {
  const KnowledgeGraph g = graph_covering_items(graph, data);
  TrainState st(hp, g, data);
  TrainResult result;
  result.report.eval_seed = hp.eval_seed;
  ModelParams best = st.params;
  bool have_best = false;

  auto evaluate = [&](const ModelParams& p, EvalSplit which) {
    SplitMetrics m = evaluate_split(ModelContext{g, p, st.hp, data}, which);
    if (opt.on_evaluate) opt.on_evaluate(which, p);
    return m;
  };

  for (std::size_t e = 0; e < st.hp.epochs; ++e) {
    EpochStats stats = train_epoch(st, g, data);
    SplitMetrics tr = evaluate(st.params, EvalSplit::train);
    SplitMetrics va = evaluate(st.params, EvalSplit::validation);
    EpochRecord rec{st.epoch, stats.mean_loss, tr.auc, va.auc, va.cls.f1, va.cls.accuracy};
    result.report.epochs.push_back(rec);
    if (opt.on_epoch) opt.on_epoch(rec);

    // Without a usable validation AUC the latest epoch is kept.
    const bool improved = !va.auc || !have_best || *va.auc > st.best_val_auc;
    if (improved) {
      if (va.auc) st.best_val_auc = *va.auc;
      best = st.params;
      have_best = true;
      result.report.final.best_epoch = st.epoch;
      st.patience_used = 0;
    } else {
      ++st.patience_used;
      if (st.hp.patience > 0 && st.patience_used >= st.hp.patience) break;
    }
  }

  SplitMetrics te = evaluate(best, EvalSplit::test);
  result.report.final.test_auc = te.auc;
  result.report.final.test_f1 = te.cls.f1;
  result.report.final.test_accuracy = te.cls.accuracy;
  result.params = std::move(best);
  return result;
}

}  // namespace attkgcn
