#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "attkgcn/error.hpp"
#include "attkgcn/interactions.hpp"
#include "attkgcn/kg_store.hpp"
#include "attkgcn/numerics.hpp"

namespace attkgcn {

enum class Aggregator { sum, concat, neighbor };
enum class Activation { identity, relu, tanh };

inline std::string to_string(Aggregator a) {
  switch (a) {
    case Aggregator::sum: return "sum";
    case Aggregator::concat: return "concat";
    case Aggregator::neighbor: return "neighbor";
  }
  throw DomainError("unknown aggregator kind");
}

inline Aggregator parse_aggregator(const std::string& s) {
  if (s == "sum") return Aggregator::sum;
  if (s == "concat") return Aggregator::concat;
  if (s == "neighbor") return Aggregator::neighbor;
  throw DomainError("unknown aggregator '" + s + "' (valid: sum, concat, neighbor)");
}

struct HyperParams {
  std::size_t k = 8;       // neighbor sample size
  std::size_t dim = 32;    // embedding dimension
  std::size_t depth = 2;   // receptive-field depth H
  double l2 = 2e-2;
  double lr = 1e-2;
  std::size_t batch = 32;
  Aggregator aggregator = Aggregator::sum;
  bool attention = true;
  std::uint64_t seed = 1;
  std::size_t epochs = 20;
  std::size_t patience = 5;  // 0 disables early stopping
  std::uint64_t eval_seed = 2024;

  void validate() const {
    if (k < 1) throw DomainError("k must be >= 1");
    if (dim < 1) throw DomainError("dim must be >= 1");
    if (!(l2 >= 0)) throw DomainError("l2 must be >= 0");
    if (!(lr > 0)) throw DomainError("lr must be > 0");
    if (batch < 1) throw DomainError("batch must be >= 1");
  }
};

/// Trainable tensors of the model, held in a ParamStore under fixed names:
/// user_emb |U|xd, entity_emb |E|xd, relation_emb |R|xd, attn_W dx2d,
/// attn_b 1xd, attn_h 1xd, and for every hop i in 1..H agg_w_i (dxd, or dx2d
/// for concat) with agg_b_i 1xd.
class ModelParams {
 public:
  ModelParams() = default;

  ModelParams(std::size_t users, std::size_t entities, std::size_t relations, const HyperParams& hp, Rng& rng)
      : dim_(hp.dim), depth_(hp.depth), aggregator_(hp.aggregator) {
    const std::size_t d = hp.dim;
    store_.add("user_emb", xavier_uniform(users, d, rng));
    store_.add("entity_emb", xavier_uniform(entities, d, rng));
    store_.add("relation_emb", xavier_uniform(relations, d, rng));
    store_.add("attn_W", xavier_uniform(d, 2 * d, rng));
    store_.add("attn_b", Tensor::vector(d));
    store_.add("attn_h", xavier_uniform(1, d, rng));
    const std::size_t in = hp.aggregator == Aggregator::concat ? 2 * d : d;
    for (std::size_t i = 1; i <= depth_; ++i) {
      store_.add(agg_w_name(i), xavier_uniform(d, in, rng));
      store_.add(agg_b_name(i), Tensor::vector(d));
    }
  }

  static std::string agg_w_name(std::size_t hop) { return "agg_w_" + std::to_string(hop); }
  static std::string agg_b_name(std::size_t hop) { return "agg_b_" + std::to_string(hop); }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t depth() const noexcept { return depth_; }
  Aggregator aggregator() const noexcept { return aggregator_; }

  ParamStore& store() noexcept { return store_; }
  const ParamStore& store() const noexcept { return store_; }

  const Tensor& user_emb() const { return store_.value("user_emb"); }
  const Tensor& entity_emb() const { return store_.value("entity_emb"); }
  const Tensor& relation_emb() const { return store_.value("relation_emb"); }
  const Tensor& attn_W() const { return store_.value("attn_W"); }
  const Tensor& attn_b() const { return store_.value("attn_b"); }
  const Tensor& attn_h() const { return store_.value("attn_h"); }
  const Tensor& agg_w(std::size_t hop) const { return store_.value(agg_w_name(hop)); }
  const Tensor& agg_b(std::size_t hop) const { return store_.value(agg_b_name(hop)); }

 private:
  ParamStore store_;
  std::size_t dim_ = 0;
  std::size_t depth_ = 0;
  Aggregator aggregator_ = Aggregator::sum;
};

inline double activate(Activation a, double z) {
  switch (a) {
    case Activation::identity: return z;
    case Activation::relu: return z > 0 ? z : 0.0;
    case Activation::tanh: return std::tanh(z);
  }
  return z;
}

// Derivative expressed through the activation output.
inline double activate_grad_from_output(Activation a, double out) {
  switch (a) {
    case Activation::identity: return 1.0;
    case Activation::relu: return out > 0 ? 1.0 : 0.0;
    case Activation::tanh: return 1.0 - out * out;
  }
  return 1.0;
}

/// User-relation score: <u, r>.
inline double relation_score(std::span<const double> u, std::span<const double> r) {
  if (u.size() != r.size()) throw DomainError("relation_score: dimension mismatch");
  return dot(u, r);
}

/// Attention logit h^T ReLU(W [e_v, e_vi] + b).
inline double attention_logit(std::span<const double> e_v, std::span<const double> e_vi, const Tensor& w,
                              std::span<const double> b, std::span<const double> h) {
  const std::size_t d = e_v.size();
  if (e_vi.size() != d || w.cols() != 2 * d || w.rows() != b.size() || h.size() != b.size()) {
    throw DomainError("attention_logit: dimension mismatch");
  }
  std::vector<double> a(b.begin(), b.end());
  matvec(w, e_v, a, 0, true);
  matvec(w, e_vi, a, d, true);
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += h[j] * (a[j] > 0 ? a[j] : 0.0);
  return s;
}

/// Softmax weights over the sampled edges of `target`: logits are the
/// user-relation score, plus the attention logit when attention is on.
inline std::vector<double> neighbor_weights(std::span<const double> u, EntityId target, std::span<const Edge> edges,
                                            const ModelParams& p, bool attention) {
  if (edges.empty()) throw DomainError("neighbor_weights: no edges");
  const Tensor& rel = p.relation_emb();
  const Tensor& ent = p.entity_emb();
  if (target >= ent.rows()) throw DomainError("neighbor_weights: entity id out of range");
  for (const Edge& e : edges) {
    if (e.entity >= ent.rows() || e.relation >= rel.rows()) throw DomainError("neighbor_weights: edge out of range");
  }
  std::vector<double> logits(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    logits[i] = relation_score(u, rel.row(edges[i].relation));
    if (attention) {
      logits[i] += attention_logit(ent.row(target), ent.row(edges[i].entity), p.attn_W(), p.attn_b().row(0),
                                   p.attn_h().row(0));
    }
  }
  return softmax(logits);
}

/// Weighted sum of neighbor vectors (one per row).
inline std::vector<double> neighborhood_repr(std::span<const double> weights, const Tensor& neighbor_vecs) {
  if (weights.size() != neighbor_vecs.rows()) throw DomainError("neighborhood_repr: length mismatch");
  std::vector<double> out(neighbor_vecs.cols(), 0.0);
  for (std::size_t i = 0; i < weights.size(); ++i) axpy(weights[i], neighbor_vecs.row(i), out);
  return out;
}

/// sum: act(w (v + n) + b); concat: act(w [v, n] + b); neighbor: act(w n + b).
inline std::vector<double> aggregate(Aggregator kind, std::span<const double> v, std::span<const double> n,
                                     const Tensor& w, std::span<const double> b, Activation act) {
  const std::size_t d = v.size();
  if (n.size() != d || b.size() != w.rows()) throw DomainError("aggregate: dimension mismatch");
  std::vector<double> z(b.begin(), b.end());
  switch (kind) {
    case Aggregator::sum: {
      if (w.cols() != d) throw DomainError("aggregate(sum): weight must be d x d");
      std::vector<double> x(d);
      for (std::size_t i = 0; i < d; ++i) x[i] = v[i] + n[i];
      matvec(w, x, z, 0, true);
      break;
    }
    case Aggregator::concat:
      if (w.cols() != 2 * d) throw DomainError("aggregate(concat): weight must be d x 2d");
      matvec(w, v, z, 0, true);
      matvec(w, n, z, d, true);
      break;
    case Aggregator::neighbor:
      if (w.cols() != d) throw DomainError("aggregate(neighbor): weight must be d x d");
      matvec(w, n, z, 0, true);
      break;
    default:
      throw DomainError("aggregate: unknown aggregator kind");
  }
  for (double& x : z) x = activate(act, x);
  return z;
}

/// Sampled H-hop tree around one item: entities[h] holds K^h ids and
/// relations[h] the K^(h+1) relation ids linking level h to level h+1.
/// Children of node j at level h occupy [j*K, (j+1)*K) at level h+1.
struct ReceptiveField {
  std::size_t k = 0;
  std::vector<std::vector<EntityId>> entities;
  std::vector<std::vector<RelationId>> relations;

  std::size_t depth() const noexcept { return relations.size(); }
};

inline ReceptiveField sample_receptive_field(const KnowledgeGraph& g, EntityId v, std::size_t k, std::size_t depth,
                                             Rng& rng) {
  g.check_entity(v);
  if (k == 0) throw DomainError("neighbor sample size must be >= 1");
  ReceptiveField f;
  f.k = k;
  f.entities.push_back({v});
  for (std::size_t h = 0; h < depth; ++h) {
    std::vector<EntityId> next;
    std::vector<RelationId> rels;
    next.reserve(f.entities[h].size() * k);
    rels.reserve(f.entities[h].size() * k);
    for (EntityId e : f.entities[h]) {
      for (const Edge& edge : sample_neighbors(g, e, k, rng)) {
        next.push_back(edge.entity);
        rels.push_back(edge.relation);
      }
    }
    f.entities.push_back(std::move(next));
    f.relations.push_back(std::move(rels));
  }
  return f;
}

/// Activations of one item forward pass, kept for the backward pass.
struct ItemForward {
  // weights[h]: softmax weights of the K^(h+1) edges below level h.
  std::vector<std::vector<double>> weights;
  // attn_pre[h]: pre-ReLU attention activations, K^(h+1) x d (empty when attention is off).
  std::vector<std::vector<double>> attn_pre;
  // repr[i][h]: representation of level-h nodes after i aggregation rounds, K^h x d.
  std::vector<std::vector<std::vector<double>>> repr;
  // nbr[i][h]: neighborhood vector consumed by round i at level h.
  std::vector<std::vector<std::vector<double>>> nbr;

  std::span<const double> output() const { return repr.back()[0]; }
};

inline Activation round_activation(std::size_t round, std::size_t depth) {
  return round == depth ? Activation::tanh : Activation::relu;
}

/// Per-entity attention projections W[:, :d] e + b (self slot) and
/// W[:, d:] e (neighbor slot), filled lazily. Valid for one parameter state.
class AttentionProjections {
 public:
  explicit AttentionProjections(const ModelParams& p) : p_(&p), dim_(p.dim()) {}

  std::span<const double> self(EntityId e) {
    ensure(e);
    return self_.row(e);
  }
  std::span<const double> child(EntityId e) {
    ensure(e);
    return child_.row(e);
  }

 private:
  void ensure(EntityId e) {
    if (ready_.empty()) {
      const std::size_t n = p_->entity_emb().rows();
      ready_.assign(n, 0);
      self_ = Tensor(n, dim_);
      child_ = Tensor(n, dim_);
    }
    if (ready_[e]) return;
    auto row = p_->entity_emb().row(e);
    auto s = self_.row(e);
    auto b = p_->attn_b().row(0);
    std::copy(b.begin(), b.end(), s.begin());
    matvec(p_->attn_W(), row, s, 0, true);
    matvec(p_->attn_W(), row, child_.row(e), dim_, false);
    ready_[e] = 1;
  }

  const ModelParams* p_;
  std::size_t dim_;
  std::vector<char> ready_;
  Tensor self_;
  Tensor child_;
};

/// Gradient w.r.t. the attention pre-activations, summed per entity and slot.
/// flush() turns the sums into attn_W, attn_b and entity_emb gradients.
class AttentionGradSums {
 public:
  explicit AttentionGradSums(const ModelParams& p) : rows_(p.entity_emb().rows()), dim_(p.dim()) {}

  std::span<double> self(EntityId e) {
    touch(e);
    return self_.row(e);
  }
  std::span<double> child(EntityId e) {
    touch(e);
    return child_.row(e);
  }

  void flush(ModelParams& p) {
    ParamStore& st = p.store();
    Tensor& g_w = st.grad("attn_W");
    auto g_b = st.grad("attn_b").row(0);
    Tensor& g_ent = st.grad("entity_emb");
    const Tensor& w = p.attn_W();
    std::sort(touched_.begin(), touched_.end());
    for (EntityId e : touched_) {
      auto emb = p.entity_emb().row(e);
      auto ds = self_.row(e);
      auto dc = child_.row(e);
      axpy(1.0, ds, g_b);
      outer_acc(g_w, ds, emb, 0);
      outer_acc(g_w, dc, emb, dim_);
      matvec_t_acc(w, ds, g_ent.row(e), 0);
      matvec_t_acc(w, dc, g_ent.row(e), dim_);
      std::fill(ds.begin(), ds.end(), 0.0);
      std::fill(dc.begin(), dc.end(), 0.0);
      mark_[e] = 0;
    }
    touched_.clear();
  }

 private:
  void touch(EntityId e) {
    if (mark_.empty()) {
      mark_.assign(rows_, 0);
      self_ = Tensor(rows_, dim_);
      child_ = Tensor(rows_, dim_);
    }
    if (!mark_[e]) {
      mark_[e] = 1;
      touched_.push_back(e);
    }
  }

  std::size_t rows_;
  std::size_t dim_;
  Tensor self_;
  Tensor child_;
  std::vector<char> mark_;
  std::vector<EntityId> touched_;
};

inline ItemForward forward_item(const ModelParams& p, UserId user, const ReceptiveField& f, bool attention,
                                AttentionProjections& proj) {
  const std::size_t d = p.dim();
  const std::size_t depth = p.depth();
  if (f.depth() != depth) throw DomainError("receptive field depth does not match the model");
  const std::size_t k = f.k;
  const Tensor& ent = p.entity_emb();
  const Tensor& rel = p.relation_emb();
  auto u = p.user_emb().row(user);
  auto attn_h = p.attn_h().row(0);

  ItemForward fw;
  fw.repr.resize(depth + 1);
  fw.nbr.resize(depth + 1);
  fw.repr[0].resize(depth + 1);
  for (std::size_t h = 0; h <= depth; ++h) {
    auto& out = fw.repr[0][h];
    out.resize(f.entities[h].size() * d);
    for (std::size_t j = 0; j < f.entities[h].size(); ++j) {
      auto row = ent.row(f.entities[h][j]);
      std::copy(row.begin(), row.end(), out.begin() + static_cast<std::ptrdiff_t>(j * d));
    }
  }

  fw.weights.resize(depth);
  fw.attn_pre.resize(depth);
  std::vector<double> logits(k);
  for (std::size_t h = 0; h < depth; ++h) {
    const std::size_t nodes = f.entities[h].size();
    fw.weights[h].resize(nodes * k);
    if (attention) fw.attn_pre[h].resize(nodes * k * d);
    for (std::size_t j = 0; j < nodes; ++j) {
      std::span<const double> self_part;
      if (attention) self_part = proj.self(f.entities[h][j]);
      for (std::size_t c = 0; c < k; ++c) {
        const std::size_t idx = j * k + c;
        logits[c] = dot(u, rel.row(f.relations[h][idx]));
        if (attention) {
          auto child_part = proj.child(f.entities[h + 1][idx]);
          double* a = fw.attn_pre[h].data() + idx * d;
          double s = 0.0;
          for (std::size_t t = 0; t < d; ++t) {
            a[t] = self_part[t] + child_part[t];
            if (a[t] > 0) s += attn_h[t] * a[t];
          }
          logits[c] += s;
        }
      }
      auto w = softmax(logits);
      std::copy(w.begin(), w.end(), fw.weights[h].begin() + static_cast<std::ptrdiff_t>(j * k));
    }
  }

  std::vector<double> x(d);
  for (std::size_t i = 1; i <= depth; ++i) {
    const Activation act = round_activation(i, depth);
    const Tensor& w = p.agg_w(i);
    auto b = p.agg_b(i).row(0);
    fw.repr[i].resize(depth - i + 1);
    fw.nbr[i].resize(depth - i + 1);
    for (std::size_t h = 0; h + i <= depth; ++h) {
      const std::size_t nodes = f.entities[h].size();
      const auto& prev_self = fw.repr[i - 1][h];
      const auto& prev_child = fw.repr[i - 1][h + 1];
      auto& n_all = fw.nbr[i][h];
      auto& out_all = fw.repr[i][h];
      n_all.assign(nodes * d, 0.0);
      out_all.resize(nodes * d);
      for (std::size_t j = 0; j < nodes; ++j) {
        std::span<double> n(n_all.data() + j * d, d);
        for (std::size_t c = 0; c < k; ++c) {
          const std::size_t idx = j * k + c;
          axpy(fw.weights[h][idx], std::span<const double>(prev_child.data() + idx * d, d), n);
        }
        std::span<const double> self(prev_self.data() + j * d, d);
        std::span<double> z(out_all.data() + j * d, d);
        std::copy(b.begin(), b.end(), z.begin());
        switch (p.aggregator()) {
          case Aggregator::sum:
            for (std::size_t t = 0; t < d; ++t) x[t] = self[t] + n[t];
            matvec(w, x, z, 0, true);
            break;
          case Aggregator::concat:
            matvec(w, self, z, 0, true);
            matvec(w, n, z, d, true);
            break;
          case Aggregator::neighbor:
            matvec(w, n, z, 0, true);
            break;
        }
        for (double& t : z) t = activate(act, t);
      }
    }
  }
  return fw;
}

inline ItemForward forward_item(const ModelParams& p, UserId user, const ReceptiveField& f, bool attention) {
  AttentionProjections proj(p);
  return forward_item(p, user, f, attention, proj);
}

/// Accumulates gradients of a scalar objective into p.store() grads, given
/// d_out = dObjective/d(item representation). The user row receives only the
/// relation-score part here; the caller adds the final inner-product term.
/// Attention pre-activation gradients land in `attn_sums` until flushed.
inline void backward_item(ModelParams& p, UserId user, const ReceptiveField& f, const ItemForward& fw,
                          bool attention, std::span<const double> d_out, AttentionGradSums& attn_sums) {
  const std::size_t d = p.dim();
  const std::size_t depth = p.depth();
  const std::size_t k = f.k;
  ParamStore& st = p.store();
  Tensor& g_ent = st.grad("entity_emb");

  if (depth == 0) {
    axpy(1.0, d_out, g_ent.row(f.entities[0][0]));
    return;
  }

  // d_repr[i][h] mirrors fw.repr[i][h]
  std::vector<std::vector<std::vector<double>>> d_repr(depth + 1);
  for (std::size_t i = 0; i <= depth; ++i) {
    d_repr[i].resize(depth - i + 1);
    for (std::size_t h = 0; h + i <= depth; ++h) d_repr[i][h].assign(f.entities[h].size() * d, 0.0);
  }
  std::copy(d_out.begin(), d_out.end(), d_repr[depth][0].begin());
  std::vector<std::vector<double>> d_weights(depth);
  for (std::size_t h = 0; h < depth; ++h) d_weights[h].assign(f.entities[h].size() * k, 0.0);

  std::vector<double> dz(d), dn(d), x(d);
  for (std::size_t i = depth; i >= 1; --i) {
    const Activation act = round_activation(i, depth);
    const Tensor& w = p.agg_w(i);
    Tensor& gw = st.grad(ModelParams::agg_w_name(i));
    auto gb = st.grad(ModelParams::agg_b_name(i)).row(0);
    for (std::size_t h = 0; h + i <= depth; ++h) {
      const std::size_t nodes = f.entities[h].size();
      for (std::size_t j = 0; j < nodes; ++j) {
        std::span<const double> out(fw.repr[i][h].data() + j * d, d);
        std::span<const double> dout(d_repr[i][h].data() + j * d, d);
        for (std::size_t t = 0; t < d; ++t) dz[t] = dout[t] * activate_grad_from_output(act, out[t]);
        axpy(1.0, dz, gb);
        std::span<const double> self(fw.repr[i - 1][h].data() + j * d, d);
        std::span<const double> n(fw.nbr[i][h].data() + j * d, d);
        std::span<double> d_self(d_repr[i - 1][h].data() + j * d, d);
        std::fill(dn.begin(), dn.end(), 0.0);
        switch (p.aggregator()) {
          case Aggregator::sum:
            for (std::size_t t = 0; t < d; ++t) x[t] = self[t] + n[t];
            outer_acc(gw, dz, x);
            matvec_t_acc(w, dz, dn);
            axpy(1.0, dn, d_self);
            break;
          case Aggregator::concat:
            outer_acc(gw, dz, self, 0);
            outer_acc(gw, dz, n, d);
            matvec_t_acc(w, dz, d_self, 0);
            matvec_t_acc(w, dz, dn, d);
            break;
          case Aggregator::neighbor:
            outer_acc(gw, dz, n);
            matvec_t_acc(w, dz, dn);
            break;
        }
        for (std::size_t c = 0; c < k; ++c) {
          const std::size_t idx = j * k + c;
          std::span<const double> child(fw.repr[i - 1][h + 1].data() + idx * d, d);
          std::span<double> d_child(d_repr[i - 1][h + 1].data() + idx * d, d);
          axpy(fw.weights[h][idx], dn, d_child);
          d_weights[h][idx] += dot(dn, child);
        }
      }
    }
  }

  for (std::size_t h = 0; h <= depth; ++h) {
    for (std::size_t j = 0; j < f.entities[h].size(); ++j) {
      axpy(1.0, std::span<const double>(d_repr[0][h].data() + j * d, d), g_ent.row(f.entities[h][j]));
    }
  }

  // softmax, relation scores and attention logits
  const Tensor& rel = p.relation_emb();
  auto u = p.user_emb().row(user);
  auto g_user = st.grad("user_emb").row(user);
  Tensor& g_rel = st.grad("relation_emb");
  auto g_attn_h = st.grad("attn_h").row(0);
  auto attn_h = p.attn_h().row(0);
  for (std::size_t h = 0; h < depth; ++h) {
    for (std::size_t j = 0; j < f.entities[h].size(); ++j) {
      double weighted = 0.0;
      for (std::size_t c = 0; c < k; ++c) weighted += fw.weights[h][j * k + c] * d_weights[h][j * k + c];
      std::span<double> da_self;
      if (attention) da_self = attn_sums.self(f.entities[h][j]);
      for (std::size_t c = 0; c < k; ++c) {
        const std::size_t idx = j * k + c;
        const double dlogit = fw.weights[h][idx] * (d_weights[h][idx] - weighted);
        const RelationId r = f.relations[h][idx];
        axpy(dlogit, rel.row(r), g_user);
        axpy(dlogit, u, g_rel.row(r));
        if (!attention || dlogit == 0.0) continue;
        const double* a = fw.attn_pre[h].data() + idx * d;
        auto da_child = attn_sums.child(f.entities[h + 1][idx]);
        for (std::size_t t = 0; t < d; ++t) {
          if (a[t] <= 0) continue;
          g_attn_h[t] += dlogit * a[t];
          const double da = dlogit * attn_h[t];
          da_self[t] += da;
          da_child[t] += da;
        }
      }
    }
  }
}

inline void backward_item(ModelParams& p, UserId user, const ReceptiveField& f, const ItemForward& fw,
                          bool attention, std::span<const double> d_out) {
  AttentionGradSums sums(p);
  backward_item(p, user, f, fw, attention, d_out, sums);
  sums.flush(p);
}

/// Raw score (pre-sigmoid) and probability of a user-item interaction.
struct Prediction {
  double raw = 0.0;
  double probability = 0.5;
};

inline double raw_score(const ModelParams& p, UserId user, const ItemForward& fw) {
  return dot(p.user_emb().row(user), fw.output());
}

/// Final representation of entity `v` as seen by `user`. Consumes `rng` for
/// neighbor sampling (not at all when depth is 0).
inline std::vector<double> item_repr(UserId user, EntityId v, const HyperParams& hp, const KnowledgeGraph& g,
                                     const ModelParams& p, Rng& rng, AttentionProjections& proj) {
  auto field = sample_receptive_field(g, v, hp.k, hp.depth, rng);
  auto fw = forward_item(p, user, field, hp.attention, proj);
  auto out = fw.output();
  return {out.begin(), out.end()};
}

inline std::vector<double> item_repr(UserId user, EntityId v, const HyperParams& hp, const KnowledgeGraph& g,
                                     const ModelParams& p, Rng& rng) {
  AttentionProjections proj(p);
  return item_repr(user, v, hp, g, p, rng, proj);
}

inline Prediction predict(UserId user, EntityId v, const HyperParams& hp, const KnowledgeGraph& g,
                          const ModelParams& p, Rng& rng, AttentionProjections& proj) {
  if (user >= p.user_emb().rows()) throw DomainError("user id " + std::to_string(user) + " out of range");
  auto repr = item_repr(user, v, hp, g, p, rng, proj);
  const double raw = dot(p.user_emb().row(user), repr);
  return {raw, sigmoid(raw)};
}

inline Prediction predict(UserId user, EntityId v, const HyperParams& hp, const KnowledgeGraph& g,
                          const ModelParams& p, Rng& rng) {
  AttentionProjections proj(p);
  return predict(user, v, hp, g, p, rng, proj);
}

// Evaluation-time neighbor samples depend only on (eval_seed, entity), so a
// prediction is independent of the order in which items are scored.
inline Rng evaluation_rng(std::uint64_t eval_seed, EntityId v) {
  std::seed_seq seq{static_cast<std::uint32_t>(eval_seed), static_cast<std::uint32_t>(eval_seed >> 32),
                    static_cast<std::uint32_t>(v)};
  return Rng(seq);
}

inline Prediction predict_eval(UserId user, EntityId v, const HyperParams& hp, const KnowledgeGraph& g,
                               const ModelParams& p, AttentionProjections& proj) {
  Rng rng = evaluation_rng(hp.eval_seed, v);
  return predict(user, v, hp, g, p, rng, proj);
}

inline Prediction predict_eval(UserId user, EntityId v, const HyperParams& hp, const KnowledgeGraph& g,
                               const ModelParams& p) {
  AttentionProjections proj(p);
  return predict_eval(user, v, hp, g, p, proj);
}

}  // namespace attkgcn
