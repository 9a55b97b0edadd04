#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "attkgcn/error.hpp"
#include "attkgcn/text_io.hpp"

namespace attkgcn {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;
using Rng = std::mt19937_64;

struct Triple {
  EntityId head = 0;
  RelationId relation = 0;
  EntityId tail = 0;

  friend auto operator<=>(const Triple&, const Triple&) = default;
};

struct Edge {
  RelationId relation = 0;
  EntityId entity = 0;

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Immutable triple store with undirected, deduplicated adjacency.
///
/// relation_count() counts loaded relations only. One extra relation id,
/// self_relation() == relation_count(), is reserved for the self-loop that
/// stands in for the neighbors of an isolated entity; embedding tables must
/// therefore hold relation_table_size() rows.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;

  // Triples are deduplicated. entity_count is raised to at least
  // 1 + max id seen; relation_count to at least 1 + max relation seen.
  explicit KnowledgeGraph(std::vector<Triple> triples, std::size_t min_entity_count = 0,
                          std::size_t min_relation_count = 0) {
    std::sort(triples.begin(), triples.end());
    triples.erase(std::unique(triples.begin(), triples.end()), triples.end());
    entity_count_ = min_entity_count;
    relation_count_ = min_relation_count;
    for (const Triple& t : triples) {
      entity_count_ = std::max<std::size_t>(entity_count_, std::size_t{std::max(t.head, t.tail)} + 1);
      relation_count_ = std::max<std::size_t>(relation_count_, std::size_t{t.relation} + 1);
    }
    triples_ = std::move(triples);
    adjacency_.assign(entity_count_, {});
    for (const Triple& t : triples_) {
      adjacency_[t.head].push_back({t.relation, t.tail});
      adjacency_[t.tail].push_back({t.relation, t.head});
    }
    for (auto& edges : adjacency_) {
      std::sort(edges.begin(), edges.end());
      edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    }
  }

  std::size_t entity_count() const noexcept { return entity_count_; }
  std::size_t relation_count() const noexcept { return relation_count_; }
  RelationId self_relation() const noexcept { return static_cast<RelationId>(relation_count_); }
  std::size_t relation_table_size() const noexcept { return relation_count_ + 1; }
  const std::vector<Triple>& triples() const noexcept { return triples_; }

  std::span<const Edge> neighbors(EntityId e) const {
    check_entity(e);
    return adjacency_[e];
  }

  std::size_t degree(EntityId e) const { return neighbors(e).size(); }

  // Copy of this graph whose entity range covers at least `n` ids.
  KnowledgeGraph with_min_entities(std::size_t n) const {
    if (n <= entity_count_) return *this;
    return KnowledgeGraph(triples_, n, relation_count_);
  }

  void check_entity(EntityId e) const {
    if (e >= entity_count_) {
      throw DomainError("entity id " + std::to_string(e) + " out of range [0, " +
                        std::to_string(entity_count_) + ")");
    }
  }

 private:
  std::size_t entity_count_ = 0;
  std::size_t relation_count_ = 0;
  std::vector<Triple> triples_;
  std::vector<std::vector<Edge>> adjacency_;
};

// Parses "head<TAB>relation<TAB>tail" lines.
inline KnowledgeGraph load_triples(const std::string& path) {
  std::vector<Triple> triples;
  detail::for_each_line(path, [&](std::size_t line_no, std::string_view line) {
    auto fields = detail::split_tabs(line);
    if (fields.size() != 3) {
      throw ParseError(path, line_no, "expected 3 tab-separated fields, got " + std::to_string(fields.size()));
    }
    std::uint64_t v[3];
    for (int i = 0; i < 3; ++i) {
      if (!detail::parse_u64(fields[i], v[i]) || v[i] > 0xFFFFFFFEull) {
        throw ParseError(path, line_no, "field " + std::to_string(i + 1) + " is not a non-negative integer: '" +
                                            std::string(fields[i]) + "'");
      }
    }
    triples.push_back({static_cast<EntityId>(v[0]), static_cast<RelationId>(v[1]), static_cast<EntityId>(v[2])});
  });
  return KnowledgeGraph(std::move(triples));
}

inline void save_triples(const std::string& path, std::span<const Triple> triples) {
  auto out = detail::open_output(path);
  for (const Triple& t : triples) out << t.head << '\t' << t.relation << '\t' << t.tail << '\n';
  if (!out) throw IoError("write failure on '" + path + "'");
}

inline std::span<const Edge> neighbors(const KnowledgeGraph& g, EntityId e) { return g.neighbors(e); }

/// Fixed-width neighbor sample of `e`: without replacement when degree >= k,
/// with replacement when 0 < degree < k, and k self-loops when isolated.
inline std::vector<Edge> sample_neighbors(const KnowledgeGraph& g, EntityId e, std::size_t k, Rng& rng) {
  if (k == 0) throw DomainError("neighbor sample size must be >= 1");
  auto adj = g.neighbors(e);
  std::vector<Edge> out;
  out.reserve(k);
  if (adj.empty()) {
    out.assign(k, Edge{g.self_relation(), e});
  } else if (adj.size() >= k) {
    std::sample(adj.begin(), adj.end(), std::back_inserter(out), k, rng);
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, adj.size() - 1);
    for (std::size_t i = 0; i < k; ++i) out.push_back(adj[pick(rng)]);
  }
  return out;
}

}  // namespace attkgcn
