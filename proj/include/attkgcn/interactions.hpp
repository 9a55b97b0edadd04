#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "attkgcn/error.hpp"
#include "attkgcn/kg_store.hpp"
#include "attkgcn/text_io.hpp"

namespace attkgcn {

using UserId = std::uint32_t;
using ItemId = std::uint32_t;
using RawId = std::uint64_t;

struct Interaction {
  UserId user = 0;
  ItemId item = 0;
  int label = 1;

  friend bool operator==(const Interaction&, const Interaction&) = default;
};

/// Implicit-feedback interactions over densely indexed users and items.
///
/// Users and items are re-indexed in ascending order of their raw ids; the
/// raw ids are kept in user_raw / item_raw for output. Every item in the
/// item map is a candidate item, whether or not anyone rated it.
struct InteractionSet {
  std::vector<RawId> user_raw;
  std::vector<RawId> item_raw;
  std::vector<EntityId> item_to_entity;
  std::vector<Interaction> positives;
  // Sorted item ids per user over all positives, independent of the split.
  std::vector<std::vector<ItemId>> user_positives;

  std::vector<Interaction> train;
  std::vector<Interaction> validation;
  std::vector<Interaction> test;
  // Set by split() when fewer than 10 positives were available.
  bool small_split_warning = false;

  std::size_t user_count() const noexcept { return user_raw.size(); }
  std::size_t item_count() const noexcept { return item_raw.size(); }

  bool is_positive(UserId u, ItemId i) const {
    const auto& p = user_positives.at(u);
    return std::binary_search(p.begin(), p.end(), i);
  }

  // Train positives per user, sorted; used as the recommendation exclusion list.
  std::vector<std::vector<ItemId>> train_positives_by_user() const {
    std::vector<std::vector<ItemId>> out(user_count());
    for (const Interaction& x : train) out[x.user].push_back(x.item);
    for (auto& v : out) std::sort(v.begin(), v.end());
    return out;
  }
};

namespace detail {

template <typename Key>
std::vector<Key> sorted_keys(const std::set<Key>& s) {
  return std::vector<Key>(s.begin(), s.end());
}

template <typename Key>
std::uint32_t dense_index(const std::vector<Key>& sorted, Key k) {
  return static_cast<std::uint32_t>(std::lower_bound(sorted.begin(), sorted.end(), k) - sorted.begin());
}

}  // namespace detail

/// Loads "user<TAB>item<TAB>rating" and "item<TAB>entity" files. Every rated
/// pair becomes one positive regardless of the rating value.
inline InteractionSet load_interactions(const std::string& ratings_path, const std::string& item_map_path) {
  std::map<RawId, EntityId> item_map;
  detail::for_each_line(item_map_path, [&](std::size_t line_no, std::string_view line) {
    auto f = detail::split_tabs(line);
    if (f.size() != 2) throw ParseError(item_map_path, line_no, "expected 'item<TAB>entity'");
    std::uint64_t item = 0, entity = 0;
    if (!detail::parse_u64(f[0], item)) throw ParseError(item_map_path, line_no, "bad item id '" + std::string(f[0]) + "'");
    if (!detail::parse_u64(f[1], entity) || entity > 0xFFFFFFFEull) {
      throw ParseError(item_map_path, line_no, "bad entity id '" + std::string(f[1]) + "'");
    }
    auto [it, inserted] = item_map.emplace(item, static_cast<EntityId>(entity));
    if (!inserted && it->second != entity) {
      throw ValidationError(item_map_path + ":" + std::to_string(line_no) + ": item " + std::to_string(item) +
                            " mapped to two entities");
    }
  });

  std::set<std::pair<RawId, RawId>> pairs;
  std::set<RawId> users;
  detail::for_each_line(ratings_path, [&](std::size_t line_no, std::string_view line) {
    auto f = detail::split_tabs(line);
    if (f.size() != 3) throw ParseError(ratings_path, line_no, "expected 'user<TAB>item<TAB>rating'");
    std::uint64_t user = 0, item = 0;
    double rating = 0;
    if (!detail::parse_u64(f[0], user)) throw ParseError(ratings_path, line_no, "bad user id '" + std::string(f[0]) + "'");
    if (!detail::parse_u64(f[1], item)) throw ParseError(ratings_path, line_no, "bad item id '" + std::string(f[1]) + "'");
    if (!detail::parse_double(f[2], rating)) throw ParseError(ratings_path, line_no, "bad rating '" + std::string(f[2]) + "'");
    if (!item_map.contains(item)) {
      throw ValidationError(ratings_path + ":" + std::to_string(line_no) + ": item " + std::to_string(item) +
                            " is not in the item map");
    }
    users.insert(user);
    pairs.emplace(user, item);
  });

  InteractionSet s;
  s.user_raw = detail::sorted_keys(users);
  for (const auto& [item, entity] : item_map) {
    s.item_raw.push_back(item);
    s.item_to_entity.push_back(entity);
  }
  s.user_positives.resize(s.user_count());
  for (const auto& [u, i] : pairs) {
    Interaction x{detail::dense_index(s.user_raw, u), detail::dense_index(s.item_raw, i), 1};
    s.positives.push_back(x);
    s.user_positives[x.user].push_back(x.item);
  }
  return s;
}

/// Seeded 7:1:2 split of the positives: shuffle, then cut at floor(0.7n) and floor(0.8n).
inline InteractionSet split(InteractionSet s, std::uint64_t seed) {
  std::vector<Interaction> shuffled = s.positives;
  Rng rng(seed);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const std::size_t n = shuffled.size();
  const std::size_t cut_train = n * 7 / 10;
  const std::size_t cut_val = n * 8 / 10;
  s.train.assign(shuffled.begin(), shuffled.begin() + cut_train);
  s.validation.assign(shuffled.begin() + cut_train, shuffled.begin() + cut_val);
  s.test.assign(shuffled.begin() + cut_val, shuffled.end());
  s.small_split_warning = n < 10;
  return s;
}

/// The set as seen during training: held-out positives are dropped, so
/// training negatives may land on validation or test items.
inline InteractionSet training_view(const InteractionSet& s) {
  InteractionSet v;
  v.user_raw = s.user_raw;
  v.item_raw = s.item_raw;
  v.item_to_entity = s.item_to_entity;
  v.positives = s.train;
  v.train = s.train;
  v.user_positives = s.train_positives_by_user();
  return v;
}

/// Uniform draw from the items `user` has no positive for, in any split.
inline ItemId sample_negative(const InteractionSet& s, UserId user, Rng& rng) {
  const auto& pos = s.user_positives.at(user);
  if (pos.size() >= s.item_count()) {
    throw SamplingError("user " + std::to_string(user) + " has interacted with every item");
  }
  std::uniform_int_distribution<std::size_t> pick(0, s.item_count() - pos.size() - 1);
  std::size_t item = pick(rng);
  // Map the rank among non-positives to an item id by stepping over sorted positives.
  for (ItemId p : pos) {
    if (p <= item) ++item;
    else break;
  }
  return static_cast<ItemId>(item);
}

}  // namespace attkgcn
