#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "attkgcn/error.hpp"
#include "attkgcn/interactions.hpp"
#include "attkgcn/kg_store.hpp"
#include "attkgcn/text_io.hpp"

namespace attkgcn {

/// Shape of a synthetic dataset with planted categories. Relations
/// [0, relations - noise_relations) link same-category entities; the last
/// noise_relations relations link uniformly random entities.
struct SynthConfig {
  std::size_t users = 50;
  std::size_t items = 200;
  std::size_t extra_entities = 300;
  std::size_t relations = 6;
  std::size_t categories = 4;
  std::size_t triples_per_item = 4;
  std::size_t noise_relations = 2;
  std::size_t positives_per_user = 20;
  std::uint64_t seed = 1;

  std::size_t entities() const noexcept { return items + extra_entities; }

  void validate() const {
    if (categories < 1) throw ValidationError("categories must be >= 1");
    if (noise_relations > relations) throw ValidationError("noise_relations exceeds relations");
    if (triples_per_item > 0 && relations == 0) throw ValidationError("triples requested but relations = 0");
    if (triples_per_item > 0 && entities() < 2) throw ValidationError("triples need at least 2 entities");
    if (positives_per_user > items) {
      throw ValidationError("positives_per_user (" + std::to_string(positives_per_user) + ") exceeds items (" +
                            std::to_string(items) + ")");
    }
  }
};

// Planted-fixture shape used by the learning and ablation checks.
inline SynthConfig fixture_preset() { return SynthConfig{}; }

// Realistic scale for smoke tests: 51 users, 5210 items, 9982 entities,
// 14 relations, 26050 triples.
inline SynthConfig full_scale_preset() {
  SynthConfig c;
  c.users = 51;
  c.items = 5210;
  c.extra_entities = 9982 - 5210;
  c.relations = 14;
  c.noise_relations = 4;
  c.categories = 8;
  c.triples_per_item = 5;
  c.positives_per_user = 100;
  c.seed = 1;
  return c;
}

struct RatingRow {
  RawId user = 0;
  RawId item = 0;
  double rating = 0.0;
};

struct SynthDataset {
  std::vector<Triple> triples;
  std::vector<RatingRow> ratings;
  std::vector<EntityId> item_entity;        // item i -> entity
  std::vector<std::size_t> entity_category;  // per entity id
  std::vector<std::size_t> user_category;    // preferred category per user
};

inline SynthDataset generate(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  SynthDataset ds;
  const std::size_t n_ent = cfg.entities();
  const std::size_t C = cfg.categories;

  std::vector<EntityId> perm(n_ent);
  std::iota(perm.begin(), perm.end(), EntityId{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  ds.item_entity.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(cfg.items));

  ds.entity_category.assign(n_ent, 0);
  std::vector<std::vector<ItemId>> items_by_cat(C);
  std::vector<std::vector<EntityId>> extras_by_cat(C);
  for (std::size_t i = 0; i < cfg.items; ++i) {
    ds.entity_category[perm[i]] = i % C;
    items_by_cat[i % C].push_back(static_cast<ItemId>(i));
  }
  for (std::size_t j = 0; j < cfg.extra_entities; ++j) {
    const EntityId e = perm[cfg.items + j];
    ds.entity_category[e] = j % C;
    extras_by_cat[j % C].push_back(e);
  }
  for (auto& v : extras_by_cat) std::shuffle(v.begin(), v.end(), rng);

  // Informative tails cycle through the category's attribute entities so
  // that every attribute entity gets attached once enough triples exist.
  std::vector<std::size_t> cursor(C, 0);
  const std::size_t informative = cfg.relations - cfg.noise_relations;
  std::uniform_int_distribution<std::size_t> pick_rel(0, cfg.relations > 0 ? cfg.relations - 1 : 0);
  std::uniform_int_distribution<std::size_t> pick_ent(0, n_ent > 0 ? n_ent - 1 : 0);
  ds.triples.reserve(cfg.items * cfg.triples_per_item);
  for (std::size_t i = 0; i < cfg.items; ++i) {
    const EntityId head = ds.item_entity[i];
    const std::size_t cat = i % C;
    for (std::size_t t = 0; t < cfg.triples_per_item; ++t) {
      const auto r = static_cast<RelationId>(pick_rel(rng));
      EntityId tail = head;
      if (r < informative && !extras_by_cat[cat].empty()) {
        tail = extras_by_cat[cat][cursor[cat]++ % extras_by_cat[cat].size()];
      } else if (r < informative && items_by_cat[cat].size() > 1) {
        std::uniform_int_distribution<std::size_t> pick(0, items_by_cat[cat].size() - 1);
        while (tail == head) tail = ds.item_entity[items_by_cat[cat][pick(rng)]];
      } else {
        while (tail == head) tail = static_cast<EntityId>(pick_ent(rng));
      }
      ds.triples.push_back({head, r, tail});
    }
  }

  std::uniform_int_distribution<std::size_t> pick_cat(0, C - 1);
  std::uniform_int_distribution<int> pick_half_stars(2, 10);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  ds.user_category.resize(cfg.users);
  std::vector<char> taken(cfg.items);
  for (std::size_t u = 0; u < cfg.users; ++u) {
    const std::size_t pref = pick_cat(rng);
    ds.user_category[u] = pref;
    std::fill(taken.begin(), taken.end(), 0);
    std::vector<ItemId> pool_pref;
    for (ItemId i : items_by_cat[pref]) pool_pref.push_back(i);
    std::size_t pref_left = pool_pref.size();
    std::size_t any_left = cfg.items;
    for (std::size_t n = 0; n < cfg.positives_per_user; ++n) {
      ItemId item = 0;
      if (coin(rng) < 0.9 && pref_left > 0) {
        // draw among untaken preferred items
        std::uniform_int_distribution<std::size_t> pick(0, pref_left - 1);
        std::size_t idx = pick(rng);
        for (ItemId i : pool_pref) {
          if (taken[i]) continue;
          if (idx-- == 0) {
            item = i;
            break;
          }
        }
        --pref_left;
      } else {
        std::uniform_int_distribution<std::size_t> pick(0, any_left - 1);
        std::size_t idx = pick(rng);
        for (ItemId i = 0; i < cfg.items; ++i) {
          if (taken[i]) continue;
          if (idx-- == 0) {
            item = i;
            break;
          }
        }
        if (cfg.items > 0 && item % C == pref) --pref_left;
      }
      taken[item] = 1;
      --any_left;
      ds.ratings.push_back({u, item, 0.5 * pick_half_stars(rng)});
    }
  }
  return ds;
}

struct DatasetPaths {
  std::string kg;
  std::string ratings;
  std::string item_map;
  std::string ground_truth;

  static DatasetPaths in(const std::filesystem::path& dir) {
    return {(dir / "kg.tsv").string(), (dir / "ratings.tsv").string(), (dir / "item_map.tsv").string(),
            (dir / "ground_truth.tsv").string()};
  }
};

/// Writes kg.tsv, ratings.tsv, item_map.tsv and ground_truth.tsv into `dir`.
inline DatasetPaths write_dataset(const SynthDataset& ds, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
  DatasetPaths paths = DatasetPaths::in(dir);

  save_triples(paths.kg, ds.triples);
  {
    auto out = detail::open_output(paths.ratings);
    for (const auto& r : ds.ratings) out << r.user << '\t' << r.item << '\t' << detail::format_double(r.rating) << '\n';
    if (!out) throw IoError("write failure on '" + paths.ratings + "'");
  }
  {
    auto out = detail::open_output(paths.item_map);
    for (std::size_t i = 0; i < ds.item_entity.size(); ++i) out << i << '\t' << ds.item_entity[i] << '\n';
    if (!out) throw IoError("write failure on '" + paths.item_map + "'");
  }
  {
    auto out = detail::open_output(paths.ground_truth);
    for (std::size_t i = 0; i < ds.item_entity.size(); ++i) {
      out << "item\t" << i << '\t' << ds.entity_category[ds.item_entity[i]] << '\n';
    }
    for (std::size_t e = 0; e < ds.entity_category.size(); ++e) out << "entity\t" << e << '\t' << ds.entity_category[e] << '\n';
    for (std::size_t u = 0; u < ds.user_category.size(); ++u) out << "user\t" << u << '\t' << ds.user_category[u] << '\n';
    if (!out) throw IoError("write failure on '" + paths.ground_truth + "'");
  }
  return paths;
}

}  // namespace attkgcn
