#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "attkgcn/config.hpp"
#include "attkgcn/error.hpp"
#include "attkgcn/interactions.hpp"
#include "attkgcn/kg_store.hpp"
#include "attkgcn/training.hpp"

namespace attkgcn {

struct Dataset {
  KnowledgeGraph graph;
  InteractionSet data;  // already split
};

inline Dataset load_dataset(const RunConfig& cfg) {
  if (cfg.kg.empty() || cfg.ratings.empty() || cfg.item_map.empty()) {
    throw ConfigError("kg, ratings and item-map paths are required");
  }
  Dataset ds;
  ds.graph = load_triples(cfg.kg);
  ds.data = split(load_interactions(cfg.ratings, cfg.item_map), cfg.split_seed);
  return ds;
}

inline std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t end = s.find(',', start);
    if (end == std::string::npos) end = s.size();
    auto item = detail::trim(std::string_view(s).substr(start, end - start));
    if (!item.empty()) out.emplace_back(item);
    start = end + 1;
  }
  return out;
}

// Config key varied by a sweep axis; throws ConfigError for an unknown axis.
inline std::string sweep_axis_key(const std::string& axis) {
  if (axis == "k") return "k";
  if (axis == "d" || axis == "dim") return "dim";
  if (axis == "h" || axis == "depth") return "depth";
  if (axis == "aggregator") return "aggregator";
  if (axis == "attention") return "attention";
  throw ConfigError("unknown sweep axis '" + axis + "' (valid: k, d, h, aggregator, attention)");
}

struct SweepRun {
  std::size_t cell = 0;
  std::uint64_t seed = 0;
  std::optional<double> val_auc;  // best validation AUC of the run
  std::optional<double> test_auc;
  double test_f1 = 0.0;
  std::string error;  // empty on success
};

struct Summary {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation, 0 for a single value
  std::size_t n = 0;
};

inline Summary summarize(const std::vector<double>& xs) {
  Summary s;
  s.n = xs.size();
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

struct SweepRow {
  std::string value;
  Summary val_auc;
  Summary test_auc;
  Summary test_f1;
  std::size_t failures = 0;
  std::vector<std::string> errors;
};

struct SweepTable {
  std::string axis;
  std::size_t seeds = 0;
  std::vector<SweepRow> rows;
  std::vector<SweepRun> runs;  // cell-major, seed-minor
};

/// One training run per (value, seed) with seeds base.hp.seed + 0..seeds-1 on
/// a fixed data split. Cells run on up to `jobs` threads; rows keep the
/// order of `values`. A failed run is counted in its row, not rethrown.
inline SweepTable run_sweep(const std::string& axis, const std::vector<std::string>& values, const RunConfig& base,
                            const Dataset& ds, std::size_t seeds, std::size_t jobs = 1) {
  const std::string key = sweep_axis_key(axis);
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  if (seeds == 0) throw ConfigError("seeds must be >= 1");

  std::vector<HyperParams> cell_hp;
  for (const auto& v : values) {
    RunConfig c = base;
    set_config_value(c, key, v, "--values");
    try {
      c.hp.validate();
    } catch (const DomainError& e) {
      throw ConfigError("--values: " + std::string(e.what()));
    }
    cell_hp.push_back(c.hp);
  }

  SweepTable table;
  table.axis = axis;
  table.seeds = seeds;
  table.runs.resize(values.size() * seeds);
  for (std::size_t c = 0; c < values.size(); ++c) {
    for (std::size_t s = 0; s < seeds; ++s) {
      auto& r = table.runs[c * seeds + s];
      r.cell = c;
      r.seed = base.hp.seed + s;
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < table.runs.size(); i = next++) {
      SweepRun& r = table.runs[i];
      HyperParams hp = cell_hp[r.cell];
      hp.seed = r.seed;
      try {
        TrainResult res = train(hp, ds.graph, ds.data);
        r.val_auc = res.report.best_val_auc();
        r.test_auc = res.report.final.test_auc;
        r.test_f1 = res.report.final.test_f1;
        if (!r.val_auc || !r.test_auc) r.error = "AUC undefined";
      } catch (const std::exception& e) {
        r.error = e.what();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(jobs, 1, table.runs.size());
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (std::size_t c = 0; c < values.size(); ++c) {
    SweepRow row;
    row.value = values[c];
    std::vector<double> va, ta, tf;
    for (std::size_t s = 0; s < seeds; ++s) {
      const SweepRun& r = table.runs[c * seeds + s];
      if (!r.error.empty()) {
        ++row.failures;
        row.errors.push_back("seed " + std::to_string(r.seed) + ": " + r.error);
        continue;
      }
      va.push_back(*r.val_auc);
      ta.push_back(*r.test_auc);
      tf.push_back(r.test_f1);
    }
    row.val_auc = summarize(va);
    row.test_auc = summarize(ta);
    row.test_f1 = summarize(tf);
    table.rows.push_back(std::move(row));
  }
  return table;
}

inline void write_sweep_table(std::ostream& out, const SweepTable& t) {
  out << t.axis << "\tseeds\tval_auc_mean\tval_auc_sd\ttest_auc_mean\ttest_auc_sd\ttest_f1_mean\ttest_f1_sd\tfailures\n";
  char buf[64];
  auto num = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.4f", x);
    return std::string(buf);
  };
  for (const auto& r : t.rows) {
    out << r.value << '\t' << r.test_auc.n << '\t' << num(r.val_auc.mean) << '\t' << num(r.val_auc.sd) << '\t'
        << num(r.test_auc.mean) << '\t' << num(r.test_auc.sd) << '\t' << num(r.test_f1.mean) << '\t'
        << num(r.test_f1.sd) << '\t' << r.failures << '\n';
  }
}

}  // namespace attkgcn
