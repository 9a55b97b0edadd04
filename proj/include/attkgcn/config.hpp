#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "attkgcn/error.hpp"
#include "attkgcn/model.hpp"
#include "attkgcn/synthgen.hpp"
#include "attkgcn/text_io.hpp"

namespace attkgcn {

/// Everything a command needs: model hyperparameters, file locations and
/// command-specific options. Every field has a concrete default.
struct RunConfig {
  HyperParams hp;
  std::uint64_t split_seed = 1;

  std::string kg;
  std::string ratings;
  std::string item_map;
  std::string checkpoint;
  std::string out = ".";

  // recommend
  RawId user = 0;
  std::size_t top_n = 10;

  // sweep
  std::string axis = "k";
  std::string values = "2,4,8,16,20,24,28";
  std::size_t seeds = 5;
  std::size_t jobs = 1;

  // gen
  std::string preset = "fixture";
  SynthConfig synth;
};

namespace detail {

struct ConfigKey {
  std::string name;
  std::function<bool(RunConfig&, std::string_view)> set;  // false on an unparsable value
  std::function<std::string(const RunConfig&)> get;
};

inline bool parse_size(std::string_view s, std::size_t& out) {
  std::uint64_t v = 0;
  if (!parse_u64(s, v)) return false;
  out = static_cast<std::size_t>(v);
  return true;
}

inline ConfigKey size_key(std::string name, std::size_t RunConfig::*outer) {
  return {std::move(name), [outer](RunConfig& c, std::string_view v) { return parse_size(v, c.*outer); },
          [outer](const RunConfig& c) { return std::to_string(c.*outer); }};
}

template <typename Get>
ConfigKey size_key_at(std::string name, Get get) {
  return {std::move(name), [get](RunConfig& c, std::string_view v) { return parse_size(v, get(c)); },
          [get](const RunConfig& c) { return std::to_string(get(const_cast<RunConfig&>(c))); }};
}

template <typename Get>
ConfigKey u64_key_at(std::string name, Get get) {
  return {std::move(name), [get](RunConfig& c, std::string_view v) { return parse_u64(v, get(c)); },
          [get](const RunConfig& c) { return std::to_string(get(const_cast<RunConfig&>(c))); }};
}

template <typename Get>
ConfigKey double_key_at(std::string name, Get get) {
  return {std::move(name), [get](RunConfig& c, std::string_view v) { return parse_double(v, get(c)); },
          [get](const RunConfig& c) { return format_double(get(const_cast<RunConfig&>(c))); }};
}

inline ConfigKey string_key(std::string name, std::string RunConfig::*field) {
  return {std::move(name),
          [field](RunConfig& c, std::string_view v) {
            c.*field = std::string(v);
            return true;
          },
          [field](const RunConfig& c) { return c.*field; }};
}

inline const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    k.push_back(size_key_at("k", [](RunConfig& c) -> std::size_t& { return c.hp.k; }));
    k.push_back(size_key_at("dim", [](RunConfig& c) -> std::size_t& { return c.hp.dim; }));
    k.push_back(size_key_at("depth", [](RunConfig& c) -> std::size_t& { return c.hp.depth; }));
    k.push_back(double_key_at("lr", [](RunConfig& c) -> double& { return c.hp.lr; }));
    k.push_back(double_key_at("l2", [](RunConfig& c) -> double& { return c.hp.l2; }));
    k.push_back(size_key_at("batch", [](RunConfig& c) -> std::size_t& { return c.hp.batch; }));
    k.push_back(size_key_at("epochs", [](RunConfig& c) -> std::size_t& { return c.hp.epochs; }));
    k.push_back({"aggregator",
                 [](RunConfig& c, std::string_view v) {
                   c.hp.aggregator = parse_aggregator(std::string(v));
                   return true;
                 },
                 [](const RunConfig& c) { return to_string(c.hp.aggregator); }});
    k.push_back({"attention",
                 [](RunConfig& c, std::string_view v) {
                   if (v == "on") c.hp.attention = true;
                   else if (v == "off") c.hp.attention = false;
                   else return false;
                   return true;
                 },
                 [](const RunConfig& c) { return std::string(c.hp.attention ? "on" : "off"); }});
    k.push_back(size_key_at("patience", [](RunConfig& c) -> std::size_t& { return c.hp.patience; }));
    k.push_back(u64_key_at("seed", [](RunConfig& c) -> std::uint64_t& { return c.hp.seed; }));
    k.push_back(u64_key_at("eval-seed", [](RunConfig& c) -> std::uint64_t& { return c.hp.eval_seed; }));
    k.push_back(u64_key_at("split-seed", [](RunConfig& c) -> std::uint64_t& { return c.split_seed; }));
    k.push_back(string_key("kg", &RunConfig::kg));
    k.push_back(string_key("ratings", &RunConfig::ratings));
    k.push_back(string_key("item-map", &RunConfig::item_map));
    k.push_back(string_key("checkpoint", &RunConfig::checkpoint));
    k.push_back(string_key("out", &RunConfig::out));
    k.push_back(u64_key_at("user", [](RunConfig& c) -> std::uint64_t& { return c.user; }));
    k.push_back(size_key("top-n", &RunConfig::top_n));
    k.push_back(string_key("axis", &RunConfig::axis));
    k.push_back(string_key("values", &RunConfig::values));
    k.push_back(size_key("seeds", &RunConfig::seeds));
    k.push_back(size_key("jobs", &RunConfig::jobs));
    k.push_back({"preset",
                 [](RunConfig& c, std::string_view v) {
                   if (v == "fixture") c.synth = fixture_preset();
                   else if (v == "full") c.synth = full_scale_preset();
                   else return false;
                   c.preset = std::string(v);
                   return true;
                 },
                 [](const RunConfig& c) { return c.preset; }});
    k.push_back(size_key_at("users", [](RunConfig& c) -> std::size_t& { return c.synth.users; }));
    k.push_back(size_key_at("items", [](RunConfig& c) -> std::size_t& { return c.synth.items; }));
    k.push_back(size_key_at("extra-entities", [](RunConfig& c) -> std::size_t& { return c.synth.extra_entities; }));
    k.push_back(size_key_at("relations", [](RunConfig& c) -> std::size_t& { return c.synth.relations; }));
    k.push_back(size_key_at("noise-relations", [](RunConfig& c) -> std::size_t& { return c.synth.noise_relations; }));
    k.push_back(size_key_at("categories", [](RunConfig& c) -> std::size_t& { return c.synth.categories; }));
    k.push_back(size_key_at("triples-per-item", [](RunConfig& c) -> std::size_t& { return c.synth.triples_per_item; }));
    k.push_back(
        size_key_at("positives-per-user", [](RunConfig& c) -> std::size_t& { return c.synth.positives_per_user; }));
    k.push_back(u64_key_at("gen-seed", [](RunConfig& c) -> std::uint64_t& { return c.synth.seed; }));
    return k;
  }();
  return keys;
}

inline std::string_view trim(std::string_view s) {
  const char* ws = " \t\r";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

}  // namespace detail

inline std::vector<std::string> config_key_names() {
  std::vector<std::string> out;
  for (const auto& k : detail::config_keys()) out.push_back(k.name);
  return out;
}

// "where" names the origin of a value for error messages, e.g. "run.cfg:3" or "--k".
inline void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value, const std::string& where) {
  for (const auto& k : detail::config_keys()) {
    if (k.name != key) continue;
    bool ok = false;
    try {
      ok = k.set(cfg, value);
    } catch (const DomainError& e) {
      throw ConfigError(where + ": bad value for '" + k.name + "': " + e.what());
    }
    if (!ok) throw ConfigError(where + ": bad value for '" + k.name + "': '" + std::string(value) + "'");
    return;
  }
  std::string valid;
  for (const auto& k : detail::config_keys()) valid += (valid.empty() ? "" : ", ") + k.name;
  throw ConfigError(where + ": unknown key '" + std::string(key) + "' (valid keys: " + valid + ")");
}

/// Builds a config from defaults, then `file_lines` ("key=value", '#' starts a
/// comment), then `overrides` in order. A later source wins.
inline RunConfig parse_config(const std::vector<std::string>& file_lines,
                              const std::vector<std::pair<std::string, std::string>>& overrides = {},
                              const std::string& source = "config") {
  RunConfig cfg;
  // The preset resets every generator field, so it goes first regardless of position.
  auto apply_presets = [&](auto&& each) {
    std::size_t line_no = 0;
    for (const auto& raw : file_lines) {
      ++line_no;
      std::string_view line = raw;
      if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw ConfigError(source + ":" + std::to_string(line_no) + ": expected 'key=value'");
      }
      each(detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)),
           source + ":" + std::to_string(line_no));
    }
    for (const auto& [key, value] : overrides) each(key, value, "--" + key);
  };
  apply_presets([&](std::string_view key, std::string_view value, const std::string& where) {
    if (key == "preset") set_config_value(cfg, key, value, where);
  });
  apply_presets([&](std::string_view key, std::string_view value, const std::string& where) {
    if (key != "preset") set_config_value(cfg, key, value, where);
  });
  return cfg;
}

inline RunConfig load_config(const std::string& path,
                             const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
  std::vector<std::string> lines;
  if (!path.empty()) {
    auto in = detail::open_input(path);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
  }
  return parse_config(lines, overrides, path.empty() ? "config" : path);
}

/// Every key with its resolved value, in a fixed order. parse_config on the
/// output reproduces `cfg` exactly.
inline void write_config(std::ostream& out, const RunConfig& cfg) {
  for (const auto& k : detail::config_keys()) out << k.name << '=' << k.get(cfg) << '\n';
}

inline std::string config_string(const RunConfig& cfg) {
  std::string s;
  for (const auto& k : detail::config_keys()) s += k.name + '=' + k.get(cfg) + '\n';
  return s;
}

}  // namespace attkgcn
