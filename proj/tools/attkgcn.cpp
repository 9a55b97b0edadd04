// attkgcn: generate data, train, evaluate, recommend and sweep.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "attkgcn.hpp"

namespace fs = std::filesystem;
using namespace attkgcn;

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kData = 3, kRuntime = 4 };

struct CommandArgs {
  std::string config_path;
  std::map<std::string, std::string> flags;
};

void add_config_flags(CLI::App* cmd, CommandArgs& args) {
  cmd->add_option("--config", args.config_path, "key=value config file");
  for (const auto& key : config_key_names()) {
    cmd->add_option_function<std::string>(
        "--" + key, [&args, key](const std::string& v) { args.flags[key] = v; }, "override '" + key + "'");
  }
}

RunConfig resolve(const CommandArgs& args) {
  std::vector<std::pair<std::string, std::string>> overrides(args.flags.begin(), args.flags.end());
  RunConfig cfg = load_config(args.config_path, overrides);
  try {
    cfg.hp.validate();
    cfg.synth.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = detail::open_output(path.string());
  out << text;
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

fs::path ensure_out_dir(const RunConfig& cfg) {
  fs::path dir(cfg.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
  return dir;
}

ModelParams load_model(const RunConfig& cfg, const Dataset& ds, const KnowledgeGraph& g) {
  if (cfg.checkpoint.empty()) throw ConfigError("a checkpoint path is required");
  Rng init = stream_rng(cfg.hp.seed, 0);
  ModelParams p(ds.data.user_count(), g.entity_count(), g.relation_table_size(), cfg.hp, init);
  auto in = detail::open_input(cfg.checkpoint);
  restore_checkpoint(p.store(), read_checkpoint(in, cfg.checkpoint));
  return p;
}

nlohmann::json metrics_json(const char* split, const SplitMetrics& m) {
  return {{"split", split},
          {"positives", m.positives},
          {"auc", optional_json(m.auc)},
          {"precision", m.cls.precision},
          {"recall", m.cls.recall},
          {"f1", m.cls.f1},
          {"accuracy", m.cls.accuracy}};
}

int cmd_gen(const RunConfig& cfg) {
  const fs::path dir = ensure_out_dir(cfg);
  SynthDataset ds = generate(cfg.synth);
  DatasetPaths paths = write_dataset(ds, dir);
  write_text(dir / "resolved.cfg", config_string(cfg));
  std::cout << "kg\t" << paths.kg << "\nratings\t" << paths.ratings << "\nitem-map\t" << paths.item_map
            << "\nground-truth\t" << paths.ground_truth << '\n';
  return kOk;
}

int cmd_train(RunConfig cfg) {
  const Dataset ds = load_dataset(cfg);
  if (ds.data.small_split_warning) std::cerr << "warning: fewer than 10 positives; splits may be empty\n";
  const fs::path dir = ensure_out_dir(cfg);
  TrainOptions opt;
  opt.on_epoch = [](const EpochRecord& r) {
    std::fprintf(stderr, "epoch %zu loss %.5f train_auc %.4f val_auc %.4f\n", r.epoch, r.train_loss,
                 r.train_auc.value_or(-1.0), r.val_auc.value_or(-1.0));
  };
  TrainResult res = train(cfg.hp, ds.graph, ds.data, opt);

  if (cfg.checkpoint.empty()) cfg.checkpoint = (dir / "checkpoint.txt").string();
  {
    auto out = detail::open_output(cfg.checkpoint);
    write_checkpoint(out, res.params.store());
    if (!out) throw IoError("write failure on '" + cfg.checkpoint + "'");
  }
  write_text(dir / "resolved.cfg", config_string(cfg));
  {
    auto out = detail::open_output((dir / "run_report.jsonl").string());
    write_run_report(out, res.report);
  }
  write_run_report(std::cout, res.report);
  return kOk;
}

int cmd_eval(const RunConfig& cfg) {
  const Dataset ds = load_dataset(cfg);
  const KnowledgeGraph g = graph_covering_items(ds.graph, ds.data);
  const ModelParams p = load_model(cfg, ds, g);
  const ModelContext ctx{g, p, cfg.hp, ds.data};
  const fs::path dir = ensure_out_dir(cfg);
  std::string lines;
  for (EvalSplit s : {EvalSplit::validation, EvalSplit::test}) {
    lines += metrics_json(to_string(s), evaluate_split(ctx, s)).dump() + '\n';
  }
  write_text(dir / "eval_report.jsonl", lines);
  write_text(dir / "resolved.cfg", config_string(cfg));
  std::cout << lines;
  return kOk;
}

int cmd_recommend(const RunConfig& cfg) {
  const Dataset ds = load_dataset(cfg);
  const auto& users = ds.data.user_raw;
  auto it = std::lower_bound(users.begin(), users.end(), cfg.user);
  if (it == users.end() || *it != cfg.user) throw ValidationError("unknown user " + std::to_string(cfg.user));
  const auto user = static_cast<UserId>(it - users.begin());
  const KnowledgeGraph g = graph_covering_items(ds.graph, ds.data);
  const ModelParams p = load_model(cfg, ds, g);
  const auto exclusion = ds.data.train_positives_by_user();
  const auto recs = topk_recommend(user, cfg.top_n, ModelContext{g, p, cfg.hp, ds.data}, exclusion[user]);
  std::size_t rank = 0;
  for (const auto& r : recs) {
    std::printf("%llu\t%zu\t%llu\t%.6f\n", static_cast<unsigned long long>(cfg.user), ++rank,
                static_cast<unsigned long long>(ds.data.item_raw[r.item]), r.probability);
  }
  return kOk;
}

int cmd_sweep(const RunConfig& cfg) {
  const Dataset ds = load_dataset(cfg);
  const fs::path dir = ensure_out_dir(cfg);
  SweepTable t = run_sweep(cfg.axis, split_csv(cfg.values), cfg, ds, cfg.seeds, cfg.jobs);
  std::ostringstream table;
  write_sweep_table(table, t);
  write_text(dir / "sweep.tsv", table.str());
  write_text(dir / "resolved.cfg", config_string(cfg));
  std::cout << table.str();
  for (const auto& row : t.rows) {
    for (const auto& e : row.errors) std::cerr << cfg.axis << "=" << row.value << " " << e << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-graph attention recommender"};
  app.require_subcommand(1);
  std::map<std::string, CommandArgs> args;
  std::map<std::string, CLI::App*> cmds;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"gen", "write a synthetic dataset to --out"},
      {"train", "train a model; writes checkpoint, run report and resolved config to --out"},
      {"eval", "evaluate a checkpoint on the validation and test splits"},
      {"recommend", "top-N items for --user from a checkpoint"},
      {"sweep", "train over --values of --axis and print a summary table"}};
  for (const auto& [name, help] : commands) {
    cmds[name] = app.add_subcommand(name, help);
    add_config_flags(cmds[name], args[name]);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    for (const auto& [name, cmd] : cmds) {
      if (!cmd->parsed()) continue;
      const RunConfig cfg = resolve(args[name]);
      if (name == "gen") return cmd_gen(cfg);
      if (name == "train") return cmd_train(cfg);
      if (name == "eval") return cmd_eval(cfg);
      if (name == "recommend") return cmd_recommend(cfg);
      if (name == "sweep") return cmd_sweep(cfg);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const ParseError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const IoError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const ValidationError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kRuntime;
}
