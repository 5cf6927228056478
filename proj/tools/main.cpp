#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "gstam/errors.hpp"

namespace {

using namespace gstam;
namespace fs = std::filesystem;

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  bool paper = false;
  // Named flags, stored as config settings so they share validation.
  std::vector<Setting> flags;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "flat key = value config file");
  cmd->add_option("--set", c.sets, "override one config key (key=value), repeatable");
  cmd->add_option("--seed", c.seed, "global seed (falls back to the seed key, then GSTAM_SEED)");
  cmd->add_flag("--paper", c.paper, "start from the paper-scale training schedule instead of the desk one");
}

// Registers --flag mapped to config key `key`.
void add_keyed(CLI::App* cmd, Common& c, const std::string& flag, const std::string& key, const std::string& help) {
  cmd->add_option_function<std::string>(
      flag, [&c, key](const std::string& v) { c.flags.emplace_back(key, v); }, help + " (" + key + ")");
}

RunConfig build_config(const Common& c) {
  RunConfig cfg;
  if (c.paper) cfg.train = TrainConfig::paper();
  if (!c.config.empty()) apply_settings(cfg, load_settings(c.config));
  for (const std::string& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  for (const auto& [key, value] : c.flags) apply_setting(cfg, key, value);
  cfg.synth.validate();
  cfg.train.validate();
  return cfg;
}

std::vector<std::uint64_t> seed_list(std::uint64_t base, std::size_t count) {
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(base + i);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Group-sparse temporal attention for multi-branch attribute classification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", cli::version_string());

  Common gen_c, train_c, ablate_c, sweep_c;

  auto* gen = app.add_subcommand("gen", "generate a synthetic occlusion dataset");
  add_common(gen, gen_c);
  std::string gen_out;
  gen->add_option("--out", gen_out, "dataset file")->required();
  add_keyed(gen, gen_c, "--n-videos", "synth.n_videos", "number of videos");
  add_keyed(gen, gen_c, "--frames", "synth.frames", "frames per video");
  add_keyed(gen, gen_c, "--p-occ", "synth.p_occ", "per-part occlusion rate");
  add_keyed(gen, gen_c, "--persistence", "synth.persistence", "stay-occluded probability");
  add_keyed(gen, gen_c, "--noise-sigma", "synth.noise_sigma", "visible-frame noise");
  add_keyed(gen, gen_c, "--partition", "partition", "builtin partition or partition file");

  auto* train = app.add_subcommand("train", "train one model and write a checkpoint and a log");
  add_common(train, train_c);
  cli::TrainPaths train_paths;
  std::string train_val;
  train->add_option("--data", train_paths.data, "training dataset")->required();
  train->add_option("--val", train_val, "validation dataset for periodic evaluation");
  train->add_option("--out-dir", train_paths.out_dir, "output directory")->required();
  add_keyed(train, train_c, "--attention", "train.attention", "ptam or stam");
  add_keyed(train, train_c, "--regularizer", "train.regularizer", "none, sparsity or group");
  add_keyed(train, train_c, "--lambda", "train.lambda", "regularizer weight");
  add_keyed(train, train_c, "--epochs", "train.epochs", "epochs");
  add_keyed(train, train_c, "--lr0", "train.lr0", "initial learning rate");
  add_keyed(train, train_c, "--batch", "train.batch", "batch size");
  add_keyed(train, train_c, "--partition", "partition", "builtin partition or partition file");

  auto* eval = app.add_subcommand("eval", "score a checkpoint on a dataset");
  std::string eval_checkpoint, eval_data, eval_subset = "all", eval_out;
  std::size_t eval_segment = 6;
  eval->add_option("--checkpoint", eval_checkpoint, "model checkpoint")->required();
  eval->add_option("--data", eval_data, "dataset")->required();
  eval->add_option("--subset", eval_subset, "all, occluded or visible");
  eval->add_option("--segment", eval_segment, "window length T");
  eval->add_option("--out", eval_out, "report CSV (stdout when omitted)");

  cli::GridPaths ablate_paths, sweep_paths;
  std::string ablate_val, sweep_val;
  std::size_t ablate_seeds = 3, sweep_seeds = 3;
  auto add_grid = [](CLI::App* cmd, Common& c, cli::GridPaths& p, std::string& val, std::size_t& seeds) {
    add_common(cmd, c);
    cmd->add_option("--train", p.train, "training dataset")->required();
    cmd->add_option("--val", val, "validation dataset");
    cmd->add_option("--test", p.test, "evaluation dataset")->required();
    cmd->add_option("--out-dir", p.out_dir, "output directory")->required();
    cmd->add_option("--seeds", seeds, "number of consecutive seeds starting at the global seed");
    add_keyed(cmd, c, "--epochs", "train.epochs", "epochs");
    add_keyed(cmd, c, "--batch", "train.batch", "batch size");
    add_keyed(cmd, c, "--lr0", "train.lr0", "initial learning rate");
    add_keyed(cmd, c, "--partition", "partition", "builtin partition or partition file");
  };
  auto* ablate = app.add_subcommand("ablate", "{PTAM, STAM} x {none, sparsity, group} grid");
  add_grid(ablate, ablate_c, ablate_paths, ablate_val, ablate_seeds);
  add_keyed(ablate, ablate_c, "--lambda", "train.lambda", "weight of the regularized cells");
  auto* sweep = app.add_subcommand("sweep", "STAM + group over several lambda values");
  add_grid(sweep, sweep_c, sweep_paths, sweep_val, sweep_seeds);
  std::vector<double> lambdas{0.005, 0.02, 0.03};
  sweep->add_option("--lambdas", lambdas, "lambda values")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitConfig;
  }

  try {
    if (*gen) {
      const RunConfig cfg = build_config(gen_c);
      cli::cmd_gen(cfg, resolve_seed(cfg, gen_c.seed), gen_out);
    } else if (*train) {
      const RunConfig cfg = build_config(train_c);
      if (!train_val.empty()) train_paths.validation = fs::path(train_val);
      cli::cmd_train(cfg, resolve_seed(cfg, train_c.seed), train_paths);
    } else if (*eval) {
      cli::cmd_eval(eval_checkpoint, eval_data, parse_subset(eval_subset), eval_segment, eval_out);
    } else if (*ablate) {
      const RunConfig cfg = build_config(ablate_c);
      if (!ablate_val.empty()) ablate_paths.validation = fs::path(ablate_val);
      const auto failed =
          cli::cmd_ablate(cfg, seed_list(resolve_seed(cfg, ablate_c.seed), ablate_seeds), ablate_paths);
      if (failed > 0) return cli::kExitTraining;
    } else if (*sweep) {
      const RunConfig cfg = build_config(sweep_c);
      if (!sweep_val.empty()) sweep_paths.validation = fs::path(sweep_val);
      const auto failed =
          cli::cmd_sweep(cfg, seed_list(resolve_seed(cfg, sweep_c.seed), sweep_seeds), lambdas, sweep_paths);
      if (failed > 0) return cli::kExitTraining;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::exit_code_for_current_exception();
  }
  return cli::kExitOk;
}
