#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gstam/errors.hpp"
#include "gstam/experiment.hpp"

#ifndef GSTAM_VERSION
#define GSTAM_VERSION "unknown"
#endif

namespace gstam::cli {

using nlohmann::ordered_json;

int exit_code_for_current_exception() {
  try {
    throw;
  } catch (const ConfigError&) {
    return kExitConfig;
  } catch (const IoError&) {
    return kExitIo;
  } catch (const ParseError&) {
    return kExitIo;
  } catch (const LabelError&) {
    return kExitIo;
  } catch (const EvaluationError&) {
    return kExitEvaluation;
  } catch (const TrainingError&) {
    return kExitTraining;
  } catch (...) {
    return kExitFailure;
  }
}

std::string version_string() { return std::string("gstam ") + GSTAM_VERSION; }

namespace {

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void write_manifest(const fs::path& path, const std::string& command, const RunConfig& cfg, std::uint64_t seed,
                    const std::string& started, const std::vector<fs::path>& inputs,
                    const std::vector<fs::path>& artifacts) {
  ordered_json config = ordered_json::object();
  for (const auto& [key, value] : snapshot(cfg)) config[key] = value;
  ordered_json in = ordered_json::array();
  for (const auto& p : inputs) in.push_back(p.string());
  ordered_json out = ordered_json::array();
  for (const auto& p : artifacts) out.push_back(p.string());
  const ordered_json doc{{"command", command}, {"version", version_string()}, {"seed", seed},
                         {"started", started}, {"config", config},           {"inputs", in},
                         {"artifacts", out}};
  std::ofstream file = open_out(path);
  file << doc.dump(2) << '\n';
  if (!file) throw IoError("failed writing " + path.string());
}

std::string num(double v) { return format_double(v); }

// Learning rates are products like 3e-4 * 0.3; ten significant digits print
// them as written in a config instead of exposing the last-ulp residue.
std::string lr_text(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string opt_num(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

void check_layout(const std::vector<VideoSample>& data, const AttributeLayout& layout, const fs::path& path) {
  for (const VideoSample& v : data) {
    if (v.parts != layout.partition.size() || v.labels.size() != layout.branches.size()) {
      throw ConfigError(path.string() + ": sample " + std::to_string(v.id) + " has " + std::to_string(v.parts) +
                        " parts and " + std::to_string(v.labels.size()) + " labels, partition expects " +
                        std::to_string(layout.partition.size()) + " and " + std::to_string(layout.branches.size()));
    }
    for (std::size_t i = 0; i < v.labels.size(); ++i) {
      if (v.labels[i] >= layout.branches[i].classes) {
        throw LabelError(path.string() + ": sample " + std::to_string(v.id) + " label " + std::to_string(v.labels[i]) +
                         " out of range for attribute '" + layout.branches[i].name + "'");
      }
    }
  }
}

std::vector<VideoSample> load_checked(const fs::path& path, const AttributeLayout& layout) {
  auto data = load_dataset(path);
  if (data.empty()) throw IoError("dataset " + path.string() + " is empty");
  check_layout(data, layout, path);
  return data;
}

ModelConfig model_config(const RunConfig& cfg, const std::vector<VideoSample>& data, std::uint64_t seed) {
  ModelConfig mc = cfg.model;
  mc.feature_dim = data.front().frames.rows();
  mc.variant = cfg.train.attention;
  mc.seed = seed;
  return mc;
}

}  // namespace

void cmd_gen(const RunConfig& cfg, std::uint64_t seed, const fs::path& out) {
  const std::string started = utc_now();
  const auto data = generate_dataset(cfg.synth, seed);
  save_dataset(out, data);
  fs::path manifest = out;
  manifest += ".manifest.json";
  write_manifest(manifest, "gen", cfg, seed, started, {}, {out});
}

void cmd_train(const RunConfig& cfg, std::uint64_t seed, const TrainPaths& paths) {
  const std::string started = utc_now();
  const AttributeLayout& layout = cfg.synth.layout;
  const auto train = load_checked(paths.data, layout);
  std::vector<VideoSample> validation;
  if (paths.validation) validation = load_checked(*paths.validation, layout);

  TrainConfig tc = cfg.train;
  tc.seed = seed;
  MultiBranchModel model = make_model(model_config(cfg, train, seed), layout);
  const FitResult result = fit(model, train, tc, validation.empty() ? nullptr : &validation);

  ensure_dir(paths.out_dir);
  const fs::path checkpoint = paths.out_dir / "model.json";
  const fs::path log_path = paths.out_dir / "train_log.csv";
  save_checkpoint(checkpoint, model);
  {
    std::ofstream log = open_out(log_path);
    log << "epoch,lr,loss_class,loss_reg,val_avg_acc,val_avg_f1\n";
    for (const EpochLog& e : result.log) {
      log << e.epoch << ',' << lr_text(e.lr) << ',' << num(e.loss_class) << ',' << num(e.loss_reg) << ','
          << opt_num(e.val_avg_acc) << ',' << opt_num(e.val_avg_f1) << '\n';
    }
    if (!log) throw IoError("failed writing " + log_path.string());
  }
  std::vector<fs::path> inputs{paths.data};
  if (paths.validation) inputs.push_back(*paths.validation);
  write_manifest(paths.out_dir / "manifest.json", "train", cfg, seed, started, inputs, {checkpoint, log_path});
  if (result.excluded > 0) {
    std::cerr << "excluded " << result.excluded << " trajectories shorter than " << tc.segment << " frames\n";
  }
}

EvalReport cmd_eval(const fs::path& checkpoint, const fs::path& data, Subset subset, std::size_t segment,
                    const fs::path& out) {
  const MultiBranchModel model = load_checkpoint(checkpoint);
  const auto samples = load_checked(data, model.layout);
  EvalOptions opts;
  opts.segment = segment;
  const EvalReport report = evaluate(model, samples, subset, opts);
  if (out.empty()) {
    write_report_csv(std::cout, report);
  } else {
    std::ofstream file = open_out(out);
    write_report_csv(file, report);
    if (!file) throw IoError("failed writing " + out.string());
  }
  return report;
}

namespace {

struct CellStats {
  ArmSpec arm;
  std::vector<double> all_f1, occ_f1, occ_acc, sparsity;
};

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

std::string csv_field(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n') c = ';';
  return s;
}

std::size_t run_grid(const std::string& command, const RunConfig& cfg, const std::vector<std::uint64_t>& seeds,
                     const std::vector<ArmSpec>& arms, const GridPaths& paths) {
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  const std::string started = utc_now();
  ExperimentData data;
  data.layout = cfg.synth.layout;
  data.train = load_checked(paths.train, data.layout);
  data.test = load_checked(paths.test, data.layout);
  if (paths.validation) data.validation = load_checked(*paths.validation, data.layout);

  ensure_dir(paths.out_dir);
  const fs::path grid_path = paths.out_dir / "grid.csv";
  const fs::path summary_path = paths.out_dir / "summary.csv";
  std::ofstream grid = open_out(grid_path);
  grid << "attention,regularizer,lambda,seed,status,all_avg_acc,all_avg_f1,occ_avg_acc,occ_avg_f1,group_sparsity,"
          "best_epoch\n";

  std::vector<CellStats> cells;
  for (const ArmSpec& arm : arms) cells.push_back({arm, {}, {}, {}, {}});
  std::size_t failed = 0;
  for (std::uint64_t seed : seeds) {
    for (CellStats& cell : cells) {
      const ArmSpec& arm = cell.arm;
      grid << to_string(arm.attention) << ',' << to_string(arm.regularizer) << ',' << num(arm.lambda) << ',' << seed
           << ',';
      try {
        const ArmResult r = run_arm(data, model_config(cfg, data.train, seed), cfg.train, arm, seed);
        grid << "ok," << num(r.all.avg_accuracy) << ',' << num(r.all.avg_f1) << ','
             << (r.occluded ? num(r.occluded->avg_accuracy) : "") << ','
             << (r.occluded ? num(r.occluded->avg_f1) : "") << ',' << num(r.group_sparsity) << ','
             << (r.fit.best_epoch ? std::to_string(*r.fit.best_epoch) : "") << '\n';
        cell.all_f1.push_back(r.all.avg_f1);
        if (r.occluded) {
          cell.occ_f1.push_back(r.occluded->avg_f1);
          cell.occ_acc.push_back(r.occluded->avg_accuracy);
        }
        cell.sparsity.push_back(r.group_sparsity);
      } catch (const Error& e) {
        ++failed;
        grid << "error: " << csv_field(e.what()) << ",,,,,,\n";
        std::cerr << command << ": " << arm.label() << " seed " << seed << " failed: " << e.what() << '\n';
      }
      grid.flush();
    }
  }
  if (!grid) throw IoError("failed writing " + grid_path.string());

  std::ofstream summary = open_out(summary_path);
  summary << "attention,regularizer,lambda,runs,all_f1_mean,all_f1_std,occ_acc_mean,occ_acc_std,occ_f1_mean,"
             "occ_f1_std,group_sparsity_mean,group_sparsity_std\n";
  for (const CellStats& cell : cells) {
    const auto [af, afs] = mean_std(cell.all_f1);
    const auto [oa, oas] = mean_std(cell.occ_acc);
    const auto [of, ofs] = mean_std(cell.occ_f1);
    const auto [gs, gss] = mean_std(cell.sparsity);
    summary << to_string(cell.arm.attention) << ',' << to_string(cell.arm.regularizer) << ',' << num(cell.arm.lambda)
            << ',' << cell.all_f1.size() << ',' << num(af) << ',' << num(afs) << ',' << num(oa) << ',' << num(oas)
            << ',' << num(of) << ',' << num(ofs) << ',' << num(gs) << ',' << num(gss) << '\n';
  }
  if (!summary) throw IoError("failed writing " + summary_path.string());

  std::vector<fs::path> inputs{paths.train, paths.test};
  if (paths.validation) inputs.push_back(*paths.validation);
  write_manifest(paths.out_dir / "manifest.json", command, cfg, seeds.front(), started, inputs,
                 {grid_path, summary_path});
  return failed;
}

}  // namespace

std::size_t cmd_ablate(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds, const GridPaths& paths) {
  return run_grid("ablate", cfg, seeds, ablation_grid(cfg.train.lambda), paths);
}

std::size_t cmd_sweep(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds, const std::vector<double>& lambdas,
                      const GridPaths& paths) {
  if (lambdas.empty()) throw ConfigError("the sweep needs at least one lambda");
  for (double l : lambdas)
    if (!(l >= 0.0)) throw ConfigError("sweep lambda must be non-negative, got " + num(l));
  return run_grid("sweep", cfg, seeds, lambda_sweep(lambdas), paths);
}

}  // namespace gstam::cli
