#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gstam/config.hpp"
#include "gstam/metrics.hpp"

namespace gstam::cli {

namespace fs = std::filesystem;

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitEvaluation = 4;
inline constexpr int kExitTraining = 5;

// Maps the exception currently being handled to an exit code.
int exit_code_for_current_exception();

std::string version_string();

// Writes the dataset to `out` and a manifest to `<out>.manifest.json`.
void cmd_gen(const RunConfig& cfg, std::uint64_t seed, const fs::path& out);

struct TrainPaths {
  fs::path data;
  std::optional<fs::path> validation;
  fs::path out_dir;
};

// out_dir/model.json, out_dir/train_log.csv and out_dir/manifest.json.
void cmd_train(const RunConfig& cfg, std::uint64_t seed, const TrainPaths& paths);

// Writes the report CSV to `out`, or to stdout when `out` is empty.
EvalReport cmd_eval(const fs::path& checkpoint, const fs::path& data, Subset subset, std::size_t segment,
                    const fs::path& out);

struct GridPaths {
  fs::path train;
  std::optional<fs::path> validation;
  fs::path test;
  fs::path out_dir;
};

// 6-cell {PTAM, STAM} x {none, sparsity, group} grid at cfg.train.lambda for
// every seed; out_dir/grid.csv, out_dir/summary.csv, out_dir/manifest.json.
// Returns the number of cells that failed.
std::size_t cmd_ablate(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds, const GridPaths& paths);

// STAM + group over `lambdas`; same outputs as cmd_ablate.
std::size_t cmd_sweep(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds, const std::vector<double>& lambdas,
                      const GridPaths& paths);

}  // namespace gstam::cli
