#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gstam/model.hpp"
#include "gstam/synthdata.hpp"
#include "gstam/trainer.hpp"

namespace gstam {

// Everything a command needs, addressable through flat dotted keys such as
// train.lr0 or synth.p_occ.
struct RunConfig {
  std::string partition = "synthetic";  // builtin name or partition file
  SynthConfig synth;
  ModelConfig model;
  TrainConfig train = TrainConfig::desk();
  std::optional<std::uint64_t> seed;
};

using Setting = std::pair<std::string, std::string>;

// `key = value` lines; blank lines and '#' comments are skipped. Throws
// ConfigError naming the line for anything else.
std::vector<Setting> parse_settings(std::string_view text);
std::vector<Setting> load_settings(const std::filesystem::path& path);

// Throws ConfigError naming the key when it is unknown or its value does not
// parse. Setting "partition" reloads synth.layout.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);
void apply_settings(RunConfig& cfg, const std::vector<Setting>& settings);

// Every key with its current value, in a fixed order; applying the snapshot
// to a default RunConfig reproduces `cfg`.
std::vector<Setting> snapshot(const RunConfig& cfg);
std::vector<std::string> known_keys();

// --seed, then the "seed" key, then GSTAM_SEED, then 1.
std::uint64_t resolve_seed(const RunConfig& cfg, std::optional<std::uint64_t> flag);

// Round-trip text form of a double.
std::string format_double(double v);

}  // namespace gstam
