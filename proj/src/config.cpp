#include "gstam/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "gstam/errors.hpp"

namespace gstam {

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  throw ConfigError("invalid value '" + value + "' for key '" + key + "' (expected " + expected + ")");
}

double to_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) bad_value(key, value, "a number");
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) bad_value(key, value, "a non-negative integer");
  return out;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value, "true or false");
}

struct Field {
  const char* key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
};

#define GSTAM_DOUBLE(name, member)                                                           \
  Field {                                                                                    \
    name, [](const RunConfig& c) { return format_double(c.member); },                        \
        [](RunConfig& c, const std::string& k, const std::string& v) { c.member = to_double(k, v); } \
  }
#define GSTAM_UINT(name, member)                                                                       \
  Field {                                                                                              \
    name, [](const RunConfig& c) { return std::to_string(c.member); },                                 \
        [](RunConfig& c, const std::string& k, const std::string& v) {                                 \
          c.member = static_cast<decltype(c.member)>(to_uint(k, v));                                   \
        }                                                                                              \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      Field{"partition", [](const RunConfig& c) { return c.partition; },
            [](RunConfig& c, const std::string& k, const std::string& v) {
              if (v.empty()) bad_value(k, v, "a builtin partition name or a partition file");
              c.partition = v;
              const bool builtin = v == "duke" || v == "mars" || v == "synthetic";
              c.synth.layout = builtin ? builtin_partitions(v) : load_partition(v);
            }},
      GSTAM_UINT("synth.dim_per_part", synth.dim_per_part),
      GSTAM_UINT("synth.frames", synth.frames),
      GSTAM_DOUBLE("synth.p_occ", synth.p_occ),
      GSTAM_DOUBLE("synth.persistence", synth.persistence),
      GSTAM_DOUBLE("synth.noise_sigma", synth.noise_sigma),
      GSTAM_DOUBLE("synth.codeword_scale", synth.codeword_scale),
      GSTAM_DOUBLE("synth.occluder_shift", synth.occluder_shift),
      GSTAM_DOUBLE("synth.occluder_sigma", synth.occluder_sigma),
      GSTAM_UINT("synth.codebook_seed", synth.codebook_seed),
      GSTAM_UINT("synth.n_videos", synth.n_videos),
      GSTAM_UINT("model.hidden", model.hidden),
      GSTAM_UINT("model.k1", model.k1),
      GSTAM_UINT("model.k2", model.k2),
      Field{"model.trunk", [](const RunConfig& c) { return std::string(c.model.trunk == TrunkKind::conv ? "conv" : "identity"); },
            [](RunConfig& c, const std::string& k, const std::string& v) {
              if (v == "conv") {
                c.model.trunk = TrunkKind::conv;
              } else if (v == "identity") {
                c.model.trunk = TrunkKind::identity;
              } else {
                bad_value(k, v, "identity or conv");
              }
            }},
      GSTAM_UINT("model.trunk_k", model.trunk_k),
      GSTAM_DOUBLE("train.lr0", train.lr0),
      GSTAM_DOUBLE("train.lr_decay", train.lr_decay),
      GSTAM_UINT("train.decay_epoch", train.decay_epoch),
      GSTAM_DOUBLE("train.weight_decay", train.weight_decay),
      GSTAM_DOUBLE("train.lambda", train.lambda),
      GSTAM_UINT("train.batch", train.batch),
      GSTAM_UINT("train.epochs", train.epochs),
      GSTAM_UINT("train.segment", train.segment),
      Field{"train.regularizer", [](const RunConfig& c) { return to_string(c.train.regularizer); },
            [](RunConfig& c, const std::string& k, const std::string& v) {
              try {
                c.train.regularizer = parse_regularizer(v);
              } catch (const ConfigError&) {
                bad_value(k, v, "none, sparsity or group");
              }
            }},
      Field{"train.attention", [](const RunConfig& c) { return to_string(c.train.attention); },
            [](RunConfig& c, const std::string& k, const std::string& v) {
              try {
                c.train.attention = parse_attention_variant(v);
              } catch (const ConfigError&) {
                bad_value(k, v, "ptam or stam");
              }
            }},
      GSTAM_UINT("train.eval_every", train.eval_every),
      Field{"train.select_best", [](const RunConfig& c) { return std::string(c.train.select_best ? "true" : "false"); },
            [](RunConfig& c, const std::string& k, const std::string& v) { c.train.select_best = to_bool(k, v); }},
      GSTAM_DOUBLE("train.adam_beta1", train.adam.beta1),
      GSTAM_DOUBLE("train.adam_beta2", train.adam.beta2),
      GSTAM_DOUBLE("train.adam_eps", train.adam.eps),
      Field{"seed", [](const RunConfig& c) { return c.seed ? std::to_string(*c.seed) : std::string(); },
            [](RunConfig& c, const std::string& k, const std::string& v) { c.seed = to_uint(k, v); }},
  };
  return table;
}

#undef GSTAM_DOUBLE
#undef GSTAM_UINT

}  // namespace

std::vector<Setting> parse_settings(std::string_view text) {
  std::vector<Setting> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value', got '" + content + "'");
    }
    std::string key = trim(std::string_view(content).substr(0, eq));
    std::string value = trim(std::string_view(content).substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

std::vector<Setting> load_settings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_settings(text.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const Field& f : fields()) {
    if (key == f.key) {
      f.set(cfg, key, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

void apply_settings(RunConfig& cfg, const std::vector<Setting>& settings) {
  for (const auto& [key, value] : settings) apply_setting(cfg, key, value);
}

std::vector<Setting> snapshot(const RunConfig& cfg) {
  std::vector<Setting> out;
  for (const Field& f : fields()) {
    std::string value = f.get(cfg);
    if (value.empty()) continue;
    out.emplace_back(f.key, std::move(value));
  }
  return out;
}

std::vector<std::string> known_keys() {
  std::vector<std::string> out;
  for (const Field& f : fields()) out.emplace_back(f.key);
  return out;
}

std::uint64_t resolve_seed(const RunConfig& cfg, std::optional<std::uint64_t> flag) {
  if (flag) return *flag;
  if (cfg.seed) return *cfg.seed;
  if (const char* env = std::getenv("GSTAM_SEED"); env != nullptr && *env != '\0') {
    return to_uint("GSTAM_SEED", env);
  }
  return 1;
}

}  // namespace gstam
