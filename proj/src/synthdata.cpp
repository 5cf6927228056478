#include "gstam/synthdata.hpp"

#include <algorithm>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "gstam/errors.hpp"

namespace gstam {

using nlohmann::json;

void SynthConfig::validate() const {
  layout.validate();
  if (!(p_occ >= 0.0 && p_occ <= 1.0)) throw ConfigError("synth.p_occ must lie in [0, 1]");
  if (!(persistence >= 0.0 && persistence < 1.0)) throw ConfigError("synth.persistence must lie in [0, 1)");
  if (dim_per_part == 0) throw ConfigError("synth.dim_per_part must be at least 1");
  if (frames == 0) throw ConfigError("synth.frames must be at least 1");
  if (!(noise_sigma >= 0.0) || !(occluder_sigma >= 0.0)) throw ConfigError("synth noise levels must be non-negative");
}

OcclusionChain occlusion_chain(double p_occ, double persistence) {
  OcclusionChain c;
  c.stationary = p_occ;
  if (p_occ <= 0.0) return c;
  if (p_occ >= 1.0) {
    c.enter = 1.0;
    c.stay = 1.0;
    return c;
  }
  c.stay = persistence;
  c.enter = p_occ * (1.0 - persistence) / (1.0 - p_occ);
  if (c.enter > 1.0) {
    c.enter = 1.0;
    c.stay = 1.0 - (1.0 - p_occ) / p_occ;
  }
  return c;
}

Codebook make_codebook(const SynthConfig& cfg) {
  std::mt19937_64 rng(cfg.codebook_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Codebook book;
  for (const BranchSpec& spec : cfg.layout.branches) {
    Tensor words(spec.classes, cfg.dim_per_part);
    for (double& v : words.values()) v = cfg.codeword_scale * normal(rng);
    book.codewords.push_back(std::move(words));
  }
  for (std::size_t k = 0; k < cfg.parts(); ++k) {
    Tensor occ = Tensor::vector(cfg.dim_per_part);
    for (double& v : occ.values()) v = cfg.occluder_shift * normal(rng);
    book.occluders.push_back(std::move(occ));
  }
  return book;
}

bool VideoSample::is_occluded() const {
  return std::any_of(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; });
}

std::uint64_t video_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer over the combined key
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + index + 0x632BE59BD9B4E019ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

VideoSample generate_video(const SynthConfig& cfg, const Codebook& codebook, std::uint64_t seed,
                           std::uint64_t id) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto& layout = cfg.layout;
  const std::size_t parts = cfg.parts();
  const std::size_t dpp = cfg.dim_per_part;
  const std::size_t len = cfg.frames;

  VideoSample v;
  v.id = id;
  v.parts = parts;
  for (const BranchSpec& spec : layout.branches) {
    std::uniform_int_distribution<std::size_t> pick(0, spec.classes - 1);
    v.labels.push_back(pick(rng));
  }

  const OcclusionChain chain = occlusion_chain(cfg.p_occ, cfg.persistence);
  v.mask.assign(parts * len, 0);
  for (std::size_t k = 0; k < parts; ++k) {
    bool occluded = unit(rng) < chain.stationary;
    for (std::size_t t = 0; t < len; ++t) {
      if (t > 0) occluded = unit(rng) < (occluded ? chain.stay : chain.enter);
      v.mask[k * len + t] = occluded ? 1 : 0;
    }
  }

  v.frames = Tensor(cfg.feature_dim(), len);
  for (std::size_t k = 0; k < parts; ++k) {
    const auto& members = layout.partition.groups[k].members;
    for (std::size_t t = 0; t < len; ++t) {
      const bool occluded = v.mask[k * len + t] != 0;
      for (std::size_t j = 0; j < dpp; ++j) {
        double x = 0.0;
        if (occluded) {
          x = codebook.occluders[k][j] + cfg.occluder_sigma * normal(rng);
        } else {
          for (std::size_t m : members) x += codebook.codewords[m](v.labels[m], j);
          x += cfg.noise_sigma * normal(rng);
        }
        v.frames(k * dpp + j, t) = x;
      }
    }
  }
  return v;
}

std::vector<VideoSample> generate_dataset(const SynthConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const Codebook codebook = make_codebook(cfg);
  std::vector<VideoSample> out;
  out.reserve(cfg.n_videos);
  for (std::size_t i = 0; i < cfg.n_videos; ++i) {
    out.push_back(generate_video(cfg, codebook, video_seed(seed, i), i));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json encode_mask(const VideoSample& v) {
  json rows = json::array();
  const std::size_t len = v.length();
  for (std::size_t k = 0; k < v.parts; ++k) {
    json runs = json::array();
    std::uint8_t state = 0;
    std::size_t run = 0;
    for (std::size_t t = 0; t < len; ++t) {
      const std::uint8_t m = v.mask[k * len + t];
      if (m != state) {
        runs.push_back(run);
        state = m;
        run = 0;
      }
      ++run;
    }
    runs.push_back(run);
    rows.push_back(std::move(runs));
  }
  return rows;
}

VideoSample decode_record(const json& j) {
  VideoSample v;
  v.id = j.at("id").get<std::uint64_t>();
  const auto shape = j.at("shape").get<std::vector<std::size_t>>();
  if (shape.size() != 2) throw ParseError("shape must have two entries");
  v.frames = Tensor(shape[0], shape[1], j.at("features").get<std::vector<double>>());
  v.labels = j.at("labels").get<std::vector<std::size_t>>();
  const auto& rows = j.at("mask");
  v.parts = rows.size();
  const std::size_t len = shape[1];
  v.mask.reserve(v.parts * len);
  for (const auto& runs : rows) {
    std::uint8_t state = 0;
    std::size_t filled = 0;
    for (const auto& r : runs) {
      const auto n = r.get<std::size_t>();
      if (filled + n > len) throw ParseError("mask runs exceed the frame count");
      v.mask.insert(v.mask.end(), n, state);
      filled += n;
      state ^= 1;
    }
    if (filled != len) throw ParseError("mask runs cover " + std::to_string(filled) + " of " + std::to_string(len) + " frames");
  }
  return v;
}

}  // namespace

void save_dataset(const std::filesystem::path& path, const std::vector<VideoSample>& samples) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write dataset " + path.string());
  for (const VideoSample& v : samples) {
    const json record{{"id", v.id},
                      {"shape", {v.frames.rows(), v.frames.cols()}},
                      {"features", v.frames.data()},
                      {"labels", v.labels},
                      {"mask", encode_mask(v)}};
    out << record.dump() << '\n';
  }
  if (!out) throw IoError("failed writing dataset " + path.string());
}

std::vector<VideoSample> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset " + path.string());
  std::vector<VideoSample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(decode_record(json::parse(line)));
    } catch (const std::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": malformed record " +
                       std::to_string(out.size()) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace gstam
