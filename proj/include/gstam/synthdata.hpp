#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "gstam/partition.hpp"
#include "gstam/tensor.hpp"

namespace gstam {

// Synthetic "crowded video" generator. Each attribute group owns one part
// slot of the frame feature vector. A visible part carries the sum of the
// codewords of its group's labels plus Gaussian noise; an occluded part
// carries clutter only: zero-mean noise of scale occluder_sigma, optionally
// offset by a fixed per-part occluder appearance (occluder_shift), and
// independent of the labels.
struct SynthConfig {
  AttributeLayout layout = builtin_partitions("synthetic");
  std::size_t dim_per_part = 8;
  std::size_t frames = 24;
  double p_occ = 0.3;
  double persistence = 0.7;
  double noise_sigma = 0.3;
  double codeword_scale = 1.0;
  double occluder_shift = 0.0;
  double occluder_sigma = 3.0;
  std::uint64_t codebook_seed = 7;
  std::size_t n_videos = 500;

  std::size_t parts() const noexcept { return layout.partition.size(); }
  std::size_t feature_dim() const noexcept { return parts() * dim_per_part; }
  void validate() const;
};

// Two-state occlusion chain. `enter` is P(visible -> occluded) and `stay`
// is P(occluded -> occluded); the stationary occluded fraction is p_occ.
struct OcclusionChain {
  double enter = 0.0;
  double stay = 0.0;
  double stationary = 0.0;
};

// Uses stay = persistence when that admits the requested rate; otherwise
// enter saturates at 1 and stay is raised to reach p_occ.
OcclusionChain occlusion_chain(double p_occ, double persistence);

struct Codebook {
  std::vector<Tensor> codewords;  // per branch: classes x dim_per_part
  std::vector<Tensor> occluders;  // per part: vector dim_per_part
};

Codebook make_codebook(const SynthConfig& cfg);

struct VideoSample {
  std::uint64_t id = 0;
  Tensor frames;  // d x L
  std::vector<std::size_t> labels;
  std::size_t parts = 0;
  std::vector<std::uint8_t> mask;  // parts x L, row-major; 1 = occluded

  std::size_t length() const noexcept { return frames.cols(); }
  bool occluded(std::size_t part, std::size_t t) const { return mask[part * length() + t] != 0; }
  bool is_occluded() const;

  bool operator==(const VideoSample& other) const = default;
};

std::uint64_t video_seed(std::uint64_t seed, std::uint64_t index);

VideoSample generate_video(const SynthConfig& cfg, const Codebook& codebook, std::uint64_t seed,
                           std::uint64_t id);
std::vector<VideoSample> generate_dataset(const SynthConfig& cfg, std::uint64_t seed);

// One JSON record per line: id, shape [d, L], row-major features, labels and
// the per-part mask as run lengths starting with a visible run.
void save_dataset(const std::filesystem::path& path, const std::vector<VideoSample>& samples);
std::vector<VideoSample> load_dataset(const std::filesystem::path& path);

}  // namespace gstam
