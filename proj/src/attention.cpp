#include "gstam/attention.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "gstam/errors.hpp"

namespace gstam {

std::string to_string(AttentionVariant v) { return v == AttentionVariant::ptam ? "ptam" : "stam"; }

AttentionVariant parse_attention_variant(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "ptam") return AttentionVariant::ptam;
  if (lower == "stam") return AttentionVariant::stam;
  throw ConfigError("unknown attention variant '" + name + "' (expected ptam or stam)");
}

std::size_t default_hidden(std::size_t feature_dim) { return std::max<std::size_t>(feature_dim / 2, 4); }

namespace {

Tensor uniform_kernel(std::size_t rows, std::size_t cols, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(rows, cols);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

void check_features(const Tensor& features, const AttentionParams& p) {
  if (features.rows() != p.feature_dim()) {
    throw ConfigError("attention expects feature dim " + std::to_string(p.feature_dim()) +
                      ", got " + features.shape_string());
  }
  if (features.cols() == 0) throw DimensionError("attention: empty frame sequence");
}

}  // namespace

AttentionParams make_attention(AttentionVariant variant, const AttentionShape& shape,
                               std::mt19937_64& rng, const std::string& prefix) {
  if (shape.feature_dim == 0) throw ConfigError("attention: feature_dim must be positive");
  if (shape.k1 % 2 == 0 || shape.k2 % 2 == 0) {
    throw ConfigError("attention: kernel sizes must be odd (k1=" + std::to_string(shape.k1) +
                      ", k2=" + std::to_string(shape.k2) + ")");
  }
  const std::size_t hidden = shape.hidden == 0 ? default_hidden(shape.feature_dim) : shape.hidden;
  AttentionParams p;
  p.variant = variant;
  p.k1 = shape.k1;
  p.k2 = shape.k2;
  const std::size_t fan1 = shape.feature_dim * shape.k1;
  const std::size_t fan2 = hidden * shape.k2;
  p.conv1_w = Parameter(prefix + ".conv1.w", uniform_kernel(hidden, fan1, fan1, rng));
  p.conv1_b = Parameter(prefix + ".conv1.b", Tensor::vector(hidden));
  p.conv2_w = Parameter(prefix + ".conv2.w", uniform_kernel(1, fan2, fan2, rng));
  p.conv2_b = Parameter(prefix + ".conv2.b", Tensor::vector(1));
  return p;
}

Var attention_forward(Graph& g, Var features, const AttentionParams& p, bool trainable) {
  check_features(features.value(), p);
  auto bind = [&](const Parameter& q) { return trainable ? g.trainable(q) : g.frozen(q); };
  Var h = ad::relu(ad::conv1d_same(features, bind(p.conv1_w), bind(p.conv1_b), p.k1));
  Var logits = ad::as_vector(ad::conv1d_same(h, bind(p.conv2_w), bind(p.conv2_b), p.k2));
  if (p.variant == AttentionVariant::stam) return ad::sigmoid(logits);
  return ad::softmax(ad::relu(logits));
}

namespace {

Tensor attention_logits(const Tensor& features, const AttentionParams& p) {
  check_features(features, p);
  const Tensor h = relu(conv1d_same(features, p.conv1_w.value, p.conv1_b.value, p.k1));
  const Tensor out = conv1d_same(h, p.conv2_w.value, p.conv2_b.value, p.k2);
  return Tensor::vector(std::vector<double>(out.values().begin(), out.values().end()));
}

}  // namespace

AttentionWeights stam_forward(const Tensor& features, const AttentionParams& p) {
  if (p.variant != AttentionVariant::stam) throw ConfigError("stam_forward called with PTAM parameters");
  return {sigmoid(attention_logits(features, p)), AttentionVariant::stam};
}

AttentionWeights ptam_forward(const Tensor& features, const AttentionParams& p) {
  if (p.variant != AttentionVariant::ptam) throw ConfigError("ptam_forward called with STAM parameters");
  return {softmax(relu(attention_logits(features, p))), AttentionVariant::ptam};
}

AttentionWeights attention_forward(const Tensor& features, const AttentionParams& p) {
  return p.variant == AttentionVariant::stam ? stam_forward(features, p) : ptam_forward(features, p);
}

Tensor aggregate(const Tensor& features, const Tensor& weights) {
  if (!weights.is_vector() || weights.rows() != features.cols()) {
    throw DimensionError("aggregate: " + std::to_string(features.cols()) + " frames but " +
                         weights.shape_string() + " weights");
  }
  return matvec(features, weights);
}

}  // namespace gstam
