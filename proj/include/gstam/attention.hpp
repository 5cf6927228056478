#pragma once

#include <cstddef>
#include <random>
#include <string>

#include "gstam/autodiff.hpp"
#include "gstam/tensor.hpp"

namespace gstam {

// PTAM: Conv-ReLU-Conv-ReLU-Softmax, weights on the simplex.
// STAM: Conv-ReLU-Conv-Sigmoid, independent per-frame weights in (0,1).
enum class AttentionVariant { ptam, stam };

std::string to_string(AttentionVariant v);
AttentionVariant parse_attention_variant(const std::string& name);

struct AttentionShape {
  std::size_t feature_dim = 0;
  std::size_t hidden = 0;  // 0 selects default_hidden(feature_dim)
  std::size_t k1 = 3;
  std::size_t k2 = 3;
};

// max(d / 2, 4)
std::size_t default_hidden(std::size_t feature_dim);

struct AttentionParams {
  AttentionVariant variant = AttentionVariant::stam;
  std::size_t k1 = 3;
  std::size_t k2 = 3;
  Parameter conv1_w;  // hidden x (d * k1)
  Parameter conv1_b;  // hidden
  Parameter conv2_w;  // 1 x (hidden * k2)
  Parameter conv2_b;  // 1

  std::size_t feature_dim() const { return conv1_w.value.cols() / k1; }
  std::size_t hidden() const { return conv1_w.value.rows(); }
};

// Kernels uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
AttentionParams make_attention(AttentionVariant variant, const AttentionShape& shape,
                               std::mt19937_64& rng, const std::string& prefix = "attention");

struct AttentionWeights {
  Tensor a;  // length-T vector
  AttentionVariant variant = AttentionVariant::stam;
};

// Graph form. `features` is d x T; returns a length-T vector.
Var attention_forward(Graph& g, Var features, const AttentionParams& p, bool trainable);

AttentionWeights stam_forward(const Tensor& features, const AttentionParams& p);
AttentionWeights ptam_forward(const Tensor& features, const AttentionParams& p);
AttentionWeights attention_forward(const Tensor& features, const AttentionParams& p);

// f~ = F a = sum_t a_t f_t
Tensor aggregate(const Tensor& features, const Tensor& weights);
inline Var aggregate(Var features, Var weights) { return ad::matvec(features, weights); }

}  // namespace gstam
