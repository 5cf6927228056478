#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "gstam/attention.hpp"
#include "gstam/autodiff.hpp"
#include "gstam/partition.hpp"
#include "gstam/tensor.hpp"

namespace gstam {

enum class TrunkKind { identity, conv };

struct ModelConfig {
  std::size_t feature_dim = 40;
  AttentionVariant variant = AttentionVariant::stam;
  std::size_t hidden = 0;  // 0 selects default_hidden(feature_dim)
  std::size_t k1 = 3;
  std::size_t k2 = 3;
  TrunkKind trunk = TrunkKind::identity;
  std::size_t trunk_k = 3;
  std::uint64_t seed = 1;
};

// Linear classifier without bias: p = softmax(W f~), W is c x d.
struct BranchHead {
  Parameter weight;
};

struct Branch {
  BranchSpec spec;
  AttentionParams attention;
  BranchHead head;
};

// Optional shared conv1d + relu layer (d -> d) applied before the branches.
struct Trunk {
  TrunkKind kind = TrunkKind::identity;
  std::size_t k = 3;
  Parameter weight;
  Parameter bias;
};

struct MultiBranchModel {
  ModelConfig config;
  AttributeLayout layout;
  Trunk trunk;
  std::vector<Branch> branches;

  std::size_t feature_dim() const noexcept { return config.feature_dim; }
  std::size_t branch_count() const noexcept { return branches.size(); }

  // Fixed order: trunk (if any), then per branch conv1.w, conv1.b, conv2.w,
  // conv2.b, head.
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
};

MultiBranchModel make_model(const ModelConfig& config, const AttributeLayout& layout);

Tensor branch_predict(const Tensor& aggregated, const BranchHead& head);

struct ForwardResult {
  std::vector<Tensor> predictions;  // B simplex vectors
  Tensor attentions;                // B x T
};

struct GraphForward {
  std::vector<Var> predictions;
  Var attentions;  // B x T
};

GraphForward model_forward(Graph& g, const MultiBranchModel& model, Var features, bool trainable);
ForwardResult model_forward(const MultiBranchModel& model, const Tensor& features);

// Runs the heads on attention rows supplied by the caller (B x T) instead of
// the attention modules.
std::vector<Tensor> predict_with_attention(const MultiBranchModel& model, const Tensor& features,
                                           const Tensor& attentions);

// Self-describing JSON checkpoint; parameter values round-trip exactly.
void save_checkpoint(const std::filesystem::path& path, const MultiBranchModel& model);
MultiBranchModel load_checkpoint(const std::filesystem::path& path);

}  // namespace gstam
