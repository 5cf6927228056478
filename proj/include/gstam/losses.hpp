#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gstam/autodiff.hpp"
#include "gstam/partition.hpp"
#include "gstam/tensor.hpp"

namespace gstam {

enum class Regularizer { none, sparsity, group };

std::string to_string(Regularizer r);
Regularizer parse_regularizer(const std::string& name);

// sum_i beta_i * CE(p_i, y_i)
double classification_loss(std::span<const Tensor> predictions, std::span<const std::size_t> labels,
                           std::span<const BranchSpec> specs);
Var classification_loss(std::span<const Var> predictions, std::span<const std::size_t> labels,
                        std::span<const BranchSpec> specs);

// sum_i ||a_i||_1 over the rows of an attention matrix (B x T).
double sparsity_loss(const Tensor& attentions);
Var sparsity_loss(Var attentions);

// sum_t sum_k gamma_k ||g_t^k||_2 where g_t^k gathers rows G^k of column t.
double group_sparsity_loss(const Tensor& attentions, const GroupPartition& partition);
Var group_sparsity_loss(Var attentions, const GroupPartition& partition);
// Same sum with caller-chosen group weights.
double group_sparsity_loss(const Tensor& attentions, std::span<const std::vector<std::size_t>> groups,
                           std::span<const double> weights);

// L_class + lambda * L_reg; lambda must be non-negative.
double total_loss(double class_loss, double reg_loss, double lambda);
Var total_loss(Var class_loss, Var reg_loss, double lambda);

// Regularizer value for an attention matrix (0 for Regularizer::none).
double regularizer_value(Regularizer r, const Tensor& attentions, const GroupPartition& partition);

}  // namespace gstam
