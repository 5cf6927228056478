#include "gstam/losses.hpp"

#include <cmath>

#include "gstam/errors.hpp"

namespace gstam {

std::string to_string(Regularizer r) {
  switch (r) {
    case Regularizer::none: return "none";
    case Regularizer::sparsity: return "sparsity";
    case Regularizer::group: return "group";
  }
  return "none";
}

Regularizer parse_regularizer(const std::string& name) {
  if (name == "none") return Regularizer::none;
  if (name == "sparsity") return Regularizer::sparsity;
  if (name == "group") return Regularizer::group;
  throw ConfigError("unknown regularizer '" + name + "' (expected none, sparsity or group)");
}

namespace {

void check_lengths(std::size_t preds, std::size_t labels, std::size_t specs) {
  if (preds != labels || preds != specs) {
    throw DimensionError("classification_loss: " + std::to_string(preds) + " predictions, " +
                         std::to_string(labels) + " labels, " + std::to_string(specs) + " branches");
  }
}

void check_label(std::size_t label, const BranchSpec& spec) {
  if (label >= spec.classes) {
    throw LabelError("label " + std::to_string(label) + " invalid for attribute '" + spec.name +
                     "' with " + std::to_string(spec.classes) + " classes");
  }
}

void check_lambda(double lambda) {
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be non-negative, got " + std::to_string(lambda));
}

void check_partition_rows(std::size_t rows, const GroupPartition& partition) {
  std::size_t covered = 0;
  for (const auto& g : partition.groups) covered += g.members.size();
  if (covered != rows) {
    throw ConfigError("partition covers " + std::to_string(covered) + " branches but attention has " +
                      std::to_string(rows) + " rows");
  }
  partition.validate(rows);
}

}  // namespace

double classification_loss(std::span<const Tensor> predictions, std::span<const std::size_t> labels,
                           std::span<const BranchSpec> specs) {
  check_lengths(predictions.size(), labels.size(), specs.size());
  double total = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    check_label(labels[i], specs[i]);
    total += specs[i].beta * cross_entropy(predictions[i], labels[i]);
  }
  return total;
}

Var classification_loss(std::span<const Var> predictions, std::span<const std::size_t> labels,
                        std::span<const BranchSpec> specs) {
  check_lengths(predictions.size(), labels.size(), specs.size());
  std::vector<Var> terms;
  terms.reserve(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    check_label(labels[i], specs[i]);
    terms.push_back(ad::scale(ad::cross_entropy(predictions[i], labels[i]), specs[i].beta));
  }
  return ad::sum(terms);
}

double sparsity_loss(const Tensor& attentions) {
  double total = 0.0;
  for (double v : attentions.values()) total += std::abs(v);
  return total;
}

Var sparsity_loss(Var attentions) { return ad::l1_norm(attentions); }

double group_sparsity_loss(const Tensor& attentions, std::span<const std::vector<std::size_t>> groups,
                           std::span<const double> weights) {
  if (groups.size() != weights.size()) throw ConfigError("one weight per group required");
  double total = 0.0;
  for (std::size_t t = 0; t < attentions.cols(); ++t) {
    for (std::size_t k = 0; k < groups.size(); ++k) {
      double sq = 0.0;
      for (std::size_t r : groups[k]) {
        if (r >= attentions.rows()) throw ConfigError("group member outside attention rows");
        sq += attentions(r, t) * attentions(r, t);
      }
      total += weights[k] * std::sqrt(sq);
    }
  }
  return total;
}

double group_sparsity_loss(const Tensor& attentions, const GroupPartition& partition) {
  check_partition_rows(attentions.rows(), partition);
  const auto groups = partition.member_lists();
  const auto weights = partition.weights();
  return group_sparsity_loss(attentions, groups, weights);
}

Var group_sparsity_loss(Var attentions, const GroupPartition& partition) {
  check_partition_rows(attentions.value().rows(), partition);
  const auto groups = partition.member_lists();
  const auto weights = partition.weights();
  return ad::group_l2(attentions, groups, weights);
}

double total_loss(double class_loss, double reg_loss, double lambda) {
  check_lambda(lambda);
  return class_loss + lambda * reg_loss;
}

Var total_loss(Var class_loss, Var reg_loss, double lambda) {
  check_lambda(lambda);
  return ad::add(class_loss, ad::scale(reg_loss, lambda));
}

double regularizer_value(Regularizer r, const Tensor& attentions, const GroupPartition& partition) {
  switch (r) {
    case Regularizer::none: return 0.0;
    case Regularizer::sparsity: return sparsity_loss(attentions);
    case Regularizer::group: return group_sparsity_loss(attentions, partition);
  }
  return 0.0;
}

}  // namespace gstam
