#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gstam/metrics.hpp"
#include "gstam/model.hpp"
#include "gstam/synthdata.hpp"
#include "gstam/trainer.hpp"

namespace gstam {

// One cell of an ablation grid.
struct ArmSpec {
  AttentionVariant attention = AttentionVariant::stam;
  Regularizer regularizer = Regularizer::group;
  double lambda = 0.02;

  std::string label() const;
};

// {PTAM, STAM} x {none, sparsity, group}, at `lambda` for the regularized
// cells and 0 for the unregularized ones.
std::vector<ArmSpec> ablation_grid(double lambda);
// STAM + group at each lambda.
std::vector<ArmSpec> lambda_sweep(const std::vector<double>& lambdas);

struct ExperimentData {
  AttributeLayout layout;
  std::vector<VideoSample> train;
  std::vector<VideoSample> validation;
  std::vector<VideoSample> test;
};

// Three independent draws from the same codebook, seeded from `seed`; the
// layout is synth.layout.
ExperimentData make_experiment_data(const SynthConfig& synth, std::size_t n_train, std::size_t n_validation,
                                    std::size_t n_test, std::uint64_t seed);

// Mean attention of a group's branches over window frames where the group's
// part is visible and where it is occluded.
struct GroupAttention {
  std::string group;
  double visible = 0.0;
  double occluded = 0.0;
  std::size_t visible_frames = 0;
  std::size_t occluded_frames = 0;
};

// Uses the trajectory-inference windows of every sample long enough for one.
std::vector<GroupAttention> attention_alignment(const MultiBranchModel& model, const std::vector<VideoSample>& data,
                                                std::size_t segment);
// Mean group sparsity loss over the inference windows of `data`.
double heldout_group_sparsity(const MultiBranchModel& model, const std::vector<VideoSample>& data,
                              std::size_t segment);

struct ArmResult {
  ArmSpec arm;
  std::uint64_t seed = 0;
  MultiBranchModel model;
  FitResult fit;
  EvalReport all;
  std::optional<EvalReport> occluded;
  double group_sparsity = 0.0;
};

// Trains a fresh model for `arm` (model and shuffling seeded by `seed`) and
// scores it on data.test. Validation, when present, drives best-epoch
// selection.
ArmResult run_arm(const ExperimentData& data, const ModelConfig& model, const TrainConfig& train, const ArmSpec& arm,
                  std::uint64_t seed);

}  // namespace gstam
