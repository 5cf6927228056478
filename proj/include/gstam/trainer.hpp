#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "gstam/attention.hpp"
#include "gstam/autodiff.hpp"
#include "gstam/losses.hpp"
#include "gstam/model.hpp"
#include "gstam/synthdata.hpp"

namespace gstam {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t step = 0;
};

// One Adam update with bias correction. Weight decay is L2-coupled: the
// gradient used for the moments is grad + weight_decay * param.
void adam_step(std::span<Parameter* const> params, AdamState& state, double lr, double weight_decay,
               const AdamConfig& adam = {});

struct TrainConfig {
  double lr0 = 3e-4;
  double lr_decay = 0.3;
  std::size_t decay_epoch = 100;
  double weight_decay = 5e-4;
  double lambda = 0.02;
  std::size_t batch = 64;
  std::size_t epochs = 200;
  std::size_t segment = 6;
  Regularizer regularizer = Regularizer::group;
  AttentionVariant attention = AttentionVariant::stam;
  std::size_t eval_every = 20;
  std::uint64_t seed = 1;
  AdamConfig adam;
  // Restore the parameters with the best validation F1 among the periodic
  // evaluations (only when a validation set is supplied).
  bool select_best = true;

  static TrainConfig paper();
  // batch 16, 60 epochs, decay at epoch 30
  static TrainConfig desk();

  // Epochs are numbered from 0; lr0 before decay_epoch, lr0 * lr_decay after.
  double lr_at(std::size_t epoch) const;
  void validate() const;
};

struct Segment {
  Tensor features;  // d x T
  std::vector<std::size_t> labels;
  std::size_t start = 0;
};

// Uniformly random contiguous window; nullopt for videos shorter than T.
std::optional<Segment> sample_segment(const VideoSample& video, std::size_t segment, std::mt19937_64& rng);

// floor(L / T) disjoint windows plus, when L mod T != 0, the final T frames.
// Empty when L < T.
std::vector<std::size_t> segment_starts(std::size_t length, std::size_t segment);

struct TrajectoryInference {
  std::vector<Tensor> predictions;        // B averaged simplex vectors
  std::vector<std::size_t> starts;        // window starts
  std::vector<Tensor> window_attentions;  // per window, B x T
};

// Segment-averaged prediction for a whole trajectory (d x L); nullopt when
// L < T (the trajectory is excluded).
std::optional<TrajectoryInference> infer_trajectory(const MultiBranchModel& model, const Tensor& frames,
                                                    std::size_t segment);

struct EpochLog {
  std::size_t epoch = 0;
  double lr = 0.0;
  double loss_class = 0.0;
  double loss_reg = 0.0;
  std::optional<double> val_avg_acc;
  std::optional<double> val_avg_f1;
};

struct FitResult {
  std::vector<EpochLog> log;
  std::optional<std::size_t> best_epoch;
  std::size_t excluded = 0;  // training videos shorter than the segment
};

// Minimizes the batch-averaged L_class + lambda * L_reg with Adam.
FitResult fit(MultiBranchModel& model, const std::vector<VideoSample>& train, const TrainConfig& cfg,
              const std::vector<VideoSample>* validation = nullptr);

}  // namespace gstam
