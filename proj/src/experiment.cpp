#include "gstam/experiment.hpp"

#include "gstam/errors.hpp"
#include "gstam/losses.hpp"

namespace gstam {

std::string ArmSpec::label() const {
  std::string out = to_string(attention) + "+" + to_string(regularizer);
  if (regularizer != Regularizer::none) out += "@" + std::to_string(lambda).substr(0, 6);
  return out;
}

std::vector<ArmSpec> ablation_grid(double lambda) {
  std::vector<ArmSpec> out;
  for (AttentionVariant v : {AttentionVariant::ptam, AttentionVariant::stam}) {
    for (Regularizer r : {Regularizer::none, Regularizer::sparsity, Regularizer::group}) {
      out.push_back({v, r, r == Regularizer::none ? 0.0 : lambda});
    }
  }
  return out;
}

std::vector<ArmSpec> lambda_sweep(const std::vector<double>& lambdas) {
  std::vector<ArmSpec> out;
  for (double l : lambdas) out.push_back({AttentionVariant::stam, Regularizer::group, l});
  return out;
}

ExperimentData make_experiment_data(const SynthConfig& synth, std::size_t n_train, std::size_t n_validation,
                                    std::size_t n_test, std::uint64_t seed) {
  ExperimentData data;
  data.layout = synth.layout;
  SynthConfig cfg = synth;
  cfg.n_videos = n_train;
  data.train = generate_dataset(cfg, video_seed(seed, 0));
  cfg.n_videos = n_validation;
  data.validation = generate_dataset(cfg, video_seed(seed, 1));
  cfg.n_videos = n_test;
  data.test = generate_dataset(cfg, video_seed(seed, 2));
  return data;
}

std::vector<GroupAttention> attention_alignment(const MultiBranchModel& model, const std::vector<VideoSample>& data,
                                                std::size_t segment) {
  const GroupPartition& partition = model.layout.partition;
  std::vector<GroupAttention> out(partition.size());
  std::vector<double> sum_vis(partition.size(), 0.0);
  std::vector<double> sum_occ(partition.size(), 0.0);
  for (std::size_t k = 0; k < partition.size(); ++k) out[k].group = partition.groups[k].name;
  for (const VideoSample& v : data) {
    if (v.parts != partition.size()) {
      throw DimensionError("sample " + std::to_string(v.id) + " has " + std::to_string(v.parts) + " parts, model has " +
                           std::to_string(partition.size()) + " groups");
    }
    const auto inference = infer_trajectory(model, v.frames, segment);
    if (!inference) continue;
    for (std::size_t w = 0; w < inference->starts.size(); ++w) {
      const Tensor& a = inference->window_attentions[w];
      for (std::size_t k = 0; k < partition.size(); ++k) {
        for (std::size_t t = 0; t < segment; ++t) {
          const bool occluded = v.occluded(k, inference->starts[w] + t);
          for (std::size_t i : partition.groups[k].members) {
            if (occluded) {
              sum_occ[k] += a(i, t);
              ++out[k].occluded_frames;
            } else {
              sum_vis[k] += a(i, t);
              ++out[k].visible_frames;
            }
          }
        }
      }
    }
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (out[k].visible_frames > 0) out[k].visible = sum_vis[k] / static_cast<double>(out[k].visible_frames);
    if (out[k].occluded_frames > 0) out[k].occluded = sum_occ[k] / static_cast<double>(out[k].occluded_frames);
  }
  return out;
}

double heldout_group_sparsity(const MultiBranchModel& model, const std::vector<VideoSample>& data,
                              std::size_t segment) {
  double sum = 0.0;
  std::size_t windows = 0;
  for (const VideoSample& v : data) {
    const auto inference = infer_trajectory(model, v.frames, segment);
    if (!inference) continue;
    for (const Tensor& a : inference->window_attentions) {
      sum += group_sparsity_loss(a, model.layout.partition);
      ++windows;
    }
  }
  if (windows == 0) throw EvaluationError("no trajectory is long enough for one window");
  return sum / static_cast<double>(windows);
}

ArmResult run_arm(const ExperimentData& data, const ModelConfig& model, const TrainConfig& train, const ArmSpec& arm,
                  std::uint64_t seed) {
  if (data.train.empty() || data.test.empty()) throw TrainingError("experiment needs training and test samples");
  ModelConfig mc = model;
  mc.variant = arm.attention;
  mc.seed = seed;
  TrainConfig tc = train;
  tc.attention = arm.attention;
  tc.regularizer = arm.regularizer;
  tc.lambda = arm.lambda;
  tc.seed = seed;

  ArmResult out;
  out.arm = arm;
  out.seed = seed;
  mc.feature_dim = data.train.front().frames.rows();
  out.model = make_model(mc, data.layout);
  out.fit = fit(out.model, data.train, tc, data.validation.empty() ? nullptr : &data.validation);
  EvalOptions opts;
  opts.segment = tc.segment;
  out.all = evaluate(out.model, data.test, Subset::all, opts);
  try {
    out.occluded = evaluate(out.model, data.test, Subset::occluded, opts);
  } catch (const EvaluationError&) {
    out.occluded.reset();
  }
  out.group_sparsity = heldout_group_sparsity(out.model, data.test, tc.segment);
  return out;
}

}  // namespace gstam
