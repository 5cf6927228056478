#include "gstam/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gstam/errors.hpp"
#include "gstam/metrics.hpp"

namespace gstam {

void adam_step(std::span<Parameter* const> params, AdamState& state, double lr, double weight_decay,
               const AdamConfig& adam) {
  if (state.m.empty() && state.step == 0) {
    for (const Parameter* p : params) {
      state.m.emplace_back(p->value.rows(), p->value.cols());
      state.v.emplace_back(p->value.rows(), p->value.cols());
    }
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw DimensionError("adam: state holds " + std::to_string(state.m.size()) + " moments for " +
                         std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Parameter& p = *params[i];
    if (!p.grad.same_shape(p.value) || !state.m[i].same_shape(p.value) || !state.v[i].same_shape(p.value)) {
      throw DimensionError("adam: shape mismatch for parameter '" + p.name + "'");
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(adam.beta1, t);
  const double bc2 = 1.0 - std::pow(adam.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    auto value = p.value.values();
    auto grad = p.grad.values();
    auto m = state.m[i].values();
    auto v = state.v[i].values();
    for (std::size_t j = 0; j < value.size(); ++j) {
      const double g = grad[j] + weight_decay * value[j];
      m[j] = adam.beta1 * m[j] + (1.0 - adam.beta1) * g;
      v[j] = adam.beta2 * v[j] + (1.0 - adam.beta2) * g * g;
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      value[j] -= lr * m_hat / (std::sqrt(v_hat) + adam.eps);
    }
  }
}

TrainConfig TrainConfig::paper() { return TrainConfig{}; }

TrainConfig TrainConfig::desk() {
  TrainConfig c;
  c.batch = 16;
  c.epochs = 60;
  c.decay_epoch = 30;
  return c;
}

double TrainConfig::lr_at(std::size_t epoch) const { return epoch < decay_epoch ? lr0 : lr0 * lr_decay; }

void TrainConfig::validate() const {
  if (segment == 0) throw ConfigError("train.segment must be at least 1");
  if (batch == 0) throw ConfigError("train.batch must be at least 1");
  if (!(lambda >= 0.0)) throw ConfigError("train.lambda must be non-negative");
  if (!(lr0 > 0.0)) throw ConfigError("train.lr0 must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("train.weight_decay must be non-negative");
  if (eval_every == 0) throw ConfigError("train.eval_every must be at least 1");
}

std::optional<Segment> sample_segment(const VideoSample& video, std::size_t segment, std::mt19937_64& rng) {
  const std::size_t len = video.length();
  if (segment == 0 || len < segment) return std::nullopt;
  std::uniform_int_distribution<std::size_t> pick(0, len - segment);
  const std::size_t start = pick(rng);
  return Segment{video.frames.columns(start, segment), video.labels, start};
}

std::vector<std::size_t> segment_starts(std::size_t length, std::size_t segment) {
  std::vector<std::size_t> starts;
  if (segment == 0 || length < segment) return starts;
  for (std::size_t s = 0; s + segment <= length; s += segment) starts.push_back(s);
  if (length % segment != 0) starts.push_back(length - segment);
  return starts;
}

std::optional<TrajectoryInference> infer_trajectory(const MultiBranchModel& model, const Tensor& frames,
                                                    std::size_t segment) {
  const auto starts = segment_starts(frames.cols(), segment);
  if (starts.empty()) return std::nullopt;
  TrajectoryInference out;
  out.starts = starts;
  for (const BranchSpec& spec : model.layout.branches) out.predictions.push_back(Tensor::vector(spec.classes));
  for (std::size_t s : starts) {
    ForwardResult r = model_forward(model, frames.columns(s, segment));
    for (std::size_t i = 0; i < r.predictions.size(); ++i) {
      for (std::size_t c = 0; c < r.predictions[i].size(); ++c) out.predictions[i][c] += r.predictions[i][c];
    }
    out.window_attentions.push_back(std::move(r.attentions));
  }
  const double n = static_cast<double>(starts.size());
  for (Tensor& p : out.predictions)
    for (double& v : p.values()) v /= n;
  return out;
}

FitResult fit(MultiBranchModel& model, const std::vector<VideoSample>& train, const TrainConfig& cfg,
              const std::vector<VideoSample>* validation) {
  cfg.validate();
  FitResult result;
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train[i].length() >= cfg.segment) {
      eligible.push_back(i);
    } else {
      ++result.excluded;
    }
  }
  if (eligible.empty()) throw TrainingError("training set is empty after excluding trajectories shorter than T");

  std::mt19937_64 rng(cfg.seed);
  AdamState adam;
  const std::vector<Parameter*> params = model.parameters();
  const GroupPartition& partition = model.layout.partition;
  std::vector<Tensor> best_values;
  double best_f1 = -1.0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.lr_at(epoch);
    std::vector<std::size_t> order = eligible;
    std::shuffle(order.begin(), order.end(), rng);
    double sum_class = 0.0;
    double sum_reg = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t first = 0; first < order.size(); first += cfg.batch, ++batch_index) {
      const std::size_t last = std::min(order.size(), first + cfg.batch);
      const double inv_n = 1.0 / static_cast<double>(last - first);
      for (Parameter* p : params) p->zero_grad();
      for (std::size_t b = first; b < last; ++b) {
        const VideoSample& video = train[order[b]];
        std::optional<Segment> seg = sample_segment(video, cfg.segment, rng);
        Graph g;
        Var features = g.constant(std::move(seg->features));
        GraphForward fwd = model_forward(g, model, features, true);
        Var cls = classification_loss(fwd.predictions, seg->labels, model.layout.branches);
        Var total = cls;
        double reg_value = 0.0;
        if (cfg.regularizer != Regularizer::none) {
          Var reg = cfg.regularizer == Regularizer::group ? group_sparsity_loss(fwd.attentions, partition)
                                                          : sparsity_loss(fwd.attentions);
          reg_value = reg.value()[0];
          if (cfg.lambda > 0.0) total = total_loss(cls, reg, cfg.lambda);
        }
        const double loss = total.value()[0];
        if (!std::isfinite(loss)) {
          std::ostringstream msg;
          msg << "non-finite loss at epoch " << epoch << ", batch " << batch_index << " (video id " << video.id
              << ")";
          throw TrainingError(msg.str());
        }
        sum_class += cls.value()[0];
        sum_reg += reg_value;
        g.backward(total, inv_n);
      }
      adam_step(params, adam, lr, cfg.weight_decay, cfg.adam);
    }
    EpochLog entry;
    entry.epoch = epoch;
    entry.lr = lr;
    entry.loss_class = sum_class / static_cast<double>(order.size());
    entry.loss_reg = sum_reg / static_cast<double>(order.size());
    if (validation != nullptr && !validation->empty() && (epoch + 1) % cfg.eval_every == 0) {
      EvalOptions opts;
      opts.segment = cfg.segment;
      const EvalReport report = evaluate(model, *validation, Subset::all, opts);
      entry.val_avg_acc = report.avg_accuracy;
      entry.val_avg_f1 = report.avg_f1;
      if (report.avg_f1 > best_f1) {
        best_f1 = report.avg_f1;
        result.best_epoch = epoch;
        best_values.clear();
        for (const Parameter* p : params) best_values.push_back(p->value);
      }
    }
    result.log.push_back(entry);
  }
  if (cfg.select_best && !best_values.empty()) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best_values[i];
  }
  return result;
}

}  // namespace gstam
