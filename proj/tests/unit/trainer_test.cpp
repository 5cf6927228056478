#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "gstam/errors.hpp"
#include "gstam/trainer.hpp"

using namespace gstam;

namespace {

struct Toy {
  SynthConfig synth;
  std::vector<VideoSample> data;
};

Toy toy(std::size_t n, std::uint64_t seed = 3) {
  Toy t;
  t.synth.n_videos = n;
  t.synth.dim_per_part = 4;
  t.synth.frames = 12;
  t.data = generate_dataset(t.synth, seed);
  return t;
}

MultiBranchModel model_for(const Toy& t, std::uint64_t seed = 1) {
  ModelConfig cfg;
  cfg.feature_dim = t.synth.feature_dim();
  cfg.seed = seed;
  return make_model(cfg, t.synth.layout);
}

TrainConfig quick(std::size_t epochs) {
  TrainConfig cfg = TrainConfig::desk();
  cfg.epochs = epochs;
  cfg.batch = 4;
  cfg.eval_every = epochs;
  return cfg;
}

}  // namespace

TEST(Adam, ZeroGradientLeavesParameters) {
  Parameter w("w", Tensor::matrix({{0.5, -1.0}}));
  AdamState state;
  Parameter* ps[] = {&w};
  adam_step(ps, state, 1e-3, 0.0);
  EXPECT_EQ(w.value, Tensor::matrix({{0.5, -1.0}}));
  EXPECT_EQ(state.step, 1u);
}

TEST(Adam, FirstStepIsSignedLr) {
  Parameter w("w", Tensor(1, 1));
  w.grad[0] = 1.0;
  AdamState state;
  Parameter* ps[] = {&w};
  adam_step(ps, state, 1e-3, 0.0);
  EXPECT_NEAR(w.value[0], -1e-3, 1e-10);
}

TEST(Adam, HandEvaluatedRecurrence) {
  // Two steps with gradients 1 then -2, weight decay on theta.
  const double lr = 0.01, wd = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double theta = 0.3, m = 0.0, v = 0.0;
  Parameter w("w", Tensor(1, 1, theta));
  AdamState state;
  Parameter* ps[] = {&w};
  const double grads[] = {1.0, -2.0};
  for (int t = 1; t <= 2; ++t) {
    const double g = grads[t - 1] + wd * theta;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    theta -= lr * (m / (1 - std::pow(b1, t))) / (std::sqrt(v / (1 - std::pow(b2, t))) + eps);
    w.grad[0] = grads[t - 1];
    adam_step(ps, state, lr, wd);
  }
  EXPECT_NEAR(w.value[0], theta, 1e-15);
}

TEST(Adam, ShapeMismatch) {
  Parameter w("w", Tensor(2, 2));
  AdamState state;
  state.m.push_back(Tensor(1, 1));
  state.v.push_back(Tensor(1, 1));
  Parameter* ps[] = {&w};
  EXPECT_THROW(adam_step(ps, state, 1e-3, 0.0), DimensionError);
}

TEST(Schedule, PaperValues) {
  const TrainConfig paper = TrainConfig::paper();
  EXPECT_EQ(paper.lr_at(0), 3e-4);
  EXPECT_EQ(paper.lr_at(99), 3e-4);
  EXPECT_NEAR(paper.lr_at(100), 9e-5, 1e-18);
  EXPECT_NEAR(paper.lr_at(199), 9e-5, 1e-18);
  EXPECT_EQ(paper.epochs, 200u);
  EXPECT_EQ(paper.batch, 64u);
  EXPECT_EQ(paper.segment, 6u);
  const TrainConfig desk = TrainConfig::desk();
  EXPECT_EQ(desk.batch, 16u);
  EXPECT_EQ(desk.epochs, 60u);
  EXPECT_EQ(desk.lr_at(29), 3e-4);
  EXPECT_NEAR(desk.lr_at(30), 9e-5, 1e-18);
}

TEST(Segments, Starts) {
  EXPECT_EQ(segment_starts(14, 6), (std::vector<std::size_t>{0, 6, 8}));
  EXPECT_EQ(segment_starts(12, 6), (std::vector<std::size_t>{0, 6}));
  EXPECT_EQ(segment_starts(6, 6), (std::vector<std::size_t>{0}));
  EXPECT_TRUE(segment_starts(5, 6).empty());
  EXPECT_EQ(segment_starts(169, 6).size(), 29u);
  EXPECT_EQ(segment_starts(169, 6).back(), 163u);
}

TEST(Segments, CoverEveryFrame) {
  for (std::size_t len = 6; len < 80; ++len) {
    std::vector<int> seen(len, 0);
    for (std::size_t s : segment_starts(len, 6)) {
      ASSERT_LE(s + 6, len);
      for (std::size_t t = s; t < s + 6; ++t) seen[t] = 1;
    }
    for (int c : seen) EXPECT_EQ(c, 1);
  }
}

TEST(Segments, SampleWindow) {
  SynthConfig cfg;
  cfg.n_videos = 1;
  cfg.frames = 6;
  VideoSample v = generate_dataset(cfg, 1)[0];
  std::mt19937_64 rng(1);
  const auto whole = sample_segment(v, 6, rng);
  ASSERT_TRUE(whole);
  EXPECT_EQ(whole->start, 0u);
  EXPECT_EQ(whole->features, v.frames);
  EXPECT_EQ(whole->labels, v.labels);
  EXPECT_FALSE(sample_segment(v, 7, rng));

  cfg.frames = 169;
  v = generate_dataset(cfg, 1)[0];
  std::mt19937_64 a(9), b(9);
  std::vector<int> hits(164, 0);
  for (int n = 0; n < 5000; ++n) {
    const auto sa = sample_segment(v, 6, a);
    const auto sb = sample_segment(v, 6, b);
    ASSERT_EQ(sa->start, sb->start);
    ASSERT_LT(sa->start, 164u);
    ++hits[sa->start];
    if (n == 0) EXPECT_EQ(sa->features, v.frames.columns(sa->start, 6));
  }
  for (int h : hits) EXPECT_GT(h, 0);
}

TEST(Inference, AveragesWindows) {
  const Toy t = toy(1);
  MultiBranchModel m = model_for(t);
  std::mt19937_64 rng(2);
  for (Parameter* p : m.parameters())
    for (double& v : p->value.values()) v = std::uniform_real_distribution<double>(-0.5, 0.5)(rng);
  Tensor frames(t.synth.feature_dim(), 14);
  for (double& v : frames.values()) v = std::normal_distribution<double>()(rng);
  const auto inf = infer_trajectory(m, frames, 6);
  ASSERT_TRUE(inf);
  EXPECT_EQ(inf->starts, (std::vector<std::size_t>{0, 6, 8}));
  for (std::size_t i = 0; i < m.branches.size(); ++i) {
    double sum = 0.0;
    for (std::size_t c = 0; c < inf->predictions[i].size(); ++c) {
      double mean = 0.0;
      for (std::size_t s : inf->starts) mean += model_forward(m, frames.columns(s, 6)).predictions[i][c];
      EXPECT_NEAR(inf->predictions[i][c], mean / 3.0, 1e-15);
      sum += inf->predictions[i][c];
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
  EXPECT_FALSE(infer_trajectory(m, frames.columns(0, 5), 6));
}

TEST(Inference, IdenticalWindowsGiveThatWindow) {
  const Toy t = toy(1);
  const MultiBranchModel m = model_for(t);
  Tensor window(t.synth.feature_dim(), 6);
  std::mt19937_64 rng(3);
  for (double& v : window.values()) v = std::normal_distribution<double>()(rng);
  Tensor frames(t.synth.feature_dim(), 18);
  for (std::size_t r = 0; r < frames.rows(); ++r)
    for (std::size_t c = 0; c < 18; ++c) frames(r, c) = window(r, c % 6);
  const auto inf = infer_trajectory(m, frames, 6);
  const auto single = model_forward(m, window);
  for (std::size_t i = 0; i < m.branches.size(); ++i)
    for (std::size_t c = 0; c < single.predictions[i].size(); ++c)
      EXPECT_NEAR(inf->predictions[i][c], single.predictions[i][c], 1e-15);
}

TEST(Fit, ExcludesShortVideos) {
  Toy t = toy(12);
  for (std::size_t i = 0; i < 4; ++i) t.data[i].frames = t.data[i].frames.columns(0, 5);
  MultiBranchModel m = model_for(t);
  const FitResult r = fit(m, t.data, quick(1));
  EXPECT_EQ(r.excluded, 4u);
  std::vector<VideoSample> shorts(t.data.begin(), t.data.begin() + 4);
  EXPECT_THROW(fit(m, shorts, quick(1)), TrainingError);
}

TEST(Fit, LambdaZeroMatchesNoRegularizer) {
  const Toy t = toy(16);
  TrainConfig a = quick(4);
  a.regularizer = Regularizer::group;
  a.lambda = 0.0;
  TrainConfig b = quick(4);
  b.regularizer = Regularizer::none;
  MultiBranchModel ma = model_for(t), mb = model_for(t);
  const FitResult ra = fit(ma, t.data, a);
  const FitResult rb = fit(mb, t.data, b);
  for (std::size_t e = 0; e < 4; ++e) EXPECT_EQ(ra.log[e].loss_class, rb.log[e].loss_class);
  for (const auto& e : rb.log) EXPECT_EQ(e.loss_reg, 0.0);
  for (const auto& e : ra.log) EXPECT_GT(e.loss_reg, 0.0);
}

TEST(Fit, ToyLossDecreases) {
  const Toy t = toy(10);
  TrainConfig cfg = quick(50);
  cfg.lr0 = 3e-3;
  cfg.decay_epoch = 50;
  MultiBranchModel m = model_for(t);
  const FitResult r = fit(m, t.data, cfg);
  ASSERT_EQ(r.log.size(), 50u);
  EXPECT_LT(r.log.back().loss_class, 0.5 * r.log.front().loss_class);
}

TEST(Fit, NonFiniteLossAborts) {
  Toy t = toy(8);
  t.data[5].frames.fill(std::numeric_limits<double>::quiet_NaN());
  MultiBranchModel m = model_for(t);
  try {
    fit(m, t.data, quick(2));
    FAIL();
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("batch"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("video id 5"), std::string::npos) << e.what();
  }
}

TEST(Fit, Deterministic) {
  const Toy t = toy(16);
  MultiBranchModel a = model_for(t), b = model_for(t);
  const FitResult ra = fit(a, t.data, quick(3));
  const FitResult rb = fit(b, t.data, quick(3));
  for (std::size_t e = 0; e < 3; ++e) EXPECT_EQ(ra.log[e].loss_class, rb.log[e].loss_class);
  const auto pa = a.parameters(), pb = b.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i]->value, pb[i]->value);
}

TEST(Fit, ValidationSelectsBestEpoch) {
  const Toy t = toy(24), v = toy(12, 99);
  TrainConfig cfg = quick(6);
  cfg.eval_every = 2;
  MultiBranchModel m = model_for(t);
  const FitResult r = fit(m, t.data, cfg, &v.data);
  ASSERT_TRUE(r.best_epoch);
  EXPECT_EQ((*r.best_epoch + 1) % 2, 0u);
  std::size_t evaluated = 0;
  for (const auto& e : r.log) evaluated += e.val_avg_f1.has_value();
  EXPECT_EQ(evaluated, 3u);
}

TEST(TrainConfig, Validation) {
  TrainConfig cfg;
  cfg.lambda = -1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = TrainConfig();
  cfg.batch = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}
