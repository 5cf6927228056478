#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "gstam/errors.hpp"
#include "gstam/metrics.hpp"
#include "gstam/model.hpp"

using namespace gstam;

namespace {

using Labels = std::vector<std::size_t>;

// Independent recount of macro F1 from the confusion matrix.
double brute_f1(const Labels& pred, const Labels& gold, std::size_t classes) {
  std::vector<std::vector<std::size_t>> cm(classes, std::vector<std::size_t>(classes, 0));
  for (std::size_t n = 0; n < gold.size(); ++n) ++cm[gold[n]][pred[n]];
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    std::size_t row = 0, col = 0;
    for (std::size_t k = 0; k < classes; ++k) row += cm[c][k], col += cm[k][c];
    if (row == 0 && col == 0) continue;
    ++used;
    const double p = col ? static_cast<double>(cm[c][c]) / static_cast<double>(col) : 0.0;
    const double r = row ? static_cast<double>(cm[c][c]) / static_cast<double>(row) : 0.0;
    sum += p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  }
  return sum / static_cast<double>(used);
}

AttributeLayout tiny_layout() { return make_layout({{"a", {{"x", 2}, {"y", 3}}}, {"b", {{"z", 2}}}}); }

VideoSample video(Labels labels, bool occluded) {
  VideoSample v;
  v.labels = std::move(labels);
  v.parts = 1;
  v.frames = Tensor(1, 2);
  v.mask = {0, static_cast<std::uint8_t>(occluded ? 1 : 0)};
  return v;
}

}  // namespace

TEST(F1, Examples) {
  EXPECT_EQ(attribute_f1(Labels{0, 1, 1, 0}, Labels{0, 1, 1, 0}, 2), 1.0);
  EXPECT_NEAR(attribute_f1(Labels{1, 0, 0, 0}, Labels{1, 1, 0, 0}, 2), 0.73333, 1e-5);
  EXPECT_NEAR(attribute_f1(Labels{1, 0, 0, 0}, Labels{1, 1, 0, 0}, 2), (2.0 / 3.0 + 0.8) / 2.0, 1e-15);
  EXPECT_NEAR(attribute_f1(Labels{0, 0, 0, 0}, Labels{0, 0, 1, 1}, 2), 1.0 / 3.0, 1e-15);
}

TEST(F1, Errors) {
  EXPECT_THROW(attribute_f1(Labels{}, Labels{}, 2), EvaluationError);
  EXPECT_THROW(attribute_f1(Labels{0}, Labels{0, 1}, 2), EvaluationError);
  EXPECT_THROW(attribute_f1(Labels{2}, Labels{0}, 2), EvaluationError);
  EXPECT_THROW(attribute_accuracy(Labels{}, Labels{}), EvaluationError);
}

TEST(F1, MatchesBruteForceAndBounds) {
  std::mt19937_64 rng(1);
  for (int n = 0; n < 300; ++n) {
    const std::size_t classes = 2 + n % 5;
    const std::size_t len = 1 + n % 23;
    std::uniform_int_distribution<std::size_t> pick(0, classes - 1);
    Labels p(len), g(len);
    for (std::size_t i = 0; i < len; ++i) p[i] = pick(rng), g[i] = pick(rng);
    const double f1 = attribute_f1(p, g, classes);
    EXPECT_NEAR(f1, brute_f1(p, g, classes), 1e-12);
    EXPECT_GE(f1, 0.0);
    EXPECT_LE(f1, 1.0);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < len; ++i) hits += p[i] == g[i];
    EXPECT_DOUBLE_EQ(attribute_accuracy(p, g), static_cast<double>(hits) / static_cast<double>(len));
  }
}

TEST(F1, PermutationInvariant) {
  std::mt19937_64 rng(2);
  for (int n = 0; n < 100; ++n) {
    std::uniform_int_distribution<std::size_t> pick(0, 3);
    Labels p(17), g(17);
    for (std::size_t i = 0; i < 17; ++i) p[i] = pick(rng), g[i] = pick(rng);
    std::vector<std::size_t> order(17);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    Labels ps(17), gs(17);
    for (std::size_t i = 0; i < 17; ++i) ps[i] = p[order[i]], gs[i] = g[order[i]];
    EXPECT_EQ(attribute_f1(p, g, 4), attribute_f1(ps, gs, 4));
  }
}

TEST(Argmax, TiesGoLow) {
  EXPECT_EQ(argmax(Tensor::vector({0.2, 0.4, 0.4})), 1u);
  EXPECT_EQ(argmax(Tensor::vector({0.5, 0.5})), 0u);
  EXPECT_THROW(argmax(Tensor::vector(std::vector<double>{})), DimensionError);
}

TEST(Subset, ParseAndMembership) {
  EXPECT_EQ(parse_subset("occluded"), Subset::occluded);
  EXPECT_EQ(to_string(Subset::visible), "visible");
  EXPECT_THROW(parse_subset("hidden"), ConfigError);
  const VideoSample occ = video({0, 0, 0}, true), vis = video({0, 0, 0}, false);
  EXPECT_TRUE(in_subset(occ, Subset::occluded));
  EXPECT_FALSE(in_subset(occ, Subset::visible));
  EXPECT_TRUE(in_subset(vis, Subset::visible));
  EXPECT_TRUE(in_subset(vis, Subset::all));
}

TEST(Guard, Examples) {
  const AttributeLayout layout = builtin_partitions("duke");
  std::mt19937_64 rng(3);
  std::vector<VideoSample> data;
  for (int n = 0; n < 40; ++n) {
    Labels y;
    for (const auto& b : layout.branches) y.push_back(std::uniform_int_distribution<std::size_t>(0, b.classes - 1)(rng));
    y[2] = 0;  // hat = no everywhere
    data.push_back(video(y, n % 2 == 0));
  }
  EXPECT_EQ(constant_attribute_guard(data, Subset::all, layout), (std::vector<std::string>{"hat"}));
  for (auto& v : data) v.labels[2] = (v.id++ % 2);
  data[0].labels[2] = 0, data[1].labels[2] = 1;
  EXPECT_TRUE(constant_attribute_guard(data, Subset::all, layout).empty());
  const std::vector<VideoSample> one{data[0]};
  EXPECT_EQ(constant_attribute_guard(one, Subset::all, layout).size(), layout.branches.size());
}

TEST(Score, AveragesAreMeans) {
  const AttributeLayout layout = tiny_layout();
  const std::vector<Labels> gold{{0, 1, 0}, {1, 2, 1}, {1, 0, 1}, {0, 1, 0}};
  const std::vector<Labels> pred{{0, 1, 1}, {1, 1, 1}, {0, 0, 1}, {0, 2, 0}};
  const EvalReport r = score_predictions(layout, gold, pred, Subset::all, {});
  ASSERT_EQ(r.attributes.size(), 3u);
  double acc = 0.0, f1 = 0.0;
  for (const auto& a : r.attributes) acc += a.accuracy, f1 += a.f1;
  EXPECT_NEAR(r.avg_accuracy, acc / 3.0, 1e-12);
  EXPECT_NEAR(r.avg_f1, f1 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(r.attributes[0].accuracy, 0.75);
  EXPECT_DOUBLE_EQ(r.attributes[1].accuracy, 0.5);
  EXPECT_DOUBLE_EQ(r.attributes[2].accuracy, 0.75);
  EXPECT_EQ(r.samples, 4u);

  const EvalReport ex = score_predictions(layout, gold, pred, Subset::all, {"y"});
  EXPECT_TRUE(ex.attributes[1].excluded);
  EXPECT_NEAR(ex.avg_accuracy, 0.75, 1e-12);
  EXPECT_THROW(score_predictions(layout, {}, {}, Subset::occluded, {}), EvaluationError);
  EXPECT_THROW(score_predictions(layout, gold, pred, Subset::all, {"x", "y", "z"}), EvaluationError);
}

TEST(Evaluate, PerfectModelScoresOne) {
  // One attribute read straight from a noiseless one-hot feature.
  ModelConfig cfg;
  cfg.feature_dim = 2;
  cfg.hidden = 2;
  MultiBranchModel m = make_model(cfg, make_layout({{"g", {{"bit", 2}}}}));
  m.branches[0].head.weight.value = Tensor::matrix({{50, 0}, {0, 50}});
  std::vector<VideoSample> data;
  for (std::size_t n = 0; n < 10; ++n) {
    VideoSample v;
    v.id = n;
    v.labels = {n % 2};
    v.parts = 1;
    v.frames = Tensor(2, 6);
    for (std::size_t t = 0; t < 6; ++t) v.frames(n % 2, t) = 1.0;
    v.mask.assign(6, 0);
    data.push_back(v);
  }
  const EvalReport r = evaluate(m, data, Subset::all);
  EXPECT_EQ(r.avg_accuracy, 1.0);
  EXPECT_EQ(r.avg_f1, 1.0);
  EXPECT_THROW(evaluate(m, data, Subset::occluded), EvaluationError);
}

TEST(Evaluate, AllIsCountWeightedUnionOfSubsets) {
  SynthConfig sc;
  sc.n_videos = 60;
  sc.p_occ = 0.02;  // leaves both subsets populated
  const auto data = generate_dataset(sc, 8);
  ModelConfig cfg;
  cfg.feature_dim = sc.feature_dim();
  cfg.seed = 4;
  MultiBranchModel m = make_model(cfg, sc.layout);
  std::mt19937_64 rng(5);
  for (Parameter* p : m.parameters())
    for (double& v : p->value.values()) v = std::uniform_real_distribution<double>(-0.5, 0.5)(rng);
  EvalOptions opts;
  opts.exclude_constant = false;
  const EvalReport all = evaluate(m, data, Subset::all, opts);
  const EvalReport occ = evaluate(m, data, Subset::occluded, opts);
  const EvalReport vis = evaluate(m, data, Subset::visible, opts);
  EXPECT_EQ(all.samples, occ.samples + vis.samples);
  const double n = static_cast<double>(all.samples);
  for (std::size_t i = 0; i < all.attributes.size(); ++i) {
    const double joined = (occ.attributes[i].accuracy * static_cast<double>(occ.samples) +
                           vis.attributes[i].accuracy * static_cast<double>(vis.samples)) / n;
    EXPECT_NEAR(all.attributes[i].accuracy, joined, 1e-12);
  }
}

TEST(Report, CsvLayout) {
  const AttributeLayout layout = tiny_layout();
  const std::vector<Labels> gold{{0, 1, 0}, {1, 2, 1}};
  const std::vector<Labels> pred{{0, 1, 1}, {1, 1, 1}};
  std::ostringstream out;
  write_report_csv(out, score_predictions(layout, gold, pred, Subset::all, {"z"}));
  std::istringstream in(out.str());
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], "attribute,accuracy,f1,n");
  EXPECT_EQ(lines[1].substr(0, 2), "x,");
  EXPECT_EQ(lines[2].substr(0, 2), "y,");
  EXPECT_EQ(lines[3].substr(0, 4), "AVG,");
}
