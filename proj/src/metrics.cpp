#include "gstam/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "gstam/errors.hpp"
#include "gstam/trainer.hpp"

namespace gstam {

std::string to_string(Subset s) {
  switch (s) {
    case Subset::all: return "all";
    case Subset::occluded: return "occluded";
    case Subset::visible: return "visible";
  }
  return "all";
}

Subset parse_subset(const std::string& name) {
  if (name == "all") return Subset::all;
  if (name == "occluded") return Subset::occluded;
  if (name == "visible") return Subset::visible;
  throw ConfigError("unknown subset '" + name + "' (expected all, occluded or visible)");
}

bool in_subset(const VideoSample& v, Subset s) {
  switch (s) {
    case Subset::all: return true;
    case Subset::occluded: return v.is_occluded();
    case Subset::visible: return !v.is_occluded();
  }
  return true;
}

std::size_t argmax(const Tensor& p) {
  if (p.size() == 0) throw DimensionError("argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i)
    if (p[i] > p[best]) best = i;
  return best;
}

double attribute_accuracy(std::span<const std::size_t> predictions, std::span<const std::size_t> labels) {
  if (predictions.size() != labels.size()) throw EvaluationError("prediction and label counts differ");
  if (labels.empty()) throw EvaluationError("accuracy of an empty set");
  std::size_t hits = 0;
  for (std::size_t n = 0; n < labels.size(); ++n) hits += predictions[n] == labels[n] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double attribute_f1(std::span<const std::size_t> predictions, std::span<const std::size_t> labels,
                    std::size_t classes) {
  if (predictions.size() != labels.size()) throw EvaluationError("prediction and label counts differ");
  if (labels.empty()) throw EvaluationError("F1 of an empty set");
  std::vector<std::size_t> tp(classes, 0);
  std::vector<std::size_t> fp(classes, 0);
  std::vector<std::size_t> fn(classes, 0);
  for (std::size_t n = 0; n < labels.size(); ++n) {
    if (labels[n] >= classes || predictions[n] >= classes) {
      throw EvaluationError("class index out of range for " + std::to_string(classes) + " classes");
    }
    if (predictions[n] == labels[n]) {
      ++tp[labels[n]];
    } else {
      ++fp[predictions[n]];
      ++fn[labels[n]];
    }
  }
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    if (tp[c] + fp[c] + fn[c] == 0) continue;
    ++counted;
    const double precision = tp[c] + fp[c] == 0 ? 0.0 : static_cast<double>(tp[c]) / static_cast<double>(tp[c] + fp[c]);
    const double recall = tp[c] + fn[c] == 0 ? 0.0 : static_cast<double>(tp[c]) / static_cast<double>(tp[c] + fn[c]);
    if (precision + recall > 0.0) total += 2.0 * precision * recall / (precision + recall);
  }
  return total / static_cast<double>(counted);
}

std::vector<std::string> constant_attribute_guard(const std::vector<VideoSample>& dataset, Subset subset,
                                                  const AttributeLayout& layout) {
  std::vector<std::set<std::size_t>> seen(layout.branches.size());
  for (const VideoSample& v : dataset) {
    if (!in_subset(v, subset)) continue;
    for (std::size_t i = 0; i < layout.branches.size() && i < v.labels.size(); ++i) seen[i].insert(v.labels[i]);
  }
  std::vector<std::string> out;
  for (std::size_t i = 0; i < layout.branches.size(); ++i)
    if (seen[i].size() <= 1) out.push_back(layout.branches[i].name);
  return out;
}

EvalReport score_predictions(const AttributeLayout& layout, const std::vector<std::vector<std::size_t>>& labels,
                             const std::vector<std::vector<std::size_t>>& predictions, Subset subset,
                             const std::vector<std::string>& excluded) {
  if (labels.size() != predictions.size()) throw EvaluationError("prediction and label counts differ");
  if (labels.empty()) throw EvaluationError("no samples in subset '" + to_string(subset) + "'");
  const std::size_t branches = layout.branches.size();
  EvalReport report;
  report.subset = subset;
  report.samples = labels.size();
  std::size_t kept = 0;
  for (std::size_t i = 0; i < branches; ++i) {
    std::vector<std::size_t> y;
    std::vector<std::size_t> yhat;
    y.reserve(labels.size());
    yhat.reserve(labels.size());
    for (std::size_t n = 0; n < labels.size(); ++n) {
      if (labels[n].size() != branches || predictions[n].size() != branches) {
        throw EvaluationError("sample " + std::to_string(n) + " does not carry " + std::to_string(branches) + " attributes");
      }
      y.push_back(labels[n][i]);
      yhat.push_back(predictions[n][i]);
    }
    AttributeScore score;
    score.name = layout.branches[i].name;
    score.n = y.size();
    score.accuracy = attribute_accuracy(yhat, y);
    score.f1 = attribute_f1(yhat, y, layout.branches[i].classes);
    score.excluded = std::find(excluded.begin(), excluded.end(), score.name) != excluded.end();
    if (!score.excluded) {
      report.avg_accuracy += score.accuracy;
      report.avg_f1 += score.f1;
      ++kept;
    }
    report.attributes.push_back(std::move(score));
  }
  if (kept == 0) {
    throw EvaluationError("every attribute is excluded on subset '" + to_string(subset) + "'");
  }
  report.avg_accuracy /= static_cast<double>(kept);
  report.avg_f1 /= static_cast<double>(kept);
  return report;
}

EvalReport evaluate(const MultiBranchModel& model, const std::vector<VideoSample>& dataset, Subset subset,
                    const EvalOptions& options) {
  std::vector<std::vector<std::size_t>> labels;
  std::vector<std::vector<std::size_t>> predictions;
  for (const VideoSample& v : dataset) {
    if (!in_subset(v, subset)) continue;
    auto inference = infer_trajectory(model, v.frames, options.segment);
    if (!inference) continue;
    std::vector<std::size_t> pred;
    pred.reserve(inference->predictions.size());
    for (const Tensor& p : inference->predictions) pred.push_back(argmax(p));
    labels.push_back(v.labels);
    predictions.push_back(std::move(pred));
  }
  if (labels.empty()) {
    throw EvaluationError("subset '" + to_string(subset) + "' is empty after filtering");
  }
  std::vector<std::string> excluded;
  if (options.exclude_constant) {
    for (std::size_t i = 0; i < model.layout.branches.size(); ++i) {
      const std::size_t first = labels.front()[i];
      const bool constant = std::all_of(labels.begin(), labels.end(),
                                        [&](const std::vector<std::size_t>& y) { return y[i] == first; });
      if (constant) excluded.push_back(model.layout.branches[i].name);
    }
  }
  return score_predictions(model.layout, labels, predictions, subset, excluded);
}

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9f", v);
  return buf;
}

}  // namespace

void write_report_csv(std::ostream& out, const EvalReport& report) {
  out << "attribute,accuracy,f1,n\n";
  for (const AttributeScore& a : report.attributes) {
    if (a.excluded) continue;
    out << a.name << ',' << fmt_double(a.accuracy) << ',' << fmt_double(a.f1) << ',' << a.n << '\n';
  }
  out << "AVG," << fmt_double(report.avg_accuracy) << ',' << fmt_double(report.avg_f1) << ',' << report.samples
      << '\n';
}

}  // namespace gstam
