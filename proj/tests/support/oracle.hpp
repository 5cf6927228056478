#pragma once

// Reference implementations written directly from the equations with plain
// loops. They share no code with the library's forward passes and serve as
// the finite-difference oracle for gradient checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "gstam/losses.hpp"
#include "gstam/model.hpp"
#include "gstam/tensor.hpp"

namespace gstam::oracle {

// Signs of every ReLU input seen during a forward pass. Two passes with
// different patterns straddle a kink, where central differences are not a
// valid derivative estimate.
using KinkPattern = std::vector<std::int8_t>;

inline double relu_tracked(double x, KinkPattern* pattern) {
  if (pattern != nullptr) pattern->push_back(x > 0.0 ? 1 : (x < 0.0 ? -1 : 0));
  return x > 0.0 ? x : 0.0;
}

// out[o][t] = b[o] + sum_i sum_j w[o][i*k+j] * x[i][t + j - (k-1)/2]
inline std::vector<std::vector<double>> conv(const std::vector<std::vector<double>>& x, const Tensor& w,
                                             const Tensor& b, std::size_t k) {
  const std::size_t c_in = x.size();
  const std::size_t len = x.front().size();
  const long half = static_cast<long>(k / 2);
  std::vector<std::vector<double>> out(w.rows(), std::vector<double>(len, 0.0));
  for (std::size_t o = 0; o < w.rows(); ++o) {
    for (std::size_t t = 0; t < len; ++t) {
      double acc = b[o];
      for (std::size_t i = 0; i < c_in; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
          const long s = static_cast<long>(t) + static_cast<long>(j) - half;
          if (s < 0 || s >= static_cast<long>(len)) continue;
          acc += w(o, i * k + j) * x[i][static_cast<std::size_t>(s)];
        }
      }
      out[o][t] = acc;
    }
  }
  return out;
}

inline std::vector<double> attention(const std::vector<std::vector<double>>& x, const AttentionParams& p,
                                     KinkPattern* pattern) {
  auto h = conv(x, p.conv1_w.value, p.conv1_b.value, p.k1);
  for (auto& row : h)
    for (double& v : row) v = relu_tracked(v, pattern);
  const auto s = conv(h, p.conv2_w.value, p.conv2_b.value, p.k2).front();
  std::vector<double> a(s.size());
  if (p.variant == AttentionVariant::stam) {
    for (std::size_t t = 0; t < s.size(); ++t) a[t] = 1.0 / (1.0 + std::exp(-s[t]));
  } else {
    double mx = -1e300;
    std::vector<double> r(s.size());
    for (std::size_t t = 0; t < s.size(); ++t) {
      r[t] = relu_tracked(s[t], pattern);
      mx = std::max(mx, r[t]);
    }
    double z = 0.0;
    for (std::size_t t = 0; t < s.size(); ++t) z += std::exp(r[t] - mx);
    for (std::size_t t = 0; t < s.size(); ++t) a[t] = std::exp(r[t] - mx) / z;
  }
  return a;
}

struct LossParts {
  double classification = 0.0;
  double sparsity = 0.0;
  double group = 0.0;
  std::vector<std::vector<double>> attentions;
};

// Classification, l1 and group losses for one segment, identity trunk only.
inline LossParts model_losses(const MultiBranchModel& model, const Tensor& features,
                              const std::vector<std::size_t>& labels, KinkPattern* pattern = nullptr) {
  std::vector<std::vector<double>> x(features.rows(), std::vector<double>(features.cols()));
  for (std::size_t r = 0; r < features.rows(); ++r)
    for (std::size_t t = 0; t < features.cols(); ++t) x[r][t] = features(r, t);
  LossParts out;
  for (std::size_t i = 0; i < model.branches.size(); ++i) {
    const Branch& b = model.branches[i];
    const auto a = attention(x, b.attention, pattern);
    out.attentions.push_back(a);
    const Tensor& w = b.head.weight.value;
    std::vector<double> logits(w.rows(), 0.0);
    for (std::size_t c = 0; c < w.rows(); ++c)
      for (std::size_t r = 0; r < x.size(); ++r)
        for (std::size_t t = 0; t < a.size(); ++t) logits[c] += w(c, r) * x[r][t] * a[t];
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double l : logits) z += std::exp(l - mx);
    const double p = std::exp(logits[labels[i]] - mx) / z;
    out.classification += -std::log(p + 1e-12) / static_cast<double>(b.spec.classes);
    for (double v : a) out.sparsity += std::abs(v);
  }
  const std::size_t len = features.cols();
  for (const auto& g : model.layout.partition.groups) {
    for (std::size_t t = 0; t < len; ++t) {
      double sq = 0.0;
      for (std::size_t i : g.members) sq += out.attentions[i][t] * out.attentions[i][t];
      out.group += std::sqrt(sq) / static_cast<double>(g.members.size());
    }
  }
  return out;
}

inline double total(const LossParts& l, Regularizer r, double lambda) {
  switch (r) {
    case Regularizer::none: return l.classification;
    case Regularizer::sparsity: return l.classification + lambda * l.sparsity;
    case Regularizer::group: return l.classification + lambda * l.group;
  }
  return l.classification;
}

// Passes when |analytic - numeric| <= floor or the relative error is below
// `rel`.
inline double relative_error(double analytic, double numeric, double floor = 1e-8) {
  const double diff = std::abs(analytic - numeric);
  if (diff <= floor) return 0.0;
  return diff / std::max(std::abs(analytic), std::abs(numeric));
}

// Central difference of f with respect to x[index].
inline double central_difference(Tensor& x, std::size_t index, double step, const std::function<double()>& f) {
  const double saved = x[index];
  x[index] = saved + step;
  const double up = f();
  x[index] = saved - step;
  const double down = f();
  x[index] = saved;
  return (up - down) / (2.0 * step);
}

inline Tensor random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double lo = -2.0,
                            double hi = 2.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t(rows, cols);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

}  // namespace gstam::oracle
