#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "gstam/model.hpp"
#include "gstam/synthdata.hpp"

namespace gstam {

enum class Subset { all, occluded, visible };

std::string to_string(Subset s);
Subset parse_subset(const std::string& name);
bool in_subset(const VideoSample& v, Subset s);

// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(const Tensor& p);

double attribute_accuracy(std::span<const std::size_t> predictions, std::span<const std::size_t> labels);

// Macro F1 over the classes that occur in the labels or the predictions;
// a class with P + R = 0 scores 0.
double attribute_f1(std::span<const std::size_t> predictions, std::span<const std::size_t> labels,
                    std::size_t classes);

struct AttributeScore {
  std::string name;
  double accuracy = 0.0;
  double f1 = 0.0;
  std::size_t n = 0;
  bool excluded = false;
};

struct EvalReport {
  Subset subset = Subset::all;
  std::size_t samples = 0;
  std::vector<AttributeScore> attributes;
  // Means over the attributes that are not excluded.
  double avg_accuracy = 0.0;
  double avg_f1 = 0.0;
};

// Attributes whose labels are constant over the subset.
std::vector<std::string> constant_attribute_guard(const std::vector<VideoSample>& dataset, Subset subset,
                                                  const AttributeLayout& layout);

struct EvalOptions {
  std::size_t segment = 6;
  bool exclude_constant = true;
};

// labels[n][i] / predictions[n][i]: sample n, attribute i.
EvalReport score_predictions(const AttributeLayout& layout, const std::vector<std::vector<std::size_t>>& labels,
                             const std::vector<std::vector<std::size_t>>& predictions, Subset subset,
                             const std::vector<std::string>& excluded);

EvalReport evaluate(const MultiBranchModel& model, const std::vector<VideoSample>& dataset, Subset subset,
                    const EvalOptions& options = {});

// attribute,accuracy,f1,n rows for the attributes kept, then an AVG row.
void write_report_csv(std::ostream& out, const EvalReport& report);

}  // namespace gstam
