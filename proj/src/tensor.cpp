#include "gstam/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "gstam/errors.hpp"

namespace gstam {

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (data_.size() != rows * cols) {
    throw DimensionError("tensor of shape (" + std::to_string(rows) + "," +
                         std::to_string(cols) + ") given " +
                         std::to_string(data_.size()) + " values");
  }
}

Tensor Tensor::vector(std::size_t n, double fill) { return Tensor(n, 1, fill); }

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor(n, 1, std::move(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> values;
  values.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged matrix literal");
    values.insert(values.end(), row.begin(), row.end());
  }
  return Tensor(r, c, std::move(values));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t(n, n);
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

Tensor Tensor::column(std::size_t c) const {
  Tensor out = Tensor::vector(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

Tensor Tensor::columns(std::size_t first, std::size_t count) const {
  if (first + count > cols_) {
    throw DimensionError("column range [" + std::to_string(first) + "," +
                         std::to_string(first + count) + ") exceeds " + shape_string());
  }
  Tensor out(rows_, count);
  for (std::size_t r = 0; r < rows_; ++r) {
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(r * cols_ + first), count,
                out.data_.begin() + static_cast<std::ptrdiff_t>(r * count));
  }
  return out;
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Tensor::shape_string() const {
  return "(" + std::to_string(rows_) + "," + std::to_string(cols_) + ")";
}

void require_finite(const Tensor& t, const std::string& what) {
  if (!t.all_finite()) throw DimensionError(what + " contains non-finite values");
}

}  // namespace gstam
