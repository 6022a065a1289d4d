#include "crossaug/array.h"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>

namespace crossaug {

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ')';
  return out.str();
}

namespace {

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

}  // namespace

Array::Array(Shape shape, double fill)
    : shape_(std::move(shape)), data_(element_count(shape_), fill) {
  if (shape_.empty()) throw ShapeError("array needs at least one dimension");
}

Array::Array(std::size_t rows, std::size_t cols, double fill)
    : shape_{rows, cols}, data_(rows * cols, fill) {}

Array::Array(std::size_t rows, std::size_t cols, std::vector<double> values)
    : shape_{rows, cols}, data_(std::move(values)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("array of shape " + shape_string(shape_) + " given " +
                     std::to_string(data_.size()) + " values");
  }
}

std::size_t Array::rows() const {
  if (shape_.empty()) return 0;
  std::size_t r = 1;
  for (std::size_t i = 0; i + 1 < shape_.size(); ++i) r *= shape_[i];
  return r;
}

std::size_t Array::cols() const { return shape_.empty() ? 0 : shape_.back(); }

void Array::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Array::reshape(Shape shape) {
  if (element_count(shape) != data_.size()) {
    throw ShapeError("cannot reshape " + shape_string(shape_) + " to " +
                     shape_string(shape));
  }
  shape_ = std::move(shape);
}

}  // namespace crossaug
