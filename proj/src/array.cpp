#include "chainkit/array.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <utility>

#include "chainkit/errors.hpp"

namespace chainkit {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t extent : shape) n *= extent;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out += ", ";
    out += std::to_string(shape[i]);
  }
  out += "]";
  return out;
}

Array::Array(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Array::Array(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_size(shape_)) {
    throw ShapeError("array data size " + std::to_string(data_.size()) +
                     " does not match shape " + shape_to_string(shape_));
  }
}

Array Array::from_vector(std::vector<double> values) {
  Shape shape{values.size()};
  return Array(std::move(shape), std::move(values));
}

std::size_t Array::flat_offset(std::initializer_list<std::size_t> index) const {
  if (index.size() != shape_.size()) {
    throw ShapeError("index rank " + std::to_string(index.size()) +
                     " does not match array rank " + std::to_string(shape_.size()));
  }
  std::size_t offset = 0;
  std::size_t axis = 0;
  for (std::size_t i : index) {
    if (i >= shape_[axis]) throw ShapeError("index out of range");
    offset = offset * shape_[axis] + i;
    ++axis;
  }
  return offset;
}

double Array::at(std::initializer_list<std::size_t> index) const {
  return data_[flat_offset(index)];
}

double& Array::at(std::initializer_list<std::size_t> index) {
  return data_[flat_offset(index)];
}

double Array::as_scalar() const {
  if (data_.size() != 1) {
    throw ShapeError("as_scalar on array of shape " + shape_to_string(shape_));
  }
  return data_[0];
}

Array Array::map(const std::function<double(double)>& f) const {
  Array out = *this;
  for (double& v : out.data_) v = f(v);
  return out;
}

Array Array::zip(const Array& a, const Array& b,
                 const std::function<double(double, double)>& f) {
  if (!same_shape(a, b)) {
    throw ShapeError("shape mismatch: " + shape_to_string(a.shape_) + " vs " +
                     shape_to_string(b.shape_));
  }
  Array out = a;
  for (std::size_t i = 0; i < out.data_.size(); ++i) out.data_[i] = f(a.data_[i], b.data_[i]);
  return out;
}

double Array::sum() const {
  double total = 0.0;
  for (double v : data_) total += v;
  return total;
}

double Array::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

Array Array::sum_over_event(std::size_t num_batch_dims) const {
  if (num_batch_dims > shape_.size()) {
    throw ShapeError("num_batch_dims " + std::to_string(num_batch_dims) +
                     " exceeds rank of shape " + shape_to_string(shape_));
  }
  Shape batch_shape(shape_.begin(), shape_.begin() + num_batch_dims);
  std::size_t batch = shape_size(batch_shape);
  std::size_t event = data_.size() / std::max<std::size_t>(batch, 1);
  Array out(batch_shape, 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    double total = 0.0;
    for (std::size_t e = 0; e < event; ++e) total += data_[b * event + e];
    out.data_[b] = total;
  }
  return out;
}

Array Array::reshape(Shape new_shape) const {
  if (shape_size(new_shape) != data_.size()) {
    throw ShapeError("reshape to " + shape_to_string(new_shape) +
                     " changes element count");
  }
  Array out = *this;
  out.shape_ = std::move(new_shape);
  return out;
}

std::size_t Array::leading_extent() const {
  if (shape_.empty()) throw ShapeError("rank-0 array has no leading axis");
  return shape_[0];
}

std::size_t Array::row_size() const {
  std::size_t c = leading_extent();
  return c == 0 ? 0 : data_.size() / c;
}

Array Array::row(std::size_t i) const {
  if (i >= leading_extent()) throw ShapeError("row index out of range");
  Shape row_shape(shape_.begin() + 1, shape_.end());
  std::size_t n = row_size();
  std::vector<double> values(data_.begin() + i * n, data_.begin() + (i + 1) * n);
  return Array(std::move(row_shape), std::move(values));
}

void Array::set_row(std::size_t i, const Array& src) {
  if (i >= leading_extent()) throw ShapeError("row index out of range");
  std::size_t n = row_size();
  if (src.size() != n) {
    throw ShapeError("row source has " + std::to_string(src.size()) +
                     " elements, expected " + std::to_string(n));
  }
  std::copy(src.data_.begin(), src.data_.end(), data_.begin() + i * n);
}

Array Array::operator-() const {
  return map([](double v) { return -v; });
}

Array& Array::operator+=(const Array& other) {
  *this = zip(*this, other, [](double a, double b) { return a + b; });
  return *this;
}

Array& Array::operator-=(const Array& other) {
  *this = zip(*this, other, [](double a, double b) { return a - b; });
  return *this;
}

Array& Array::operator*=(double factor) {
  for (double& v : data()) v *= factor;
  return *this;
}

Array operator+(const Array& a, const Array& b) {
  return Array::zip(a, b, [](double x, double y) { return x + y; });
}
Array operator-(const Array& a, const Array& b) {
  return Array::zip(a, b, [](double x, double y) { return x - y; });
}
Array operator*(const Array& a, const Array& b) {
  return Array::zip(a, b, [](double x, double y) { return x * y; });
}
Array operator/(const Array& a, const Array& b) {
  return Array::zip(a, b, [](double x, double y) { return x / y; });
}
Array operator+(const Array& a, double b) {
  return a.map([b](double x) { return x + b; });
}
Array operator-(const Array& a, double b) {
  return a.map([b](double x) { return x - b; });
}
Array operator*(const Array& a, double b) {
  return a.map([b](double x) { return x * b; });
}
Array operator/(const Array& a, double b) {
  return a.map([b](double x) { return x / b; });
}
Array operator*(double a, const Array& b) { return b * a; }

bool same_shape(const Array& a, const Array& b) { return a.shape() == b.shape(); }

bool bitwise_equal(const Array& a, const Array& b) {
  if (!same_shape(a, b)) return false;
  return std::memcmp(a.data().data(), b.data().data(),
                     a.size() * sizeof(double)) == 0;
}

Array select_rows(const Array& accept, const Array& on_true, const Array& on_false) {
  if (!same_shape(on_true, on_false)) {
    throw ShapeError("select_rows branches disagree on shape");
  }
  if (accept.rank() != 1 || on_true.rank() < 1 ||
      accept.leading_extent() != on_true.leading_extent()) {
    throw ShapeError("select_rows mask must be [C] matching the leading axis");
  }
  Array out = on_false;
  std::size_t n = on_true.row_size();
  for (std::size_t c = 0; c < accept.leading_extent(); ++c) {
    if (accept[c] != 0.0) {
      for (std::size_t e = 0; e < n; ++e) out[c * n + e] = on_true[c * n + e];
    }
  }
  return out;
}

Array zip_row_broadcast(const Array& x, const Array& param,
                        const std::function<double(double, double)>& f) {
  if (param.size() == 1) {
    double p = param[0];
    return x.map([&](double v) { return f(v, p); });
  }
  if (same_shape(x, param)) return Array::zip(x, param, f);
  if (x.rank() >= 1 &&
      Shape(x.shape().begin() + 1, x.shape().end()) == param.shape()) {
    Array out = x;
    std::size_t n = x.row_size();
    for (std::size_t c = 0; c < x.leading_extent(); ++c) {
      for (std::size_t e = 0; e < n; ++e) {
        out[c * n + e] = f(x[c * n + e], param[e]);
      }
    }
    return out;
  }
  throw ShapeError("parameter shape " + shape_to_string(param.shape()) +
                   " does not broadcast against " + shape_to_string(x.shape()));
}

}  // namespace chainkit
