#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace chainkit {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_to_string(const Shape& shape);

// Dense row-major array of 64-bit reals. Rank 0 is a scalar holding one
// element. This is the leaf type of every state tree.
class Array {
 public:
  Array() : Array(0.0) {}
  explicit Array(double value) : shape_(), data_(1, value) {}
  Array(Shape shape, double fill);
  Array(Shape shape, std::vector<double> data);

  static Array scalar(double value) { return Array(value); }
  static Array zeros(Shape shape) { return Array(std::move(shape), 0.0); }
  static Array full(Shape shape, double fill) { return Array(std::move(shape), fill); }
  static Array from_vector(std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  double& operator[](std::size_t flat_index) { return data_[flat_index]; }
  double operator[](std::size_t flat_index) const { return data_[flat_index]; }

  double at(std::initializer_list<std::size_t> index) const;
  double& at(std::initializer_list<std::size_t> index);

  // Value of a rank-0 or single-element array.
  double as_scalar() const;

  Array map(const std::function<double(double)>& f) const;
  static Array zip(const Array& a, const Array& b,
                   const std::function<double(double, double)>& f);

  double sum() const;
  double max_abs() const;

  // Sums away every axis after the first num_batch_dims, keeping the batch
  // prefix. num_batch_dims == 0 collapses to a scalar.
  Array sum_over_event(std::size_t num_batch_dims) const;

  Array reshape(Shape new_shape) const;

  // Leading-axis (chain) helpers; all require rank >= 1.
  std::size_t leading_extent() const;
  std::size_t row_size() const;
  Array row(std::size_t i) const;
  void set_row(std::size_t i, const Array& src);

  // History-buffer write: copies src into the slot-th row of this array.
  void write_slot(std::size_t slot, const Array& src) { set_row(slot, src); }

  Array operator-() const;
  Array& operator+=(const Array& other);
  Array& operator-=(const Array& other);
  Array& operator*=(double factor);

 private:
  std::size_t flat_offset(std::initializer_list<std::size_t> index) const;

  Shape shape_;
  std::vector<double> data_;
};

Array operator+(const Array& a, const Array& b);
Array operator-(const Array& a, const Array& b);
Array operator*(const Array& a, const Array& b);
Array operator/(const Array& a, const Array& b);
Array operator+(const Array& a, double b);
Array operator-(const Array& a, double b);
Array operator*(const Array& a, double b);
Array operator/(const Array& a, double b);
Array operator*(double a, const Array& b);

bool same_shape(const Array& a, const Array& b);
bool bitwise_equal(const Array& a, const Array& b);

// Per-chain selection along the leading axis: row i of the result comes from
// on_true when accept[i] is nonzero, else from on_false.
Array select_rows(const Array& accept, const Array& on_true, const Array& on_false);

// Combines x with a parameter that is either the same shape, a scalar, or the
// per-row shape of x (then shared across the leading axis).
Array zip_row_broadcast(const Array& x, const Array& param,
                        const std::function<double(double, double)>& f);

}  // namespace chainkit
