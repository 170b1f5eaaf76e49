#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ssmx/errors.hpp"
#include "ssmx/rng.hpp"

namespace ssmx {

using Shape = std::vector<int>;

int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);  // e.g. "3x4"

// Dense row-major f64 tensor with an optional gradient buffer.
//
// A Tensor is a cheap handle: copies share the underlying data and grad
// buffers. Data is treated as immutable once the tensor has entered an
// operation; the mutable span() accessor exists for construction code
// (generators, initializers) only. Gradient buffers are written by
// Graph::backward and accumulate until zero_grad().
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);  // zero-filled
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, double value);
  static Tensor ones(Shape shape) { return full(std::move(shape), 1.0); }
  static Tensor scalar(double value) { return Tensor({1}, {value}); }
  static Tensor uniform(Shape shape, double lo, double hi, Rng& rng);
  static Tensor normal(Shape shape, double mean, double stddev, Rng& rng);

  bool defined() const { return data_ != nullptr; }
  const Shape& shape() const { return shape_; }
  int ndim() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  int64_t size() const { return data_ ? static_cast<int64_t>(data_->size()) : 0; }

  double operator[](int64_t flat) const { return (*data_)[static_cast<size_t>(flat)]; }
  std::span<const double> values() const;
  std::span<double> span();  // construction-time mutation only

  bool requires_grad() const { return requires_grad_; }
  // Marks a leaf parameter; allocates a zero grad buffer.
  void set_requires_grad(bool on);
  bool has_grad() const { return grad_ != nullptr; }
  std::span<const double> grad() const;
  void zero_grad();

  // Deep copy; the copy never aliases this tensor's buffers.
  Tensor clone(bool requires_grad = false) const;

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;

  // Identity and raw buffers, used by the autodiff tape.
  const std::shared_ptr<std::vector<double>>& data_ptr() const { return data_; }
  const std::shared_ptr<std::vector<double>>& grad_ptr() const { return grad_; }

 private:
  Shape shape_;
  std::shared_ptr<std::vector<double>> data_;
  std::shared_ptr<std::vector<double>> grad_;
  bool requires_grad_ = false;
};

}  // namespace ssmx
