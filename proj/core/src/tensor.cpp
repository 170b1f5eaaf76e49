#include "ssmx/tensor.hpp"

#include <cmath>

namespace ssmx {

int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int d : s) {
    if (d < 0) throw ShapeError("negative dimension in shape " + shape_str(s));
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& s) {
  if (s.empty()) return "scalar";
  std::string out;
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += 'x';
    out += std::to_string(s[i]);
  }
  return out;
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  data_ = std::make_shared<std::vector<double>>(static_cast<size_t>(shape_numel(shape_)), 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)) {
  if (shape_numel(shape_) != static_cast<int64_t>(data.size())) {
    throw ShapeError("data length " + std::to_string(data.size()) +
                     " does not match shape " + shape_str(shape_));
  }
  data_ = std::make_shared<std::vector<double>>(std::move(data));
}

Tensor Tensor::full(Shape shape, double value) {
  Tensor t(std::move(shape));
  for (double& v : *t.data_) v = value;
  return t;
}

Tensor Tensor::uniform(Shape shape, double lo, double hi, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : *t.data_) v = rng.uniform(lo, hi);
  return t;
}

Tensor Tensor::normal(Shape shape, double mean, double stddev, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : *t.data_) v = rng.normal(mean, stddev);
  return t;
}

std::span<const double> Tensor::values() const {
  if (!data_) return {};
  return {data_->data(), data_->size()};
}

std::span<double> Tensor::span() {
  if (!data_) return {};
  return {data_->data(), data_->size()};
}

void Tensor::set_requires_grad(bool on) {
  requires_grad_ = on;
  if (on && !grad_) {
    grad_ = std::make_shared<std::vector<double>>(data_ ? data_->size() : 0, 0.0);
  }
}

std::span<const double> Tensor::grad() const {
  if (!grad_) throw ContractError("tensor has no gradient buffer");
  return {grad_->data(), grad_->size()};
}

void Tensor::zero_grad() {
  if (grad_) {
    for (double& v : *grad_) v = 0.0;
  }
}

Tensor Tensor::clone(bool requires_grad) const {
  Tensor t(shape_, data_ ? *data_ : std::vector<double>{});
  t.set_requires_grad(requires_grad);
  return t;
}

bool Tensor::all_finite() const {
  if (!data_) return true;
  for (double v : *data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace ssmx
