#include "metakg/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace metakg {

namespace {
int64_t shape_numel(const std::vector<int64_t>& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d < 0) throw std::invalid_argument("negative tensor extent");
    n *= d;
  }
  return n;
}
}  // namespace

Tensor::Tensor(std::vector<int64_t> shape)
    : shape_(std::move(shape)),
      data_(std::make_shared<std::vector<double>>(static_cast<size_t>(shape_numel(shape_)), 0.0)) {}

Tensor::Tensor(std::vector<int64_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::make_shared<std::vector<double>>(std::move(data))) {
  if (static_cast<int64_t>(data_->size()) != shape_numel(shape_)) {
    throw std::invalid_argument("tensor data length does not match shape " + shape_str());
  }
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::zeros(std::vector<int64_t> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::ones(std::vector<int64_t> shape) { return full(std::move(shape), 1.0); }

Tensor Tensor::full(std::vector<int64_t> shape, double v) {
  Tensor t(std::move(shape));
  t.fill(v);
  return t;
}

int64_t Tensor::numel() const { return data_ ? static_cast<int64_t>(data_->size()) : 0; }

int64_t Tensor::rows() const {
  if (rank() != 2) throw std::invalid_argument("rows() on non-matrix tensor " + shape_str());
  return shape_[0];
}

int64_t Tensor::cols() const {
  if (rank() != 2) throw std::invalid_argument("cols() on non-matrix tensor " + shape_str());
  return shape_[1];
}

double Tensor::item() const {
  if (numel() != 1) throw std::invalid_argument("item() on tensor with " + shape_str());
  return (*data_)[0];
}

bool Tensor::all_finite() const {
  if (!data_) return true;
  for (double v : *data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor Tensor::clone() const {
  Tensor t;
  t.shape_ = shape_;
  t.data_ = std::make_shared<std::vector<double>>(*data_);
  return t;
}

void Tensor::fill(double v) {
  for (double& x : *data_) x = v;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << "x";
    os << shape_[i];
  }
  os << "]";
  return os.str();
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) return false;
  auto sa = a.span();
  auto sb = b.span();
  for (size_t i = 0; i < sa.size(); ++i) {
    // bit-level compare, distinguishes -0.0 and NaN payloads
    if (std::memcmp(&sa[i], &sb[i], sizeof(double)) != 0) return false;
  }
  return true;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("max_abs_diff: shape mismatch");
  double m = 0.0;
  auto sa = a.span();
  auto sb = b.span();
  for (size_t i = 0; i < sa.size(); ++i) m = std::max(m, std::fabs(sa[i] - sb[i]));
  return m;
}

}  // namespace metakg
