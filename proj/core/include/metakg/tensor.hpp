#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace metakg {

// Dense row-major float64 tensor. Data is shared between copies; use clone()
// for an independent buffer. Rank is 1 or 2 throughout this codebase; scalars
// are rank-1 tensors of length 1.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int64_t> shape);
  Tensor(std::vector<int64_t> shape, std::vector<double> data);

  static Tensor scalar(double v);
  static Tensor zeros(std::vector<int64_t> shape);
  static Tensor ones(std::vector<int64_t> shape);
  static Tensor full(std::vector<int64_t> shape, double v);

  const std::vector<int64_t>& shape() const { return shape_; }
  int64_t rank() const { return static_cast<int64_t>(shape_.size()); }
  int64_t numel() const;
  int64_t rows() const;
  int64_t cols() const;

  double* data() { return data_->data(); }
  const double* data() const { return data_->data(); }
  std::span<double> span() { return {data_->data(), data_->size()}; }
  std::span<const double> span() const { return {data_->data(), data_->size()}; }

  double& at(int64_t i) { return (*data_)[static_cast<size_t>(i)]; }
  double at(int64_t i) const { return (*data_)[static_cast<size_t>(i)]; }
  double& at(int64_t r, int64_t c) { return (*data_)[static_cast<size_t>(r * cols() + c)]; }
  double at(int64_t r, int64_t c) const { return (*data_)[static_cast<size_t>(r * cols() + c)]; }

  double item() const;  // numel()==1 only

  bool defined() const { return data_ != nullptr; }
  bool all_finite() const;
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  Tensor clone() const;
  void fill(double v);

  std::string shape_str() const;

 private:
  std::vector<int64_t> shape_;
  std::shared_ptr<std::vector<double>> data_;
};

bool bitwise_equal(const Tensor& a, const Tensor& b);
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace metakg
