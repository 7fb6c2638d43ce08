#pragma once

#include <initializer_list>
#include <span>
#include <vector>

namespace dynlearn {

// Dense row-major matrix of doubles. Scalars are 1x1, row vectors 1xn.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int rows, int cols, double fill = 0.0);

  static Tensor scalar(double v);
  static Tensor row(std::initializer_list<double> v);
  static Tensor from_rows(int rows, int cols, std::initializer_list<double> v);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  long size() const { return static_cast<long>(rows_) * cols_; }
  bool empty() const { return size() == 0; }

  double& operator()(int r, int c) { return d_[static_cast<size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return d_[static_cast<size_t>(r) * cols_ + c]; }

  double* data() { return d_.data(); }
  const double* data() const { return d_.data(); }
  std::span<double> row_span(int r) { return {data() + static_cast<size_t>(r) * cols_, static_cast<size_t>(cols_)}; }
  std::span<const double> row_span(int r) const {
    return {data() + static_cast<size_t>(r) * cols_, static_cast<size_t>(cols_)};
  }

  bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool all_finite() const;
  double max_abs() const;

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<double> d_;
};

// Shape-checked kernels; throw InvalidInput naming the operation on mismatch.
Tensor add(const Tensor& a, const Tensor& b);
Tensor add_row_broadcast(const Tensor& a, const Tensor& bias);  // bias is 1 x cols
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor scale(const Tensor& a, double s);
double sum(const Tensor& a);
double squared_norm(const Tensor& a);

}  // namespace dynlearn
