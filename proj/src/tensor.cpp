#include "dynlearn/tensor.hpp"

#include <cmath>
#include <string>

#include "dynlearn/errors.hpp"

namespace dynlearn {

namespace {

void require(bool ok, const char* op, const std::string& detail) {
  if (!ok) throw InvalidInput(std::string(op) + ": " + detail);
}

std::string shape_str(const Tensor& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

}  // namespace

Tensor::Tensor(int rows, int cols, double fill)
    : rows_(rows), cols_(cols), d_(static_cast<size_t>(rows) * cols, fill) {
  require(rows >= 0 && cols >= 0, "tensor", "negative dimension");
}

Tensor Tensor::scalar(double v) {
  Tensor t(1, 1);
  t(0, 0) = v;
  return t;
}

Tensor Tensor::row(std::initializer_list<double> v) {
  Tensor t(1, static_cast<int>(v.size()));
  int j = 0;
  for (double x : v) t(0, j++) = x;
  return t;
}

Tensor Tensor::from_rows(int rows, int cols, std::initializer_list<double> v) {
  require(static_cast<long>(v.size()) == static_cast<long>(rows) * cols, "from_rows",
          "initializer size does not match shape");
  Tensor t(rows, cols);
  int i = 0;
  for (double x : v) t.data()[i++] = x;
  return t;
}

bool Tensor::all_finite() const {
  for (double x : d_)
    if (!std::isfinite(x)) return false;
  return true;
}

double Tensor::max_abs() const {
  double m = 0.0;
  for (double x : d_) m = std::max(m, std::fabs(x));
  return m;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require(a.same_shape(b), "add", shape_str(a) + " vs " + shape_str(b));
  Tensor c = a;
  for (long i = 0; i < c.size(); ++i) c.data()[i] += b.data()[i];
  return c;
}

Tensor add_row_broadcast(const Tensor& a, const Tensor& bias) {
  require(bias.rows() == 1 && bias.cols() == a.cols(), "add_row",
          shape_str(a) + " vs bias " + shape_str(bias));
  Tensor c = a;
  for (int r = 0; r < c.rows(); ++r)
    for (int j = 0; j < c.cols(); ++j) c(r, j) += bias(0, j);
  return c;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require(a.same_shape(b), "sub", shape_str(a) + " vs " + shape_str(b));
  Tensor c = a;
  for (long i = 0; i < c.size(); ++i) c.data()[i] -= b.data()[i];
  return c;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require(a.same_shape(b), "mul", shape_str(a) + " vs " + shape_str(b));
  Tensor c = a;
  for (long i = 0; i < c.size(); ++i) c.data()[i] *= b.data()[i];
  return c;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.cols() == b.rows(), "matmul", shape_str(a) + " vs " + shape_str(b));
  Tensor c(a.rows(), b.cols());
  const int n = a.rows(), k = a.cols(), m = b.cols();
  for (int i = 0; i < n; ++i) {
    double* ci = c.data() + static_cast<size_t>(i) * m;
    for (int p = 0; p < k; ++p) {
      const double aip = a(i, p);
      const double* bp = b.data() + static_cast<size_t>(p) * m;
      for (int j = 0; j < m; ++j) ci[j] += aip * bp[j];
    }
  }
  return c;
}

Tensor transpose(const Tensor& a) {
  Tensor c(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) c(j, i) = a(i, j);
  return c;
}

Tensor scale(const Tensor& a, double s) {
  Tensor c = a;
  for (long i = 0; i < c.size(); ++i) c.data()[i] *= s;
  return c;
}

double sum(const Tensor& a) {
  double s = 0.0;
  for (long i = 0; i < a.size(); ++i) s += a.data()[i];
  return s;
}

double squared_norm(const Tensor& a) {
  double s = 0.0;
  for (long i = 0; i < a.size(); ++i) s += a.data()[i] * a.data()[i];
  return s;
}

}  // namespace dynlearn
