#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "core/check.hpp"
#include "core/rng.hpp"

namespace mealgen {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<Mat>;
using CMatMap = Eigen::Map<const Mat>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using CVecMap = Eigen::Map<const Eigen::VectorXd>;

// Dense double tensor, row-major, shape known at runtime.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<long> shape) : shape_(std::move(shape)) {
    data_.assign(count(shape_), 0.0);
  }

  static long count(const std::vector<long>& shape) {
    long n = 1;
    for (long d : shape) n *= d;
    return n;
  }

  static Tensor zeros(std::vector<long> shape) { return Tensor(std::move(shape)); }

  static Tensor randn(std::vector<long> shape, Rng& rng, double stdev = 1.0) {
    Tensor t(std::move(shape));
    std::normal_distribution<double> d(0.0, stdev);
    for (auto& v : t.data_) v = d(rng);
    return t;
  }

  static Tensor uniform(std::vector<long> shape, Rng& rng, double lo, double hi) {
    Tensor t(std::move(shape));
    std::uniform_real_distribution<double> d(lo, hi);
    for (auto& v : t.data_) v = d(rng);
    return t;
  }

  const std::vector<long>& shape() const { return shape_; }
  int ndim() const { return static_cast<int>(shape_.size()); }
  long dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  long size() const { return static_cast<long>(data_.size()); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](long i) { return data_[static_cast<size_t>(i)]; }
  double operator[](long i) const { return data_[static_cast<size_t>(i)]; }

  // 2-d Eigen view: caller supplies factorization of the size.
  MatMap mat(long rows, long cols) {
    require(rows * cols == size(), "tensor: bad matrix view");
    return MatMap(data(), rows, cols);
  }
  CMatMap mat(long rows, long cols) const {
    require(rows * cols == size(), "tensor: bad matrix view");
    return CMatMap(data(), rows, cols);
  }
  VecMap vec() { return VecMap(data(), size()); }
  CVecMap vec() const { return CVecMap(data(), size()); }

  void zero_() { std::fill(data_.begin(), data_.end(), 0.0); }
  void fill_(double v) { std::fill(data_.begin(), data_.end(), v); }

  void reshape_(std::vector<long> shape) {
    require(count(shape) == size(), "tensor: reshape changes size");
    shape_ = std::move(shape);
  }

  Tensor reshaped(std::vector<long> shape) const {
    Tensor t = *this;
    t.reshape_(std::move(shape));
    return t;
  }

  void add_(const Tensor& other, double scale = 1.0) {
    require(other.size() == size(), "tensor: add size mismatch");
    for (long i = 0; i < size(); ++i) data_[static_cast<size_t>(i)] += scale * other[i];
  }

  void scale_(double a) {
    for (auto& v : data_) v *= a;
  }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

 private:
  std::vector<long> shape_;
  std::vector<double> data_;
};

double dot(const Tensor& a, const Tensor& b);
double norm(const Tensor& a);

// Cosine similarity; throws on zero-norm input.
double cosine(const Tensor& a, const Tensor& b);

// d cos(a,b) / da accumulated into ga with upstream scale g.
void cosine_backward(const Tensor& a, const Tensor& b, double g, Tensor& ga, Tensor& gb);

}  // namespace mealgen
