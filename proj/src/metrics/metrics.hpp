#pragma once

#include <utility>

#include "core/tensor.hpp"

namespace mealgen::metrics {

struct ActivationStats {
  Tensor mean;        // [d]
  Tensor covariance;  // [d,d], symmetric PSD, population (1/n) normalization
  long count = 0;     // 1/n keeps the statistics fixed under set duplication
};

// Streaming mean/covariance with associative merge, so feature extraction can
// be chunked and the result is independent of chunking.
class StatsAccumulator {
 public:
  StatsAccumulator() = default;
  explicit StatsAccumulator(long dim);

  void add(const double* feature);
  void add_batch(const Tensor& features);  // [n, d]
  void merge(const StatsAccumulator& other);
  ActivationStats finalize() const;  // errors with fewer than 2 samples

  long count() const { return n_; }

 private:
  long dim_ = 0, n_ = 0;
  Tensor mean_, m2_;
};

// Inception score over per-image class distributions [n, C]: exp of the mean
// KL(p(y|x) || p(y)) per split; returns (mean, std) across splits.
std::pair<double, double> inception_score(const Tensor& class_probs, int splits);

// Frechet distance between Gaussian fits:
// |mu_a - mu_b|^2 + Tr(Sa + Sb - 2 (Sa Sb)^{1/2}), symmetric matrix square
// root via eigendecomposition of Sa^{1/2} Sb Sa^{1/2}. Eigenvalues in
// [-1e-10, 0) are clipped to 0; anything below -1e-10 is an error.
double fid(const ActivationStats& a, const ActivationStats& b);

}  // namespace mealgen::metrics
