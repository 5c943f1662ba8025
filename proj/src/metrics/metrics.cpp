#include "metrics/metrics.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "core/check.hpp"

namespace mealgen::metrics {

StatsAccumulator::StatsAccumulator(long dim) : dim_(dim), mean_({dim}), m2_({dim, dim}) {}

void StatsAccumulator::add(const double* feature) {
  ++n_;
  // Welford update with outer-product accumulation
  std::vector<double> delta(static_cast<size_t>(dim_));
  for (long i = 0; i < dim_; ++i) delta[static_cast<size_t>(i)] = feature[i] - mean_[i];
  const double inv_n = 1.0 / static_cast<double>(n_);
  for (long i = 0; i < dim_; ++i) mean_[i] += delta[static_cast<size_t>(i)] * inv_n;
  const double scale = static_cast<double>(n_ - 1) * inv_n;
  for (long i = 0; i < dim_; ++i)
    for (long j = 0; j < dim_; ++j)
      m2_[i * dim_ + j] += scale * delta[static_cast<size_t>(i)] * delta[static_cast<size_t>(j)];
}

void StatsAccumulator::add_batch(const Tensor& features) {
  require(features.ndim() == 2 && features.dim(1) == dim_, "stats: feature width mismatch");
  for (long n = 0; n < features.dim(0); ++n) add(features.data() + n * dim_);
}

void StatsAccumulator::merge(const StatsAccumulator& other) {
  require(other.dim_ == dim_, "stats: dim mismatch in merge");
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const long na = n_, nb = other.n_, n = na + nb;
  std::vector<double> delta(static_cast<size_t>(dim_));
  for (long i = 0; i < dim_; ++i) delta[static_cast<size_t>(i)] = other.mean_[i] - mean_[i];
  const double fb = static_cast<double>(nb) / static_cast<double>(n);
  for (long i = 0; i < dim_; ++i) mean_[i] += delta[static_cast<size_t>(i)] * fb;
  const double cross = static_cast<double>(na) * static_cast<double>(nb) / static_cast<double>(n);
  for (long i = 0; i < dim_; ++i)
    for (long j = 0; j < dim_; ++j)
      m2_[i * dim_ + j] += other.m2_[i * dim_ + j] +
                           cross * delta[static_cast<size_t>(i)] * delta[static_cast<size_t>(j)];
  n_ = n;
}

ActivationStats StatsAccumulator::finalize() const {
  require(n_ >= 2, "activation_stats: need at least 2 samples");
  ActivationStats s;
  s.mean = mean_;
  s.covariance = m2_;
  s.covariance.scale_(1.0 / static_cast<double>(n_));
  s.count = n_;
  return s;
}

std::pair<double, double> inception_score(const Tensor& class_probs, int splits) {
  require(class_probs.ndim() == 2, "inception_score: want [n, C]");
  const long n = class_probs.dim(0), C = class_probs.dim(1);
  require(splits >= 1 && n >= splits, "inception_score: need n >= splits >= 1");
  for (long i = 0; i < n; ++i) {
    double sum = 0.0;
    for (long c = 0; c < C; ++c) {
      const double p = class_probs[i * C + c];
      require(p >= 0.0, "inception_score: row is not a distribution (negative entry)");
      sum += p;
    }
    require(std::abs(sum - 1.0) <= 1e-5,
            "inception_score: row " + std::to_string(i) + " does not sum to 1");
  }

  std::vector<double> scores;
  for (int s = 0; s < splits; ++s) {
    const long lo = n * s / splits, hi = n * (s + 1) / splits;
    std::vector<double> marginal(static_cast<size_t>(C), 0.0);
    for (long i = lo; i < hi; ++i)
      for (long c = 0; c < C; ++c) marginal[static_cast<size_t>(c)] += class_probs[i * C + c];
    for (auto& m : marginal) m /= static_cast<double>(hi - lo);
    double mean_kl = 0.0;
    for (long i = lo; i < hi; ++i) {
      double kl = 0.0;
      for (long c = 0; c < C; ++c) {
        const double p = class_probs[i * C + c];
        if (p > 0.0) kl += p * (std::log(p) - std::log(marginal[static_cast<size_t>(c)]));
      }
      mean_kl += kl;
    }
    mean_kl /= static_cast<double>(hi - lo);
    scores.push_back(std::exp(mean_kl));
  }
  double mean = 0.0;
  for (double v : scores) mean += v;
  mean /= static_cast<double>(scores.size());
  double var = 0.0;
  for (double v : scores) var += (v - mean) * (v - mean);
  var /= static_cast<double>(scores.size());
  return {mean, std::sqrt(var)};
}

namespace {

constexpr double kEigClipTol = 1e-10;

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, const char* what) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  require(eig.info() == Eigen::Success, std::string("fid: eigendecomposition failed for ") + what);
  Eigen::VectorXd vals = eig.eigenvalues();
  for (long i = 0; i < vals.size(); ++i) {
    require(vals[i] >= -kEigClipTol, std::string("fid: matrix not PSD beyond tolerance (") + what + ")");
    vals[i] = std::sqrt(std::max(0.0, vals[i]));
  }
  return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
}

Eigen::MatrixXd as_symmetric(const Tensor& cov, const char* what) {
  const long d = cov.dim(0);
  require(cov.ndim() == 2 && cov.dim(1) == d, "fid: covariance must be square");
  Eigen::MatrixXd m(d, d);
  for (long i = 0; i < d; ++i)
    for (long j = 0; j < d; ++j) {
      m(i, j) = cov[i * d + j];
      require(std::abs(cov[i * d + j] - cov[j * d + i]) <= 1e-8,
              std::string("fid: covariance not symmetric (") + what + ")");
    }
  return 0.5 * (m + m.transpose());
}

}  // namespace

double fid(const ActivationStats& a, const ActivationStats& b) {
  require(a.mean.size() == b.mean.size(), "fid: dimension mismatch");
  const long d = a.mean.size();
  const Eigen::MatrixXd ca = as_symmetric(a.covariance, "a");
  const Eigen::MatrixXd cb = as_symmetric(b.covariance, "b");

  double mean_term = 0.0;
  for (long i = 0; i < d; ++i) {
    const double diff = a.mean[i] - b.mean[i];
    mean_term += diff * diff;
  }

  const Eigen::MatrixXd sa = psd_sqrt(ca, "a");
  Eigen::MatrixXd inner = sa * cb * sa;
  inner = 0.5 * (inner + inner.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(inner);
  require(eig.info() == Eigen::Success, "fid: eigendecomposition failed for product");
  double tr_sqrt = 0.0;
  for (long i = 0; i < d; ++i) {
    const double v = eig.eigenvalues()[i];
    require(v >= -kEigClipTol, "fid: product matrix not PSD beyond tolerance");
    tr_sqrt += std::sqrt(std::max(0.0, v));
  }
  return mean_term + ca.trace() + cb.trace() - 2.0 * tr_sqrt;
}

}  // namespace mealgen::metrics
