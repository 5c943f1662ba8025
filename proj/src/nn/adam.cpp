#include "nn/adam.hpp"

#include <cmath>

namespace mealgen::nn {

Adam::Adam(ParamList ps, double lr, double beta1, double beta2)
    : lr(lr), beta1(beta1), beta2(beta2), ps_(std::move(ps)) {
  for (auto* p : ps_) {
    m_.emplace_back(p->v.shape());
    v_.emplace_back(p->v.shape());
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
  for (size_t k = 0; k < ps_.size(); ++k) {
    Param& p = *ps_[k];
    Tensor& m = m_[k];
    Tensor& v = v_[k];
    for (long i = 0; i < p.v.size(); ++i) {
      const double g = p.g[i];
      m[i] = beta1 * m[i] + (1.0 - beta1) * g;
      v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
      p.v[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
  }
}

void Adam::zero_grad() {
  for (auto* p : ps_) p->zero_grad();
}

}  // namespace mealgen::nn
