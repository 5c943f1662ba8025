#include "core/tensor.hpp"

namespace mealgen {

double dot(const Tensor& a, const Tensor& b) {
  require(a.size() == b.size(), "dot: size mismatch");
  return a.vec().dot(b.vec());
}

double norm(const Tensor& a) { return std::sqrt(dot(a, a)); }

double cosine(const Tensor& a, const Tensor& b) {
  double na = norm(a), nb = norm(b);
  require(na > 0.0 && nb > 0.0, "cosine: zero-norm vector");
  return dot(a, b) / (na * nb);
}

void cosine_backward(const Tensor& a, const Tensor& b, double g, Tensor& ga, Tensor& gb) {
  double na = norm(a), nb = norm(b);
  require(na > 0.0 && nb > 0.0, "cosine_backward: zero-norm vector");
  double s = dot(a, b) / (na * nb);
  // d cos / da = b/(|a||b|) - cos * a/|a|^2
  for (long i = 0; i < a.size(); ++i) {
    ga[i] += g * (b[i] / (na * nb) - s * a[i] / (na * na));
    gb[i] += g * (a[i] / (na * nb) - s * b[i] / (nb * nb));
  }
}

}  // namespace mealgen
