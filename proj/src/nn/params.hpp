#pragma once

#include <string>
#include <vector>

#include "core/tensor.hpp"

namespace mealgen::nn {

// Trainable tensor with its gradient accumulator.
struct Param {
  Tensor v;
  Tensor g;
  std::string name;

  Param() = default;
  Param(std::vector<long> shape, std::string n) : v(shape), g(shape), name(std::move(n)) {}

  void init_randn(Rng& rng, double stdev) { v = Tensor::randn(v.shape(), rng, stdev); }
  void init_uniform(Rng& rng, double lo, double hi) { v = Tensor::uniform(v.shape(), rng, lo, hi); }
  void zero_grad() { g.zero_(); }
};

using ParamList = std::vector<Param*>;

inline void zero_grads(const ParamList& ps) {
  for (auto* p : ps) p->zero_grad();
}

inline long param_count(const ParamList& ps) {
  long n = 0;
  for (auto* p : ps) n += p->v.size();
  return n;
}

}  // namespace mealgen::nn
