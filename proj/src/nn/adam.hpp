#pragma once

#include "nn/params.hpp"

namespace mealgen::nn {

struct Adam {
  double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  Adam() = default;
  Adam(ParamList ps, double lr, double beta1 = 0.9, double beta2 = 0.999);

  void step();
  void zero_grad();

 private:
  ParamList ps_;
  std::vector<Tensor> m_, v_;
  long t_ = 0;
};

}  // namespace mealgen::nn
