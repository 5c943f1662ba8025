#pragma once

#include <vector>

#include "nn/params.hpp"

namespace mealgen::nn {

// Single-direction LSTM over padded batches. Positions at or beyond a
// sequence's length produce zero states and receive no gradient.
struct Lstm {
  int in_dim = 0, hid = 0;
  Param w_ih;  // [4H, in], gate order (i, f, g, o)
  Param w_hh;  // [4H, H]
  Param b;     // [4H]

  Lstm() = default;
  Lstm(int in_dim, int hid, Rng& rng, const std::string& name);

  Tensor forward(const Tensor& x, const std::vector<int>& lengths);  // [B,T,in] -> [B,T,H]
  Tensor backward(const Tensor& gh);                                 // -> gx [B,T,in]
  void params(ParamList& out);

 private:
  Tensor x_, gates_, c_, tanhc_, h_;
  std::vector<int> lengths_;
};

// Bi-directional LSTM; output concatenates forward and reversed hidden states.
struct BiLstm {
  Lstm fwd, bwd;

  BiLstm() = default;
  BiLstm(int in_dim, int hid_per_dir, Rng& rng, const std::string& name);

  Tensor forward(const Tensor& x, const std::vector<int>& lengths);  // [B,T,2H]
  Tensor backward(const Tensor& gh);
  void params(ParamList& out);

 private:
  std::vector<int> lengths_;
  std::vector<long> in_shape_;
};

}  // namespace mealgen::nn
