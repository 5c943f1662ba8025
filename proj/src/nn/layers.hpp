#pragma once

#include <vector>

#include "nn/params.hpp"

namespace mealgen::nn {

// All layers cache what backward needs during forward; one backward per forward.
// Gradients accumulate into Param::g; callers zero them between steps.

struct Linear {
  Param w;  // [out, in]
  Param b;  // [out]

  Linear() = default;
  Linear(long in, long out, Rng& rng, const std::string& name);

  Tensor forward(const Tensor& x);   // [B,in] -> [B,out]
  Tensor backward(const Tensor& gy);  // [B,out] -> [B,in]
  void params(ParamList& out);

 private:
  Tensor x_;
};

struct Conv2d {
  int in_c = 0, out_c = 0, k = 0, stride = 1, pad = 0;
  Param w;  // [out_c, in_c*k*k]
  Param b;  // [out_c]

  Conv2d() = default;
  Conv2d(int in_c, int out_c, int k, int stride, int pad, Rng& rng, const std::string& name);

  Tensor forward(const Tensor& x);   // [B,C,H,W] -> [B,O,OH,OW]
  Tensor backward(const Tensor& gy);
  void params(ParamList& out);

  long out_h(long h) const { return (h + 2 * pad - k) / stride + 1; }
  long out_w(long w) const { return (w + 2 * pad - k) / stride + 1; }

 private:
  Tensor x_;
  void im2col(const double* img, long h, long w, Tensor& cols) const;
  void col2im(const Tensor& cols, long h, long w, double* gimg) const;
};

// Batch normalization over [B,C,S] with S = flattened spatial size (S=1 for FC).
struct BatchNorm {
  int channels = 0;
  double eps = 1e-5, momentum = 0.1;
  Param gamma, beta;
  Tensor running_mean, running_var;

  BatchNorm() = default;
  explicit BatchNorm(int channels, const std::string& name);

  Tensor forward(const Tensor& x, bool train);
  Tensor backward(const Tensor& gy);
  void params(ParamList& out);
  // Running stats are state, not trainable; exposed for checkpointing.
  void state(std::vector<std::pair<std::string, Tensor*>>& out);

 private:
  Tensor xhat_, invstd_;
  long b_ = 0, s_ = 0;
};

struct Relu {
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& gy);

 private:
  Tensor mask_;
};

struct LeakyRelu {
  double slope = 0.2;
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& gy);

 private:
  Tensor mask_;
};

struct Tanh {
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& gy);

 private:
  Tensor y_;
};

struct Sigmoid {
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& gy);

 private:
  Tensor y_;
};

// Nearest-neighbour 2x upsampling.
struct Upsample2x {
  Tensor forward(const Tensor& x);  // [B,C,H,W] -> [B,C,2H,2W]
  Tensor backward(const Tensor& gy);

 private:
  std::vector<long> in_shape_;
};

// Exact 2x average-pool downsampling (H, W even).
Tensor avg_pool2(const Tensor& x);

// Bilinear resize to (oh, ow), half-pixel centers. Differentiable.
struct BilinearResize {
  int oh = 0, ow = 0;
  BilinearResize() = default;
  BilinearResize(int oh, int ow) : oh(oh), ow(ow) {}

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& gy);

 private:
  std::vector<long> in_shape_;
};

Tensor bilinear_resize(const Tensor& x, int oh, int ow);  // stateless forward

// Token embedding lookup over ragged index lists.
struct Embedding {
  Param w;  // [V, E]

  Embedding() = default;
  Embedding(long vocab, long dim, Rng& rng, const std::string& name);

  // idx: B sequences of token ids; returns [B,T,E] padded with zeros.
  Tensor forward(const std::vector<std::vector<int>>& idx);
  void backward(const Tensor& gy);
  void params(ParamList& out);

 private:
  std::vector<std::vector<int>> idx_;
  long t_max_ = 0;
};

// Attention pooling: weights = softmax over u . h_i per sequence, pooled = sum w_i h_i.
// With use_context=false falls back to masked mean pooling (uniform weights).
struct AttentionPool {
  Param u;  // [H]
  bool use_context = true;

  AttentionPool() = default;
  AttentionPool(long hidden, Rng& rng, const std::string& name);

  // hs [B,T,H]; lengths per sequence. Returns pooled [B,H]; exposes alpha() [B,T].
  Tensor forward(const Tensor& hs, const std::vector<int>& lengths);
  Tensor backward(const Tensor& gpooled);  // -> ghs
  const Tensor& alpha() const { return alpha_; }
  void params(ParamList& out);

 private:
  Tensor hs_, alpha_;
  std::vector<int> lengths_;
};

// Stateless numerically stable helpers.
double softplus(double x);                 // log(1+exp(x))
void softmax_inplace(double* v, long n);

}  // namespace mealgen::nn
