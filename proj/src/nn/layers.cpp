#include "nn/layers.hpp"

#include <algorithm>
#include <cmath>

namespace mealgen::nn {

// ---------------------------------------------------------------- Linear

Linear::Linear(long in, long out, Rng& rng, const std::string& name)
    : w({out, in}, name + ".w"), b({out}, name + ".b") {
  w.init_randn(rng, std::sqrt(1.0 / static_cast<double>(in)));
}

Tensor Linear::forward(const Tensor& x) {
  x_ = x;
  const long B = x.dim(0), in = w.v.dim(1), out = w.v.dim(0);
  require(x.size() == B * in, "linear: input width mismatch");
  Tensor y({B, out});
  y.mat(B, out).noalias() = x.mat(B, in) * w.v.mat(out, in).transpose();
  y.mat(B, out).rowwise() += b.v.vec().transpose();
  return y;
}

Tensor Linear::backward(const Tensor& gy) {
  const long B = x_.dim(0), in = w.v.dim(1), out = w.v.dim(0);
  w.g.mat(out, in).noalias() += gy.mat(B, out).transpose() * x_.mat(B, in);
  b.g.vec().noalias() += gy.mat(B, out).colwise().sum().transpose();
  Tensor gx({B, in});
  gx.mat(B, in).noalias() = gy.mat(B, out) * w.v.mat(out, in);
  return gx;
}

void Linear::params(ParamList& out) {
  out.push_back(&w);
  out.push_back(&b);
}

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(int in_c, int out_c, int k, int stride, int pad, Rng& rng, const std::string& name)
    : in_c(in_c), out_c(out_c), k(k), stride(stride), pad(pad),
      w({out_c, static_cast<long>(in_c) * k * k}, name + ".w"),
      b({out_c}, name + ".b") {
  w.init_randn(rng, std::sqrt(2.0 / (static_cast<double>(in_c) * k * k)));
}

void Conv2d::im2col(const double* img, long h, long w_, Tensor& cols) const {
  const long oh = out_h(h), ow = out_w(w_);
  double* out = cols.data();
  for (int c = 0; c < in_c; ++c) {
    const double* plane = img + static_cast<long>(c) * h * w_;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        for (long oy = 0; oy < oh; ++oy) {
          const long iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) {
            for (long ox = 0; ox < ow; ++ox) *out++ = 0.0;
            continue;
          }
          const double* row = plane + iy * w_;
          for (long ox = 0; ox < ow; ++ox) {
            const long ix = ox * stride - pad + kx;
            *out++ = (ix < 0 || ix >= w_) ? 0.0 : row[ix];
          }
        }
      }
    }
  }
}

void Conv2d::col2im(const Tensor& cols, long h, long w_, double* gimg) const {
  const long oh = out_h(h), ow = out_w(w_);
  const double* in = cols.data();
  for (int c = 0; c < in_c; ++c) {
    double* plane = gimg + static_cast<long>(c) * h * w_;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        for (long oy = 0; oy < oh; ++oy) {
          const long iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) {
            in += ow;
            continue;
          }
          double* row = plane + iy * w_;
          for (long ox = 0; ox < ow; ++ox) {
            const long ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < w_) row[ix] += *in;
            ++in;
          }
        }
      }
    }
  }
}

Tensor Conv2d::forward(const Tensor& x) {
  require(x.ndim() == 4 && x.dim(1) == in_c, "conv: bad input shape");
  x_ = x;
  const long B = x.dim(0), h = x.dim(2), w_in = x.dim(3);
  const long oh = out_h(h), ow = out_w(w_in);
  const long ick2 = static_cast<long>(in_c) * k * k;
  Tensor y({B, out_c, oh, ow});
  Tensor cols({ick2, oh * ow});
  for (long n = 0; n < B; ++n) {
    im2col(x.data() + n * in_c * h * w_in, h, w_in, cols);
    MatMap yn(y.data() + n * out_c * oh * ow, out_c, oh * ow);
    yn.noalias() = w.v.mat(out_c, ick2) * cols.mat(ick2, oh * ow);
    yn.colwise() += b.v.vec();
  }
  return y;
}

Tensor Conv2d::backward(const Tensor& gy) {
  const long B = x_.dim(0), h = x_.dim(2), w_in = x_.dim(3);
  const long oh = out_h(h), ow = out_w(w_in);
  const long ick2 = static_cast<long>(in_c) * k * k;
  Tensor gx(x_.shape());
  Tensor cols({ick2, oh * ow});
  Tensor gcols({ick2, oh * ow});
  for (long n = 0; n < B; ++n) {
    im2col(x_.data() + n * in_c * h * w_in, h, w_in, cols);
    CMatMap gyn(gy.data() + n * out_c * oh * ow, out_c, oh * ow);
    w.g.mat(out_c, ick2).noalias() += gyn * cols.mat(ick2, oh * ow).transpose();
    b.g.vec().noalias() += gyn.rowwise().sum();
    gcols.mat(ick2, oh * ow).noalias() = w.v.mat(out_c, ick2).transpose() * gyn;
    col2im(gcols, h, w_in, gx.data() + n * in_c * h * w_in);
  }
  return gx;
}

void Conv2d::params(ParamList& out) {
  out.push_back(&w);
  out.push_back(&b);
}

// ---------------------------------------------------------------- BatchNorm

BatchNorm::BatchNorm(int channels, const std::string& name)
    : channels(channels),
      gamma({channels}, name + ".gamma"),
      beta({channels}, name + ".beta"),
      running_mean({channels}),
      running_var({channels}) {
  gamma.v.fill_(1.0);
  running_var.fill_(1.0);
}

Tensor BatchNorm::forward(const Tensor& x, bool train) {
  const long B = x.dim(0);
  require(x.ndim() >= 2 && x.dim(1) == channels, "batchnorm: bad input shape");
  const long S = x.size() / (B * channels);
  b_ = B;
  s_ = S;
  Tensor y(x.shape());
  xhat_ = Tensor(x.shape());
  invstd_ = Tensor({channels});
  const long N = B * S;
  for (int c = 0; c < channels; ++c) {
    double mean, var;
    if (train) {
      double sum = 0.0, sq = 0.0;
      for (long n = 0; n < B; ++n) {
        const double* p = x.data() + (n * channels + c) * S;
        for (long i = 0; i < S; ++i) {
          sum += p[i];
          sq += p[i] * p[i];
        }
      }
      mean = sum / static_cast<double>(N);
      var = sq / static_cast<double>(N) - mean * mean;
      if (var < 0.0) var = 0.0;
      running_mean[c] = (1.0 - momentum) * running_mean[c] + momentum * mean;
      running_var[c] = (1.0 - momentum) * running_var[c] + momentum * var;
    } else {
      mean = running_mean[c];
      var = running_var[c];
    }
    const double inv = 1.0 / std::sqrt(var + eps);
    invstd_[c] = inv;
    const double g = gamma.v[c], bb = beta.v[c];
    for (long n = 0; n < B; ++n) {
      const double* p = x.data() + (n * channels + c) * S;
      double* xh = xhat_.data() + (n * channels + c) * S;
      double* yo = y.data() + (n * channels + c) * S;
      for (long i = 0; i < S; ++i) {
        xh[i] = (p[i] - mean) * inv;
        yo[i] = g * xh[i] + bb;
      }
    }
  }
  return y;
}

Tensor BatchNorm::backward(const Tensor& gy) {
  const long B = b_, S = s_, N = B * S;
  Tensor gx(gy.shape());
  for (int c = 0; c < channels; ++c) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (long n = 0; n < B; ++n) {
      const double* dy = gy.data() + (n * channels + c) * S;
      const double* xh = xhat_.data() + (n * channels + c) * S;
      for (long i = 0; i < S; ++i) {
        sum_dy += dy[i];
        sum_dy_xhat += dy[i] * xh[i];
      }
    }
    gamma.g[c] += sum_dy_xhat;
    beta.g[c] += sum_dy;
    const double g = gamma.v[c], inv = invstd_[c];
    const double k1 = g * inv / static_cast<double>(N);
    for (long n = 0; n < B; ++n) {
      const double* dy = gy.data() + (n * channels + c) * S;
      const double* xh = xhat_.data() + (n * channels + c) * S;
      double* dx = gx.data() + (n * channels + c) * S;
      for (long i = 0; i < S; ++i)
        dx[i] = k1 * (static_cast<double>(N) * dy[i] - sum_dy - xh[i] * sum_dy_xhat);
    }
  }
  return gx;
}

void BatchNorm::params(ParamList& out) {
  out.push_back(&gamma);
  out.push_back(&beta);
}

void BatchNorm::state(std::vector<std::pair<std::string, Tensor*>>& out) {
  out.emplace_back(gamma.name + ".rmean", &running_mean);
  out.emplace_back(gamma.name + ".rvar", &running_var);
}

// ---------------------------------------------------------------- activations

Tensor Relu::forward(const Tensor& x) {
  mask_ = Tensor(x.shape());
  Tensor y(x.shape());
  for (long i = 0; i < x.size(); ++i) {
    mask_[i] = x[i] > 0.0 ? 1.0 : 0.0;
    y[i] = x[i] > 0.0 ? x[i] : 0.0;
  }
  return y;
}

Tensor Relu::backward(const Tensor& gy) {
  Tensor gx(gy.shape());
  for (long i = 0; i < gy.size(); ++i) gx[i] = gy[i] * mask_[i];
  return gx;
}

Tensor LeakyRelu::forward(const Tensor& x) {
  mask_ = Tensor(x.shape());
  Tensor y(x.shape());
  for (long i = 0; i < x.size(); ++i) {
    mask_[i] = x[i] > 0.0 ? 1.0 : slope;
    y[i] = x[i] * mask_[i];
  }
  return y;
}

Tensor LeakyRelu::backward(const Tensor& gy) {
  Tensor gx(gy.shape());
  for (long i = 0; i < gy.size(); ++i) gx[i] = gy[i] * mask_[i];
  return gx;
}

Tensor Tanh::forward(const Tensor& x) {
  y_ = Tensor(x.shape());
  for (long i = 0; i < x.size(); ++i) y_[i] = std::tanh(x[i]);
  return y_;
}

Tensor Tanh::backward(const Tensor& gy) {
  Tensor gx(gy.shape());
  for (long i = 0; i < gy.size(); ++i) gx[i] = gy[i] * (1.0 - y_[i] * y_[i]);
  return gx;
}

Tensor Sigmoid::forward(const Tensor& x) {
  y_ = Tensor(x.shape());
  for (long i = 0; i < x.size(); ++i) y_[i] = 1.0 / (1.0 + std::exp(-x[i]));
  return y_;
}

Tensor Sigmoid::backward(const Tensor& gy) {
  Tensor gx(gy.shape());
  for (long i = 0; i < gy.size(); ++i) gx[i] = gy[i] * y_[i] * (1.0 - y_[i]);
  return gx;
}

// ---------------------------------------------------------------- resampling

Tensor Upsample2x::forward(const Tensor& x) {
  in_shape_ = x.shape();
  const long B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  Tensor y({B, C, 2 * H, 2 * W});
  for (long bc = 0; bc < B * C; ++bc) {
    const double* in = x.data() + bc * H * W;
    double* out = y.data() + bc * 4 * H * W;
    for (long yy = 0; yy < 2 * H; ++yy) {
      const double* row = in + (yy / 2) * W;
      for (long xx = 0; xx < 2 * W; ++xx) out[yy * 2 * W + xx] = row[xx / 2];
    }
  }
  return y;
}

Tensor Upsample2x::backward(const Tensor& gy) {
  const long B = in_shape_[0], C = in_shape_[1], H = in_shape_[2], W = in_shape_[3];
  Tensor gx(in_shape_);
  for (long bc = 0; bc < B * C; ++bc) {
    const double* in = gy.data() + bc * 4 * H * W;
    double* out = gx.data() + bc * H * W;
    for (long yy = 0; yy < 2 * H; ++yy)
      for (long xx = 0; xx < 2 * W; ++xx) out[(yy / 2) * W + xx / 2] += in[yy * 2 * W + xx];
  }
  return gx;
}

Tensor avg_pool2(const Tensor& x) {
  const long B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  require(H % 2 == 0 && W % 2 == 0, "avg_pool2: odd spatial size");
  Tensor y({B, C, H / 2, W / 2});
  for (long bc = 0; bc < B * C; ++bc) {
    const double* in = x.data() + bc * H * W;
    double* out = y.data() + bc * (H / 2) * (W / 2);
    for (long yy = 0; yy < H / 2; ++yy)
      for (long xx = 0; xx < W / 2; ++xx)
        out[yy * (W / 2) + xx] = 0.25 * (in[(2 * yy) * W + 2 * xx] + in[(2 * yy) * W + 2 * xx + 1] +
                                         in[(2 * yy + 1) * W + 2 * xx] + in[(2 * yy + 1) * W + 2 * xx + 1]);
  }
  return y;
}

namespace {
struct LerpIdx {
  long i0, i1;
  double w1;  // weight of i1; (1-w1) for i0
};

std::vector<LerpIdx> lerp_table(long in, long out) {
  std::vector<LerpIdx> t(static_cast<size_t>(out));
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (long o = 0; o < out; ++o) {
    double src = (static_cast<double>(o) + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const long i0 = static_cast<long>(std::floor(src));
    const long i1 = std::min(i0 + 1, in - 1);
    t[static_cast<size_t>(o)] = {i0, i1, src - static_cast<double>(i0)};
  }
  return t;
}
}  // namespace

Tensor BilinearResize::forward(const Tensor& x) {
  in_shape_ = x.shape();
  const long B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const auto ty = lerp_table(H, oh), tx = lerp_table(W, ow);
  Tensor y({B, C, oh, ow});
  for (long bc = 0; bc < B * C; ++bc) {
    const double* in = x.data() + bc * H * W;
    double* out = y.data() + bc * static_cast<long>(oh) * ow;
    for (long yy = 0; yy < oh; ++yy) {
      const auto& ly = ty[static_cast<size_t>(yy)];
      for (long xx = 0; xx < ow; ++xx) {
        const auto& lx = tx[static_cast<size_t>(xx)];
        const double v00 = in[ly.i0 * W + lx.i0], v01 = in[ly.i0 * W + lx.i1];
        const double v10 = in[ly.i1 * W + lx.i0], v11 = in[ly.i1 * W + lx.i1];
        out[yy * ow + xx] = (1 - ly.w1) * ((1 - lx.w1) * v00 + lx.w1 * v01) +
                            ly.w1 * ((1 - lx.w1) * v10 + lx.w1 * v11);
      }
    }
  }
  return y;
}

Tensor BilinearResize::backward(const Tensor& gy) {
  const long B = in_shape_[0], C = in_shape_[1], H = in_shape_[2], W = in_shape_[3];
  const auto ty = lerp_table(H, oh), tx = lerp_table(W, ow);
  Tensor gx(in_shape_);
  for (long bc = 0; bc < B * C; ++bc) {
    const double* in = gy.data() + bc * static_cast<long>(oh) * ow;
    double* out = gx.data() + bc * H * W;
    for (long yy = 0; yy < oh; ++yy) {
      const auto& ly = ty[static_cast<size_t>(yy)];
      for (long xx = 0; xx < ow; ++xx) {
        const auto& lx = tx[static_cast<size_t>(xx)];
        const double g = in[yy * ow + xx];
        out[ly.i0 * W + lx.i0] += g * (1 - ly.w1) * (1 - lx.w1);
        out[ly.i0 * W + lx.i1] += g * (1 - ly.w1) * lx.w1;
        out[ly.i1 * W + lx.i0] += g * ly.w1 * (1 - lx.w1);
        out[ly.i1 * W + lx.i1] += g * ly.w1 * lx.w1;
      }
    }
  }
  return gx;
}

Tensor bilinear_resize(const Tensor& x, int oh, int ow) {
  BilinearResize r(oh, ow);
  return r.forward(x);
}

// ---------------------------------------------------------------- Embedding

Embedding::Embedding(long vocab, long dim, Rng& rng, const std::string& name)
    : w({vocab, dim}, name + ".w") {
  w.init_uniform(rng, -0.05, 0.05);
}

Tensor Embedding::forward(const std::vector<std::vector<int>>& idx) {
  idx_ = idx;
  const long B = static_cast<long>(idx.size());
  const long V = w.v.dim(0), E = w.v.dim(1);
  t_max_ = 1;
  for (const auto& s : idx) t_max_ = std::max<long>(t_max_, static_cast<long>(s.size()));
  Tensor y({B, t_max_, E});
  for (long b = 0; b < B; ++b)
    for (size_t t = 0; t < idx[static_cast<size_t>(b)].size(); ++t) {
      const int id = idx[static_cast<size_t>(b)][t];
      require(id >= 0 && id < V, "embedding: token index out of range");
      std::copy(w.v.data() + static_cast<long>(id) * E, w.v.data() + (id + 1L) * E,
                y.data() + (b * t_max_ + static_cast<long>(t)) * E);
    }
  return y;
}

void Embedding::backward(const Tensor& gy) {
  const long E = w.v.dim(1);
  for (size_t b = 0; b < idx_.size(); ++b)
    for (size_t t = 0; t < idx_[b].size(); ++t) {
      const int id = idx_[b][t];
      double* gw = w.g.data() + static_cast<long>(id) * E;
      const double* g = gy.data() + (static_cast<long>(b) * t_max_ + static_cast<long>(t)) * E;
      for (long e = 0; e < E; ++e) gw[e] += g[e];
    }
}

void Embedding::params(ParamList& out) { out.push_back(&w); }

// ---------------------------------------------------------------- AttentionPool

AttentionPool::AttentionPool(long hidden, Rng& rng, const std::string& name)
    : u({hidden}, name + ".u") {
  u.init_randn(rng, std::sqrt(1.0 / static_cast<double>(hidden)));
}

Tensor AttentionPool::forward(const Tensor& hs, const std::vector<int>& lengths) {
  hs_ = hs;
  lengths_ = lengths;
  const long B = hs.dim(0), T = hs.dim(1), H = hs.dim(2);
  alpha_ = Tensor({B, T});
  Tensor pooled({B, H});
  for (long b = 0; b < B; ++b) {
    const int len = lengths[static_cast<size_t>(b)];
    require(len >= 1 && len <= T, "attention_pool: bad sequence length");
    double* a = alpha_.data() + b * T;
    if (use_context) {
      for (int t = 0; t < len; ++t) {
        const double* h = hs.data() + (b * T + t) * H;
        a[t] = CVecMap(h, H).dot(u.v.vec());
      }
      softmax_inplace(a, len);
    } else {
      for (int t = 0; t < len; ++t) a[t] = 1.0 / static_cast<double>(len);
    }
    double* p = pooled.data() + b * H;
    for (int t = 0; t < len; ++t) {
      const double* h = hs.data() + (b * T + t) * H;
      for (long e = 0; e < H; ++e) p[e] += a[t] * h[e];
    }
  }
  return pooled;
}

Tensor AttentionPool::backward(const Tensor& gpooled) {
  const long B = hs_.dim(0), T = hs_.dim(1), H = hs_.dim(2);
  Tensor ghs(hs_.shape());
  for (long b = 0; b < B; ++b) {
    const int len = lengths_[static_cast<size_t>(b)];
    const double* a = alpha_.data() + b * T;
    const double* gp = gpooled.data() + b * H;
    std::vector<double> dalpha(static_cast<size_t>(len));
    for (int t = 0; t < len; ++t) {
      const double* h = hs_.data() + (b * T + t) * H;
      double* gh = ghs.data() + (b * T + t) * H;
      double d = 0.0;
      for (long e = 0; e < H; ++e) {
        gh[e] += a[t] * gp[e];
        d += h[e] * gp[e];
      }
      dalpha[static_cast<size_t>(t)] = d;
    }
    if (!use_context) continue;
    double adot = 0.0;
    for (int t = 0; t < len; ++t) adot += a[t] * dalpha[static_cast<size_t>(t)];
    for (int t = 0; t < len; ++t) {
      const double dl = a[t] * (dalpha[static_cast<size_t>(t)] - adot);
      const double* h = hs_.data() + (b * T + t) * H;
      double* gh = ghs.data() + (b * T + t) * H;
      for (long e = 0; e < H; ++e) {
        gh[e] += u.v[e] * dl;
        u.g[e] += h[e] * dl;
      }
    }
  }
  return ghs;
}

void AttentionPool::params(ParamList& out) {
  if (use_context) out.push_back(&u);
}

// ---------------------------------------------------------------- helpers

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

void softmax_inplace(double* v, long n) {
  double mx = v[0];
  for (long i = 1; i < n; ++i) mx = std::max(mx, v[i]);
  double sum = 0.0;
  for (long i = 0; i < n; ++i) {
    v[i] = std::exp(v[i] - mx);
    sum += v[i];
  }
  for (long i = 0; i < n; ++i) v[i] /= sum;
}

}  // namespace mealgen::nn
