#include "nn/lstm.hpp"

#include <cmath>

namespace mealgen::nn {

Lstm::Lstm(int in_dim, int hid, Rng& rng, const std::string& name)
    : in_dim(in_dim), hid(hid),
      w_ih({4L * hid, in_dim}, name + ".w_ih"),
      w_hh({4L * hid, hid}, name + ".w_hh"),
      b({4L * hid}, name + ".b") {
  const double s = std::sqrt(1.0 / static_cast<double>(hid));
  w_ih.init_uniform(rng, -s, s);
  w_hh.init_uniform(rng, -s, s);
  // forget-gate bias at 1 for stable carries early in training
  for (int i = hid; i < 2 * hid; ++i) b.v[i] = 1.0;
}

Tensor Lstm::forward(const Tensor& x, const std::vector<int>& lengths) {
  const long B = x.dim(0), T = x.dim(1);
  require(x.dim(2) == in_dim, "lstm: input width mismatch");
  x_ = x;
  lengths_ = lengths;
  gates_ = Tensor({B, T, 4L * hid});
  c_ = Tensor({B, T, hid});
  tanhc_ = Tensor({B, T, hid});
  h_ = Tensor({B, T, hid});

  Tensor xt({B, in_dim}), hprev({B, hid}), a({B, 4L * hid});
  for (long t = 0; t < T; ++t) {
    for (long n = 0; n < B; ++n) {
      std::copy(x.data() + (n * T + t) * in_dim, x.data() + (n * T + t + 1) * in_dim,
                xt.data() + n * in_dim);
      const double* hp = t > 0 ? h_.data() + (n * T + t - 1) * hid : nullptr;
      for (int e = 0; e < hid; ++e) hprev[n * hid + e] = hp ? hp[e] : 0.0;
    }
    a.mat(B, 4L * hid).noalias() = xt.mat(B, in_dim) * w_ih.v.mat(4L * hid, in_dim).transpose();
    a.mat(B, 4L * hid).noalias() += hprev.mat(B, hid) * w_hh.v.mat(4L * hid, hid).transpose();
    a.mat(B, 4L * hid).rowwise() += b.v.vec().transpose();
    for (long n = 0; n < B; ++n) {
      double* gate = gates_.data() + (n * T + t) * 4L * hid;
      double* ct = c_.data() + (n * T + t) * hid;
      double* tc = tanhc_.data() + (n * T + t) * hid;
      double* ht = h_.data() + (n * T + t) * hid;
      if (t >= lengths[static_cast<size_t>(n)]) continue;  // padded position
      const double* av = a.data() + n * 4L * hid;
      const double* cprev = t > 0 ? c_.data() + (n * T + t - 1) * hid : nullptr;
      for (int e = 0; e < hid; ++e) {
        const double gi = 1.0 / (1.0 + std::exp(-av[e]));
        const double gf = 1.0 / (1.0 + std::exp(-av[hid + e]));
        const double gg = std::tanh(av[2 * hid + e]);
        const double go = 1.0 / (1.0 + std::exp(-av[3 * hid + e]));
        gate[e] = gi;
        gate[hid + e] = gf;
        gate[2 * hid + e] = gg;
        gate[3 * hid + e] = go;
        ct[e] = gf * (cprev ? cprev[e] : 0.0) + gi * gg;
        tc[e] = std::tanh(ct[e]);
        ht[e] = go * tc[e];
      }
    }
  }
  return h_;
}

Tensor Lstm::backward(const Tensor& gh) {
  const long B = x_.dim(0), T = x_.dim(1);
  Tensor gx(x_.shape());
  Tensor dh_carry({B, hid}), dc_carry({B, hid});
  Tensor da({B, 4L * hid}), xt({B, in_dim}), hprev({B, hid});
  Tensor gxt({B, in_dim}), ghprev({B, hid});

  for (long t = T - 1; t >= 0; --t) {
    da.zero_();
    for (long n = 0; n < B; ++n) {
      const int len = lengths_[static_cast<size_t>(n)];
      std::copy(x_.data() + (n * T + t) * in_dim, x_.data() + (n * T + t + 1) * in_dim,
                xt.data() + n * in_dim);
      const double* hp = t > 0 ? h_.data() + (n * T + t - 1) * hid : nullptr;
      for (int e = 0; e < hid; ++e) hprev[n * hid + e] = hp ? hp[e] : 0.0;
      if (t >= len) continue;
      const double* gate = gates_.data() + (n * T + t) * 4L * hid;
      const double* tc = tanhc_.data() + (n * T + t) * hid;
      const double* cprev = t > 0 ? c_.data() + (n * T + t - 1) * hid : nullptr;
      double* dav = da.data() + n * 4L * hid;
      for (int e = 0; e < hid; ++e) {
        const double gi = gate[e], gf = gate[hid + e], gg = gate[2 * hid + e], go = gate[3 * hid + e];
        const double dh = gh[(n * T + t) * hid + e] + dh_carry[n * hid + e];
        const double dov = dh * tc[e];
        double dct = dh * go * (1.0 - tc[e] * tc[e]) + dc_carry[n * hid + e];
        const double div = dct * gg;
        const double dfv = dct * (cprev ? cprev[e] : 0.0);
        const double dgv = dct * gi;
        dc_carry[n * hid + e] = dct * gf;
        dav[e] = div * gi * (1.0 - gi);
        dav[hid + e] = dfv * gf * (1.0 - gf);
        dav[2 * hid + e] = dgv * (1.0 - gg * gg);
        dav[3 * hid + e] = dov * go * (1.0 - go);
      }
    }
    w_ih.g.mat(4L * hid, in_dim).noalias() += da.mat(B, 4L * hid).transpose() * xt.mat(B, in_dim);
    w_hh.g.mat(4L * hid, hid).noalias() += da.mat(B, 4L * hid).transpose() * hprev.mat(B, hid);
    b.g.vec().noalias() += da.mat(B, 4L * hid).colwise().sum().transpose();
    gxt.mat(B, in_dim).noalias() = da.mat(B, 4L * hid) * w_ih.v.mat(4L * hid, in_dim);
    ghprev.mat(B, hid).noalias() = da.mat(B, 4L * hid) * w_hh.v.mat(4L * hid, hid);
    for (long n = 0; n < B; ++n) {
      std::copy(gxt.data() + n * in_dim, gxt.data() + (n + 1) * in_dim,
                gx.data() + (n * T + t) * in_dim);
      for (int e = 0; e < hid; ++e) dh_carry[n * hid + e] = ghprev[n * hid + e];
      if (t >= lengths_[static_cast<size_t>(n)]) {
        // no state flowed through padded steps
        for (int e = 0; e < hid; ++e) dh_carry[n * hid + e] = 0.0;
      }
    }
  }
  return gx;
}

void Lstm::params(ParamList& out) {
  out.push_back(&w_ih);
  out.push_back(&w_hh);
  out.push_back(&b);
}

// ---------------------------------------------------------------- BiLstm

namespace {

Tensor reverse_within_lengths(const Tensor& x, const std::vector<int>& lengths) {
  const long B = x.dim(0), T = x.dim(1), E = x.dim(2);
  Tensor y(x.shape());
  for (long n = 0; n < B; ++n) {
    const int len = lengths[static_cast<size_t>(n)];
    for (int t = 0; t < len; ++t)
      std::copy(x.data() + (n * T + len - 1 - t) * E, x.data() + (n * T + len - t) * E,
                y.data() + (n * T + t) * E);
  }
  return y;
}

}  // namespace

BiLstm::BiLstm(int in_dim, int hid_per_dir, Rng& rng, const std::string& name)
    : fwd(in_dim, hid_per_dir, rng, name + ".fwd"), bwd(in_dim, hid_per_dir, rng, name + ".bwd") {}

Tensor BiLstm::forward(const Tensor& x, const std::vector<int>& lengths) {
  lengths_ = lengths;
  in_shape_ = x.shape();
  const long B = x.dim(0), T = x.dim(1);
  const int H = fwd.hid;
  Tensor hf = fwd.forward(x, lengths);
  Tensor hb_rev = bwd.forward(reverse_within_lengths(x, lengths), lengths);
  Tensor hb = reverse_within_lengths(hb_rev, lengths);
  Tensor out({B, T, 2L * H});
  for (long n = 0; n < B; ++n)
    for (long t = 0; t < T; ++t) {
      std::copy(hf.data() + (n * T + t) * H, hf.data() + (n * T + t + 1) * H,
                out.data() + (n * T + t) * 2 * H);
      std::copy(hb.data() + (n * T + t) * H, hb.data() + (n * T + t + 1) * H,
                out.data() + (n * T + t) * 2 * H + H);
    }
  return out;
}

Tensor BiLstm::backward(const Tensor& gh) {
  const long B = in_shape_[0], T = in_shape_[1];
  const int H = fwd.hid;
  Tensor ghf({B, T, H}), ghb({B, T, H});
  for (long n = 0; n < B; ++n)
    for (long t = 0; t < T; ++t) {
      std::copy(gh.data() + (n * T + t) * 2 * H, gh.data() + (n * T + t) * 2 * H + H,
                ghf.data() + (n * T + t) * H);
      std::copy(gh.data() + (n * T + t) * 2 * H + H, gh.data() + (n * T + t + 1) * 2 * H,
                ghb.data() + (n * T + t) * H);
    }
  Tensor gx = fwd.backward(ghf);
  Tensor gx_rev = bwd.backward(reverse_within_lengths(ghb, lengths_));
  gx.add_(reverse_within_lengths(gx_rev, lengths_));
  return gx;
}

void BiLstm::params(ParamList& out) {
  fwd.params(out);
  bwd.params(out);
}

}  // namespace mealgen::nn
