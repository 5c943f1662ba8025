#include "gan/modules.hpp"

#include <cmath>

#include "core/check.hpp"

namespace mealgen::gan {

json GanConfig::to_json() const {
  json j;
  j["joint_dim"] = joint_dim;
  j["z_dim"] = z_dim;
  j["c_dim"] = c_dim;
  j["base_scale"] = base_scale;
  j["ngf"] = ngf;
  j["ndf"] = ndf;
  j["lambda_uncond"] = lambda_uncond;
  j["lambda_ca"] = lambda_ca;
  j["lambda_cycle"] = lambda_cycle;
  return j;
}

GanConfig GanConfig::from_json(const json& j) {
  GanConfig c;
  c.joint_dim = j["joint_dim"].get<long>();
  c.z_dim = j["z_dim"].get<int>();
  c.c_dim = j["c_dim"].get<int>();
  c.base_scale = j["base_scale"].get<int>();
  c.ngf = j["ngf"].get<int>();
  c.ndf = j["ndf"].get<int>();
  c.lambda_uncond = j["lambda_uncond"].get<double>();
  c.lambda_ca = j["lambda_ca"].get<double>();
  c.lambda_cycle = j["lambda_cycle"].get<double>();
  return c;
}

// ---------------------------------------------------------------- ConditionAugment

ConditionAugment::ConditionAugment(const GanConfig& cfg, Rng& rng)
    : c_dim_(cfg.c_dim), fc_(cfg.joint_dim, 2L * cfg.c_dim, rng, "ca.fc") {}

ConditionAugment::Sample ConditionAugment::forward(const Tensor& p, bool sample, Rng* rng) {
  const long B = p.dim(0);
  Tensor out = fc_.forward(p);
  Sample s;
  s.mu = Tensor({B, c_dim_});
  s.logvar = Tensor({B, c_dim_});
  s.c = Tensor({B, c_dim_});
  eta_ = Tensor({B, c_dim_});
  for (long n = 0; n < B; ++n)
    for (long i = 0; i < c_dim_; ++i) {
      s.mu[n * c_dim_ + i] = out[n * 2 * c_dim_ + i];
      s.logvar[n * c_dim_ + i] = out[n * 2 * c_dim_ + c_dim_ + i];
    }
  if (sample) {
    require(rng != nullptr, "condition_augment: sampling requires an rng");
    std::normal_distribution<double> g(0.0, 1.0);
    for (long i = 0; i < eta_.size(); ++i) eta_[i] = g(*rng);
  }
  logvar_ = s.logvar;
  for (long i = 0; i < s.c.size(); ++i)
    s.c[i] = s.mu[i] + std::exp(0.5 * s.logvar[i]) * eta_[i];
  return s;
}

Tensor ConditionAugment::backward(const Tensor& gc, const Tensor& gmu, const Tensor& glogvar) {
  const long B = gc.dim(0);
  Tensor gout({B, 2L * c_dim_});
  for (long n = 0; n < B; ++n)
    for (long i = 0; i < c_dim_; ++i) {
      const long k = n * c_dim_ + i;
      // dc/dmu = 1, dc/dlogvar = 0.5 exp(logvar/2) eta
      gout[n * 2 * c_dim_ + i] = gmu[k] + gc[k];
      gout[n * 2 * c_dim_ + c_dim_ + i] =
          glogvar[k] + gc[k] * 0.5 * std::exp(0.5 * logvar_[k]) * eta_[k];
    }
  return fc_.backward(gout);
}

void ConditionAugment::params(nn::ParamList& out) { fc_.params(out); }

// ---------------------------------------------------------------- helpers

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  const long B = a.dim(0), C1 = a.dim(1), C2 = b.dim(1), H = a.dim(2), W = a.dim(3);
  require(b.dim(0) == B && b.dim(2) == H && b.dim(3) == W, "concat_channels: shape mismatch");
  Tensor out({B, C1 + C2, H, W});
  const long hw = H * W;
  for (long n = 0; n < B; ++n) {
    std::copy(a.data() + n * C1 * hw, a.data() + (n + 1) * C1 * hw,
              out.data() + n * (C1 + C2) * hw);
    std::copy(b.data() + n * C2 * hw, b.data() + (n + 1) * C2 * hw,
              out.data() + (n * (C1 + C2) + C1) * hw);
  }
  return out;
}

void split_channels(const Tensor& g, long c1, Tensor& ga, Tensor& gb) {
  const long B = g.dim(0), C = g.dim(1), H = g.dim(2), W = g.dim(3);
  const long c2 = C - c1, hw = H * W;
  ga = Tensor({B, c1, H, W});
  gb = Tensor({B, c2, H, W});
  for (long n = 0; n < B; ++n) {
    std::copy(g.data() + n * C * hw, g.data() + n * C * hw + c1 * hw, ga.data() + n * c1 * hw);
    std::copy(g.data() + n * C * hw + c1 * hw, g.data() + (n + 1) * C * hw,
              gb.data() + n * c2 * hw);
  }
}

Tensor tile_vector(const Tensor& v, long h, long w) {
  const long B = v.dim(0), C = v.dim(1);
  Tensor out({B, C, h, w});
  for (long n = 0; n < B; ++n)
    for (long c = 0; c < C; ++c) {
      double* p = out.data() + (n * C + c) * h * w;
      const double val = v[n * C + c];
      for (long i = 0; i < h * w; ++i) p[i] = val;
    }
  return out;
}

Tensor untile_vector(const Tensor& g) {
  const long B = g.dim(0), C = g.dim(1), hw = g.dim(2) * g.dim(3);
  Tensor out({B, C});
  for (long n = 0; n < B; ++n)
    for (long c = 0; c < C; ++c) {
      const double* p = g.data() + (n * C + c) * hw;
      double s = 0.0;
      for (long i = 0; i < hw; ++i) s += p[i];
      out[n * C + c] = s;
    }
  return out;
}

namespace {
int log2_exact(int v, const char* what) {
  int n = 0;
  while (v > 1) {
    require(v % 2 == 0, std::string(what) + ": size must be a power of two times 4");
    v /= 2;
    ++n;
  }
  return n;
}
}  // namespace

// ---------------------------------------------------------------- Generator

Generator::Generator(const GanConfig& cfg, Rng& rng) : cfg(cfg) {
  require(cfg.base_scale >= 16, "generator: base_scale must be >= 16");
  n_up0_ = log2_exact(cfg.base_scale / 4, "generator");
  start_ch_ = std::min<long>(cfg.ngf << n_up0_, 8L * cfg.ngf);
  fc_ = nn::Linear(cfg.z_dim + cfg.c_dim, 16 * start_ch_, rng, "g.fc");
  bn0_ = nn::BatchNorm(static_cast<int>(start_ch_), "g.bn0");

  long ch = start_ch_;
  for (int i = 0; i < n_up0_; ++i) {
    const long next = std::max<long>(cfg.ngf, ch / 2);
    UpBlock blk;
    blk.conv = nn::Conv2d(static_cast<int>(ch), static_cast<int>(next), 3, 1, 1, rng,
                          "g.f0." + std::to_string(i));
    blk.bn = nn::BatchNorm(static_cast<int>(next), "g.f0." + std::to_string(i));
    f0_.push_back(std::move(blk));
    ch = next;
  }
  h0_ch_ = ch;
  to0_ = nn::Conv2d(static_cast<int>(h0_ch_), 3, 3, 1, 1, rng, "g.to0");

  joint1_ = nn::Conv2d(static_cast<int>(h0_ch_ + cfg.c_dim), static_cast<int>(h0_ch_), 3, 1, 1,
                       rng, "g.joint1");
  jbn1_ = nn::BatchNorm(static_cast<int>(h0_ch_), "g.joint1");
  h1_ch_ = std::max<long>(8, h0_ch_ / 2);
  up1_.conv = nn::Conv2d(static_cast<int>(h0_ch_), static_cast<int>(h1_ch_), 3, 1, 1, rng, "g.f1");
  up1_.bn = nn::BatchNorm(static_cast<int>(h1_ch_), "g.f1");
  to1_ = nn::Conv2d(static_cast<int>(h1_ch_), 3, 3, 1, 1, rng, "g.to1");

  joint2_ = nn::Conv2d(static_cast<int>(h1_ch_ + cfg.c_dim), static_cast<int>(h1_ch_), 3, 1, 1,
                       rng, "g.joint2");
  jbn2_ = nn::BatchNorm(static_cast<int>(h1_ch_), "g.joint2");
  h2_ch_ = std::max<long>(8, h1_ch_ / 2);
  up2_.conv = nn::Conv2d(static_cast<int>(h1_ch_), static_cast<int>(h2_ch_), 3, 1, 1, rng, "g.f2");
  up2_.bn = nn::BatchNorm(static_cast<int>(h2_ch_), "g.f2");
  to2_ = nn::Conv2d(static_cast<int>(h2_ch_), 3, 3, 1, 1, rng, "g.to2");
}

MultiScaleImages Generator::forward(const Tensor& z, const Tensor& c, bool train) {
  const long B = z.dim(0);
  require(z.dim(1) == cfg.z_dim && c.dim(1) == cfg.c_dim && c.dim(0) == B,
          "generator: input dims do not match the config");
  batch_ = B;
  Tensor zc({B, static_cast<long>(cfg.z_dim + cfg.c_dim)});
  for (long n = 0; n < B; ++n) {
    std::copy(z.data() + n * cfg.z_dim, z.data() + (n + 1) * cfg.z_dim,
              zc.data() + n * (cfg.z_dim + cfg.c_dim));
    std::copy(c.data() + n * cfg.c_dim, c.data() + (n + 1) * cfg.c_dim,
              zc.data() + n * (cfg.z_dim + cfg.c_dim) + cfg.z_dim);
  }
  Tensor h = fc_.forward(zc);
  h.reshape_({B, start_ch_, 4, 4});
  h = act0_.forward(bn0_.forward(h, train));
  for (auto& blk : f0_) h = blk.act.forward(blk.bn.forward(blk.conv.forward(blk.up.forward(h)), train));
  // h0 at base scale
  MultiScaleImages out;
  out.v0 = tanh0_.forward(to0_.forward(h));

  Tensor j1 = concat_channels(h, tile_vector(c, h.dim(2), h.dim(3)));
  Tensor h1 = jact1_.forward(jbn1_.forward(joint1_.forward(j1), train));
  h1 = up1_.act.forward(up1_.bn.forward(up1_.conv.forward(up1_.up.forward(h1)), train));
  out.v1 = tanh1_.forward(to1_.forward(h1));

  Tensor j2 = concat_channels(h1, tile_vector(c, h1.dim(2), h1.dim(3)));
  Tensor h2 = jact2_.forward(jbn2_.forward(joint2_.forward(j2), train));
  h2 = up2_.act.forward(up2_.bn.forward(up2_.conv.forward(up2_.up.forward(h2)), train));
  out.v2 = tanh2_.forward(to2_.forward(h2));
  return out;
}

Tensor Generator::backward(const Tensor& gv0, const Tensor& gv1, const Tensor& gv2) {
  Tensor gc({batch_, static_cast<long>(cfg.c_dim)});

  // branch 2
  Tensor gh2 = to2_.backward(tanh2_.backward(gv2));
  gh2 = up2_.up.backward(up2_.conv.backward(up2_.bn.backward(up2_.act.backward(gh2))));
  Tensor gj2 = joint2_.backward(jbn2_.backward(jact2_.backward(gh2)));
  Tensor gh1_from2, gc_tile2;
  split_channels(gj2, h1_ch_, gh1_from2, gc_tile2);
  gc.add_(untile_vector(gc_tile2));

  // branch 1
  Tensor gh1 = to1_.backward(tanh1_.backward(gv1));
  gh1.add_(gh1_from2);
  gh1 = up1_.up.backward(up1_.conv.backward(up1_.bn.backward(up1_.act.backward(gh1))));
  Tensor gj1 = joint1_.backward(jbn1_.backward(jact1_.backward(gh1)));
  Tensor gh0_from1, gc_tile1;
  split_channels(gj1, h0_ch_, gh0_from1, gc_tile1);
  gc.add_(untile_vector(gc_tile1));

  // base branch
  Tensor gh0 = to0_.backward(tanh0_.backward(gv0));
  gh0.add_(gh0_from1);
  for (auto it = f0_.rbegin(); it != f0_.rend(); ++it)
    gh0 = it->up.backward(it->conv.backward(it->bn.backward(it->act.backward(gh0))));
  Tensor ga = bn0_.backward(act0_.backward(gh0));
  ga.reshape_({batch_, 16 * start_ch_});
  Tensor gzc = fc_.backward(ga);
  for (long n = 0; n < batch_; ++n)
    for (long i = 0; i < cfg.c_dim; ++i)
      gc[n * cfg.c_dim + i] += gzc[n * (cfg.z_dim + cfg.c_dim) + cfg.z_dim + i];
  return gc;
}

void Generator::params(nn::ParamList& out) {
  fc_.params(out);
  bn0_.params(out);
  for (auto& blk : f0_) {
    blk.conv.params(out);
    blk.bn.params(out);
  }
  to0_.params(out);
  joint1_.params(out);
  jbn1_.params(out);
  up1_.conv.params(out);
  up1_.bn.params(out);
  to1_.params(out);
  joint2_.params(out);
  jbn2_.params(out);
  up2_.conv.params(out);
  up2_.bn.params(out);
  to2_.params(out);
}

void Generator::state(std::vector<std::pair<std::string, Tensor*>>& out) {
  bn0_.state(out);
  for (auto& blk : f0_) blk.bn.state(out);
  jbn1_.state(out);
  up1_.bn.state(out);
  jbn2_.state(out);
  up2_.bn.state(out);
}

// ---------------------------------------------------------------- Discriminator

Discriminator::Discriminator(const GanConfig& cfg, int image_size, Rng& rng,
                             const std::string& name)
    : image_size(image_size) {
  const int n_down = log2_exact(image_size / 4, "discriminator");
  long ch = 3;
  for (int i = 0; i < n_down; ++i) {
    const long next = i == 0 ? cfg.ndf : std::min<long>(ch * 2, 8L * cfg.ndf);
    DownBlock blk;
    blk.conv = nn::Conv2d(static_cast<int>(ch), static_cast<int>(next), 3, 2, 1, rng,
                          name + ".down" + std::to_string(i));
    blk.use_bn = i > 0;
    if (blk.use_bn) blk.bn = nn::BatchNorm(static_cast<int>(next), name + ".down" + std::to_string(i));
    downs_.push_back(std::move(blk));
    ch = next;
  }
  feat_ch_ = ch;
  joint_ = nn::Conv2d(static_cast<int>(ch + cfg.c_dim), static_cast<int>(ch), 1, 1, 0, rng,
                      name + ".joint");
  jbn_ = nn::BatchNorm(static_cast<int>(ch), name + ".joint");
  head_cond_ = nn::Conv2d(static_cast<int>(ch), 1, 4, 1, 0, rng, name + ".head_cond");
  head_uncond_ = nn::Conv2d(static_cast<int>(ch), 1, 4, 1, 0, rng, name + ".head_uncond");
}

Discriminator::Out Discriminator::forward(const Tensor& images, const Tensor& c, bool train) {
  require(images.dim(2) == image_size && images.dim(3) == image_size,
          "discriminator: image scale mismatch (want " + std::to_string(image_size) + ")");
  batch_ = images.dim(0);
  Tensor h = images;
  for (auto& blk : downs_) {
    h = blk.conv.forward(h);
    if (blk.use_bn) h = blk.bn.forward(h, train);
    h = blk.act.forward(h);
  }
  Out out;
  Tensor lu = head_uncond_.forward(h);
  Tensor j = concat_channels(h, tile_vector(c, 4, 4));
  j = jact_.forward(jbn_.forward(joint_.forward(j), train));
  Tensor lc = head_cond_.forward(j);
  out.logit_cond = lc.reshaped({batch_});
  out.logit_uncond = lu.reshaped({batch_});
  return out;
}

std::pair<Tensor, Tensor> Discriminator::backward(const Tensor& gl_cond, const Tensor& gl_uncond) {
  Tensor gj = head_cond_.backward(gl_cond.reshaped({batch_, 1, 1, 1}));
  gj = joint_.backward(jbn_.backward(jact_.backward(gj)));
  Tensor gh, gc_tile;
  split_channels(gj, feat_ch_, gh, gc_tile);
  Tensor gc = untile_vector(gc_tile);
  gh.add_(head_uncond_.backward(gl_uncond.reshaped({batch_, 1, 1, 1})));
  for (auto it = downs_.rbegin(); it != downs_.rend(); ++it) {
    Tensor g = it->act.backward(gh);
    if (it->use_bn) g = it->bn.backward(g);
    gh = it->conv.backward(g);
  }
  return {gh, gc};
}

void Discriminator::params(nn::ParamList& out) {
  for (auto& blk : downs_) {
    blk.conv.params(out);
    if (blk.use_bn) blk.bn.params(out);
  }
  joint_.params(out);
  jbn_.params(out);
  head_cond_.params(out);
  head_uncond_.params(out);
}

void Discriminator::state(std::vector<std::pair<std::string, Tensor*>>& out) {
  for (auto& blk : downs_)
    if (blk.use_bn) blk.bn.state(out);
  jbn_.state(out);
}

}  // namespace mealgen::gan
