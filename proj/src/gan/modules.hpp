#pragma once

#include <json.hpp>
#include <vector>

#include "nn/layers.hpp"

namespace mealgen::gan {

using nlohmann::json;

struct GanConfig {
  long joint_dim = 1024;  // conditioning input width (text-side shared-space vector)
  int z_dim = 100;
  int c_dim = 128;
  int base_scale = 64;  // images come out at (s, 2s, 4s)
  int ngf = 32, ndf = 16;
  double lambda_uncond = 0.5, lambda_ca = 0.02, lambda_cycle = 1.0;

  json to_json() const;
  static GanConfig from_json(const json& j);
};

// Conditioning-vector augmentation: a linear head predicting (mu, logvar) and
// a reparameterized sample c = mu + exp(logvar/2) * eta.
class ConditionAugment {
 public:
  struct Sample {
    Tensor mu, logvar, c;  // [B, c_dim]
  };

  ConditionAugment() = default;
  ConditionAugment(const GanConfig& cfg, Rng& rng);

  // sample=false takes the deterministic branch c = mu (eval switch).
  Sample forward(const Tensor& p, bool sample, Rng* rng);

  // Upstream gradients on c, mu and logvar combine into the gradient on p.
  Tensor backward(const Tensor& gc, const Tensor& gmu, const Tensor& glogvar);

  void params(nn::ParamList& out);
  const Tensor& last_eta() const { return eta_; }

 private:
  int c_dim_ = 0;
  nn::Linear fc_;
  Tensor eta_, logvar_;
};

// Concatenate along the channel axis ([B,C1,H,W] + [B,C2,H,W]).
Tensor concat_channels(const Tensor& a, const Tensor& b);
void split_channels(const Tensor& g, long c1, Tensor& ga, Tensor& gb);
Tensor tile_vector(const Tensor& v, long h, long w);  // [B,C] -> [B,C,h,w]
Tensor untile_vector(const Tensor& g);                // sums spatial positions

struct MultiScaleImages {
  Tensor v0, v1, v2;  // [B,3,s,s], [B,3,2s,2s], [B,3,4s,4s]
};

// Three stacked branches: F0 maps (z, c) to the base hidden map, F1/F2 fuse
// the previous hidden map with c and upsample; each T_i renders an image.
class Generator {
 public:
  Generator() = default;
  Generator(const GanConfig& cfg, Rng& rng);

  MultiScaleImages forward(const Tensor& z, const Tensor& c, bool train);
  Tensor backward(const Tensor& gv0, const Tensor& gv1, const Tensor& gv2);  // -> gc

  void params(nn::ParamList& out);
  void state(std::vector<std::pair<std::string, Tensor*>>& out);

  GanConfig cfg;

 private:
  struct UpBlock {
    nn::Upsample2x up;
    nn::Conv2d conv;
    nn::BatchNorm bn;
    nn::Relu act;
  };
  int n_up0_ = 0;
  long start_ch_ = 0, h0_ch_ = 0, h1_ch_ = 0, h2_ch_ = 0;
  nn::Linear fc_;
  nn::BatchNorm bn0_;
  nn::Relu act0_;
  std::vector<UpBlock> f0_;
  nn::Conv2d joint1_, joint2_;
  nn::BatchNorm jbn1_, jbn2_;
  nn::Relu jact1_, jact2_;
  UpBlock up1_, up2_;
  nn::Conv2d to0_, to1_, to2_;
  nn::Tanh tanh0_, tanh1_, tanh2_;
  long batch_ = 0;
};

// Per-scale discriminator with an unconditional head on pooled features and a
// conditional head on features fused with the tiled conditioning vector.
// Heads emit logits; sigmoid gives the probability outputs.
class Discriminator {
 public:
  struct Out {
    Tensor logit_cond, logit_uncond;  // [B]
  };

  Discriminator() = default;
  Discriminator(const GanConfig& cfg, int image_size, Rng& rng, const std::string& name);

  Out forward(const Tensor& images, const Tensor& c, bool train);
  std::pair<Tensor, Tensor> backward(const Tensor& gl_cond, const Tensor& gl_uncond);  // -> (gimg, gc)

  void params(nn::ParamList& out);
  void state(std::vector<std::pair<std::string, Tensor*>>& out);

  int image_size = 0;

 private:
  struct DownBlock {
    nn::Conv2d conv;
    nn::BatchNorm bn;
    bool use_bn = false;
    nn::LeakyRelu act;
  };
  std::vector<DownBlock> downs_;
  nn::Conv2d joint_;
  nn::BatchNorm jbn_;
  nn::LeakyRelu jact_;
  nn::Conv2d head_cond_, head_uncond_;
  long feat_ch_ = 0, batch_ = 0;
};

}  // namespace mealgen::gan
