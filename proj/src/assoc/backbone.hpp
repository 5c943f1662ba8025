#pragma once

#include <string>

#include "data/images.hpp"
#include "data/recipe.hpp"
#include "nn/layers.hpp"

namespace mealgen::assoc {

// Small convolutional feature extractor with a pooled output, standing in for
// a large pretrained residual backbone at desk scale. Weights come either
// from a seeded random init or from a pretraining checkpoint; the association
// model keeps them frozen either way.
struct ConvBackbone {
  int input_size = 64;
  long feat_dim = 2048;

  nn::Conv2d c1, c2, c3, c4, c5;
  nn::LeakyRelu a1, a2, a3, a4, a5;

  ConvBackbone() = default;
  ConvBackbone(int input_size, long feat_dim, Rng& rng);

  Tensor forward(const Tensor& images);        // [B,3,s,s] -> [B,feat_dim]
  Tensor backward_input(const Tensor& gfeat);  // -> gimages; params frozen
  void params(nn::ParamList& out);

  void save(const std::string& path) const;
  static ConvBackbone load(const std::string& path);

 private:
  long pooled_h_ = 0, pooled_w_ = 0;
};

struct BackbonePretrainConfig {
  int epochs = 4;
  int batch = 32;
  double lr = 1e-3;
  uint64_t seed = 5;
  long max_images = 4000;
};

// Supervised presence pretraining over a rendered benchmark: backbone +
// linear head, BCE on per-glyph labels. Saves the backbone checkpoint and
// returns held-out per-label accuracy.
double pretrain_backbone(const data::DatasetManifest& manifest, const std::string& bench_dir,
                         const BackbonePretrainConfig& cfg, const std::string& out_path);

}  // namespace mealgen::assoc
