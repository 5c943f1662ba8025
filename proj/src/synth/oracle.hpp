#pragma once

#include <string>
#include <vector>

#include "core/image.hpp"
#include "nn/layers.hpp"

namespace mealgen::synth {

struct OracleConfig {
  int k = 8;                 // number of visible glyphs
  int bins_per_channel = 6;  // color histogram resolution
  int hidden = 64;
  int input_size = 64;       // images are resized here before featurization
  int epochs = 60;
  int batch = 32;
  double lr = 5e-3;
  double noise_std = 0.04;   // train-time pixel jitter
  uint64_t seed = 11;
};

// Ingredient-presence classifier: color histogram -> MLP -> per-glyph
// probabilities. Trained on rendered images; the hidden layer doubles as the
// desk-scale feature extractor for FID.
class PresenceOracle {
 public:
  PresenceOracle() = default;
  PresenceOracle(const OracleConfig& cfg, Rng& rng);

  OracleConfig cfg;

  // images [B,3,h,w] in [-1,1]; resized internally when h != input_size.
  Tensor predict(const Tensor& images);          // [B,K] probabilities
  Tensor hidden_features(const Tensor& images);  // [B,hidden]

  // Normalized per-glyph categorical rows for inception-score style metrics.
  Tensor class_distribution(const Tensor& images);  // [B,K], rows sum to 1

  // labels [B,K] in {0,1}; returns final training loss.
  double train(const Tensor& images, const Tensor& labels);

  void save(const std::string& path) const;
  static PresenceOracle load(const std::string& path);

 private:
  nn::Linear l1_, l2_;
  Tensor featurize(const Tensor& images);  // [B, bins^3]
};

}  // namespace mealgen::synth
