#pragma once

#include <string>

#include "assoc/train.hpp"
#include "gan/losses.hpp"
#include "gan/modules.hpp"

namespace mealgen::gan {

struct GanModel {
  GanConfig cfg;
  ConditionAugment ca;
  Generator gen;
  Discriminator d0, d1, d2;
  uint64_t foodspace_hash = 0;

  GanModel() = default;
  GanModel(const GanConfig& cfg, Rng& rng);

  void g_params(nn::ParamList& out);  // generator + conditional augmentation
  void d_params(nn::ParamList& out);

  void save(const std::string& path) const;
  static GanModel load(const std::string& path);
};

Tensor make_noise(long batch, int z_dim, uint64_t seed);

// Eval-mode generation from text-side vectors p: deterministic c = mu unless
// sample_c is set.
MultiScaleImages generate_from(GanModel& model, const Tensor& p, uint64_t z_seed,
                               bool sample_c = false);

struct GanTrainConfig {
  int steps = 1500;
  int batch = 8;
  double lr_g = 2e-4, lr_d = 2e-4;
  double beta1 = 0.5, beta2 = 0.999;
  uint64_t seed = 1;
  int log_every = 25;
  int eval_every = 250;  // checkpoint + oracle snapshot cadence
  int grid_every = 0;    // 0 disables periodic sample grids
  long max_train = 0;
  std::string category;      // empty = all recipes
  std::string oracle_path;   // optional presence oracle for F1 snapshots
};

struct GanTrainResult {
  double final_d_loss = 0.0, final_g_loss = 0.0;
  int steps_run = 0;
  std::string checkpoint;
};

// Alternating D/G optimization over the three scales jointly, with the
// conditional + unconditional adversarial losses, the KL term on the
// conditioning distribution, and the cycle term through the frozen image
// encoder. Aborts on non-finite losses, keeping the last periodic checkpoint.
GanTrainResult train_gan(const data::DatasetManifest& manifest, const std::string& base_dir,
                         assoc::AssocModel& assoc_model, const vocab::IngredientVocabulary& vocab,
                         GanConfig model_cfg, const GanTrainConfig& cfg,
                         const std::string& run_dir, uint64_t foodspace_hash);

}  // namespace mealgen::gan
