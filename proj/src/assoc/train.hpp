#pragma once

#include <string>

#include "assoc/model.hpp"
#include "data/images.hpp"
#include "data/recipe.hpp"
#include "retrieval/retrieval.hpp"
#include "vocab/embedding.hpp"
#include "vocab/vocab.hpp"

namespace mealgen::assoc {

struct AssocTrainConfig {
  int epochs = 30;
  int batch = 32;
  double lr = 1e-3;
  uint64_t seed = 1;
  long val_pool = 500;
  int val_reps = 3;
  int eval_every = 1;
  long max_train = 0;           // cap on train recipes; 0 = all
  double stop_train_medr = 0.0;  // stop once train MedR reaches this (0 = off)
  long train_eval_pool = 0;      // when > 0, also track train-set MedR
};

struct AssocTrainResult {
  double final_loss = 0.0;
  double best_val_medr = 0.0;
  double final_train_medr = 0.0;
  int epochs_run = 0;
  std::string best_checkpoint, last_checkpoint;
};

// Frozen-backbone feature extraction for a list of image refs.
Tensor extract_features(ConvBackbone& backbone, data::ImageStore& store,
                        const std::vector<std::string>& refs, int batch = 32);

// Batched ingredient encoding (eval path).
Tensor encode_recipes(AssocModel& model, const std::vector<std::vector<int>>& tokens,
                      int batch = 64);

// Alternating mini-batch ascent on the margin objective with in-batch
// negatives; checkpoints the best validation MedR into run_dir/best.ckpt and
// logs a per-epoch trace.
AssocTrainResult train_association(const data::DatasetManifest& manifest,
                                   const std::string& base_dir,
                                   const vocab::IngredientVocabulary& vocab,
                                   const vocab::EmbeddingTable* init_table,
                                   const ConvBackbone* pretrained_backbone, AssocConfig model_cfg,
                                   const AssocTrainConfig& cfg, const std::string& run_dir);

}  // namespace mealgen::assoc
