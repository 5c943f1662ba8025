#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "assoc/backbone.hpp"
#include "nn/lstm.hpp"

namespace mealgen::assoc {

using nlohmann::json;

struct AssocConfig {
  long vocab_rows = 0;  // embedding rows, pad row included
  long embed_dim = 300;
  int lstm_hidden = 150;  // per direction; concatenated state is 2x this
  long joint_dim = 1024;
  long feat_dim = 2048;
  int image_size = 64;
  bool attention = true;
  double margin = 0.3;

  json to_json() const;
  static AssocConfig from_json(const json& j);
};

// Margin objective on cosine similarity for one triplet pair set. Always
// <= 0; equals 0 iff both margins are satisfied. Training maximizes this
// (the trainer minimizes its negation).
double triplet_objective(const Tensor& p_plus, const Tensor& q_plus, const Tensor& q_minus,
                         const Tensor& p_minus, double margin);

// Gradient of -triplet_objective accumulated into the g* tensors; returns -V.
double triplet_backward(const Tensor& p_plus, const Tensor& q_plus, const Tensor& q_minus,
                        const Tensor& p_minus, double margin, Tensor& gp_plus, Tensor& gq_plus,
                        Tensor& gq_minus, Tensor& gp_minus);

// Ingredient list -> shared-space vector: embedding, bi-directional LSTM,
// attention pooling over hidden states, linear projection.
class IngredientEncoder {
 public:
  IngredientEncoder() = default;
  IngredientEncoder(const AssocConfig& cfg, Rng& rng);

  // tokens use the vocabulary encode convention (0 = pad/unknown).
  Tensor forward(const std::vector<std::vector<int>>& tokens);  // [B, joint_dim]
  void backward(const Tensor& gp);
  void params(nn::ParamList& out);

  const Tensor& last_alpha() const { return pool_.alpha(); }  // [B,T]
  const Tensor& last_hidden() const { return hidden_; }       // [B,T,2H]
  const Tensor& last_pooled() const { return pooled_; }       // [B,2H]
  void set_attention(bool on) { pool_.use_context = on; }

 private:
  nn::Embedding embed_;
  nn::BiLstm lstm_;
  nn::AttentionPool pool_;
  nn::Linear proj_;
  Tensor hidden_, pooled_;
  std::vector<int> lengths_;
};

// Image -> shared-space vector: frozen pooled backbone feature, trainable
// linear projection.
class ImageEncoder {
 public:
  ImageEncoder() = default;
  ImageEncoder(const AssocConfig& cfg, Rng& rng);

  ConvBackbone backbone;

  Tensor forward_images(const Tensor& images);  // [B,3,s,s] -> [B, joint_dim]
  Tensor forward_feats(const Tensor& feats);    // [B, feat_dim] -> [B, joint_dim]
  Tensor backward_feats(const Tensor& gq);      // -> gfeats
  Tensor backward_images(const Tensor& gq);     // -> gimages (through frozen backbone)
  void params(nn::ParamList& out);              // projection only; backbone is frozen

 private:
  nn::Linear proj_;
};

struct AssocModel {
  AssocConfig cfg;
  IngredientEncoder txt;
  ImageEncoder img;
  uint64_t vocab_hash = 0;

  AssocModel() = default;
  AssocModel(const AssocConfig& cfg, Rng& rng);

  void trainable_params(nn::ParamList& out);
  void all_params(nn::ParamList& out);

  void save(const std::string& path) const;
  static AssocModel load(const std::string& path);
};

}  // namespace mealgen::assoc
