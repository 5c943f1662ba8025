#include "assoc/model.hpp"

#include "core/serial.hpp"

namespace mealgen::assoc {

json AssocConfig::to_json() const {
  json j;
  j["vocab_rows"] = vocab_rows;
  j["embed_dim"] = embed_dim;
  j["lstm_hidden"] = lstm_hidden;
  j["joint_dim"] = joint_dim;
  j["feat_dim"] = feat_dim;
  j["image_size"] = image_size;
  j["attention"] = attention;
  j["margin"] = margin;
  return j;
}

AssocConfig AssocConfig::from_json(const json& j) {
  AssocConfig c;
  c.vocab_rows = j["vocab_rows"].get<long>();
  c.embed_dim = j["embed_dim"].get<long>();
  c.lstm_hidden = j["lstm_hidden"].get<int>();
  c.joint_dim = j["joint_dim"].get<long>();
  c.feat_dim = j["feat_dim"].get<long>();
  c.image_size = j["image_size"].get<int>();
  c.attention = j["attention"].get<bool>();
  c.margin = j["margin"].get<double>();
  return c;
}

double triplet_objective(const Tensor& p_plus, const Tensor& q_plus, const Tensor& q_minus,
                         const Tensor& p_minus, double margin) {
  require(margin >= 0.0, "triplet_objective: margin must be >= 0");
  const double s_pp = cosine(p_plus, q_plus);
  const double t1 = std::min(s_pp - cosine(p_plus, q_minus) - margin, 0.0);
  const double t2 = std::min(s_pp - cosine(p_minus, q_plus) - margin, 0.0);
  return t1 + t2;
}

double triplet_backward(const Tensor& p_plus, const Tensor& q_plus, const Tensor& q_minus,
                        const Tensor& p_minus, double margin, Tensor& gp_plus, Tensor& gq_plus,
                        Tensor& gq_minus, Tensor& gp_minus) {
  const double s_pp = cosine(p_plus, q_plus);
  const bool active1 = s_pp - cosine(p_plus, q_minus) - margin < 0.0;
  const bool active2 = s_pp - cosine(p_minus, q_plus) - margin < 0.0;
  // loss = -V; each active hinge contributes -(d s_pp - d s_neg)
  if (active1) {
    cosine_backward(p_plus, q_plus, -1.0, gp_plus, gq_plus);
    cosine_backward(p_plus, q_minus, +1.0, gp_plus, gq_minus);
  }
  if (active2) {
    cosine_backward(p_plus, q_plus, -1.0, gp_plus, gq_plus);
    cosine_backward(p_minus, q_plus, +1.0, gp_minus, gq_plus);
  }
  return -triplet_objective(p_plus, q_plus, q_minus, p_minus, margin);
}

// ---------------------------------------------------------------- encoders

IngredientEncoder::IngredientEncoder(const AssocConfig& cfg, Rng& rng)
    : embed_(cfg.vocab_rows, cfg.embed_dim, rng, "txt.embed"),
      lstm_(static_cast<int>(cfg.embed_dim), cfg.lstm_hidden, rng, "txt.lstm"),
      pool_(2L * cfg.lstm_hidden, rng, "txt.attn"),
      proj_(2L * cfg.lstm_hidden, cfg.joint_dim, rng, "txt.proj") {
  pool_.use_context = cfg.attention;
}

Tensor IngredientEncoder::forward(const std::vector<std::vector<int>>& tokens) {
  lengths_.clear();
  for (const auto& t : tokens) {
    require(!t.empty(), "encode_ingredients: empty ingredient list");
    lengths_.push_back(static_cast<int>(t.size()));
  }
  Tensor e = embed_.forward(tokens);
  hidden_ = lstm_.forward(e, lengths_);
  pooled_ = pool_.forward(hidden_, lengths_);
  return proj_.forward(pooled_);
}

void IngredientEncoder::backward(const Tensor& gp) {
  Tensor gpooled = proj_.backward(gp);
  Tensor ghidden = pool_.backward(gpooled);
  Tensor ge = lstm_.backward(ghidden);
  embed_.backward(ge);
}

void IngredientEncoder::params(nn::ParamList& out) {
  embed_.params(out);
  lstm_.params(out);
  pool_.params(out);
  proj_.params(out);
}

ImageEncoder::ImageEncoder(const AssocConfig& cfg, Rng& rng)
    : backbone(cfg.image_size, cfg.feat_dim, rng),
      proj_(cfg.feat_dim, cfg.joint_dim, rng, "img.proj") {}

Tensor ImageEncoder::forward_images(const Tensor& images) {
  return proj_.forward(backbone.forward(images));
}

Tensor ImageEncoder::forward_feats(const Tensor& feats) { return proj_.forward(feats); }

Tensor ImageEncoder::backward_feats(const Tensor& gq) { return proj_.backward(gq); }

Tensor ImageEncoder::backward_images(const Tensor& gq) {
  return backbone.backward_input(proj_.backward(gq));
}

void ImageEncoder::params(nn::ParamList& out) { proj_.params(out); }

// ---------------------------------------------------------------- model

AssocModel::AssocModel(const AssocConfig& cfg, Rng& rng) : cfg(cfg), txt(cfg, rng), img(cfg, rng) {}

void AssocModel::trainable_params(nn::ParamList& out) {
  txt.params(out);
  img.params(out);
}

void AssocModel::all_params(nn::ParamList& out) {
  trainable_params(out);
  img.backbone.params(out);
}

void AssocModel::save(const std::string& path) const {
  TensorFile tf;
  tf.meta["kind"] = "mealgen-assoc-v1";
  tf.meta["config"] = cfg.to_json();
  tf.meta["vocab_hash"] = vocab_hash;
  AssocModel& self = const_cast<AssocModel&>(*this);
  nn::ParamList ps;
  self.all_params(ps);
  for (auto* p : ps) tf.tensors[p->name] = p->v;
  tf.save(path);
}

AssocModel AssocModel::load(const std::string& path) {
  TensorFile tf = TensorFile::load(path);
  require(tf.meta.value("kind", "") == "mealgen-assoc-v1",
          "assoc checkpoint: bad file " + path);
  Rng rng(0);
  AssocModel m(AssocConfig::from_json(tf.meta["config"]), rng);
  m.vocab_hash = tf.meta["vocab_hash"].get<uint64_t>();
  nn::ParamList ps;
  m.all_params(ps);
  for (auto* p : ps) p->v = tf.get(p->name);
  return m;
}

}  // namespace mealgen::assoc
