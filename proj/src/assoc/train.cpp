#include "assoc/train.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "core/serial.hpp"
#include "nn/adam.hpp"

namespace mealgen::assoc {

namespace fs = std::filesystem;

Tensor extract_features(ConvBackbone& backbone, data::ImageStore& store,
                        const std::vector<std::string>& refs, int batch) {
  Tensor out({static_cast<long>(refs.size()), backbone.feat_dim});
  for (size_t start = 0; start < refs.size(); start += static_cast<size_t>(batch)) {
    const size_t bn = std::min(static_cast<size_t>(batch), refs.size() - start);
    const std::vector<std::string> chunk(refs.begin() + static_cast<long>(start),
                                         refs.begin() + static_cast<long>(start + bn));
    Tensor feats = backbone.forward(store.batch(chunk, backbone.input_size));
    std::copy(feats.data(), feats.data() + feats.size(),
              out.data() + static_cast<long>(start) * backbone.feat_dim);
  }
  return out;
}

Tensor encode_recipes(AssocModel& model, const std::vector<std::vector<int>>& tokens, int batch) {
  Tensor out({static_cast<long>(tokens.size()), model.cfg.joint_dim});
  for (size_t start = 0; start < tokens.size(); start += static_cast<size_t>(batch)) {
    const size_t bn = std::min(static_cast<size_t>(batch), tokens.size() - start);
    const std::vector<std::vector<int>> chunk(tokens.begin() + static_cast<long>(start),
                                              tokens.begin() + static_cast<long>(start + bn));
    Tensor p = model.txt.forward(chunk);
    std::copy(p.data(), p.data() + p.size(),
              out.data() + static_cast<long>(start) * model.cfg.joint_dim);
  }
  return out;
}

namespace {

struct SplitData {
  std::vector<std::vector<int>> tokens;
  std::vector<std::string> refs;  // primary image per recipe
};

SplitData gather_split(const data::DatasetManifest& manifest, data::Split split,
                       const vocab::IngredientVocabulary& vocab, data::ImageStore& store,
                       long cap) {
  SplitData out;
  for (const auto* r : manifest.split(split)) {
    if (cap > 0 && static_cast<long>(out.tokens.size()) >= cap) break;
    if (r->image_refs.empty()) continue;
    if (store.load(r->image_refs.front()) == nullptr) continue;  // warned by the store
    out.tokens.push_back(vocab.encode(r->ingredients));
    out.refs.push_back(r->image_refs.front());
  }
  return out;
}

double paired_medr(AssocModel& model, const SplitData& split, const Tensor& feats, long pool,
                   int reps, uint64_t seed) {
  Tensor p = encode_recipes(model, split.tokens);
  Tensor q = model.img.forward_feats(feats);
  const auto eval = retrieval::evaluate_pairs(q, p, pool, reps, seed);
  return eval.im2recipe.medr_mean;
}

}  // namespace

AssocTrainResult train_association(const data::DatasetManifest& manifest,
                                   const std::string& base_dir,
                                   const vocab::IngredientVocabulary& vocab,
                                   const vocab::EmbeddingTable* init_table,
                                   const ConvBackbone* pretrained_backbone, AssocConfig model_cfg,
                                   const AssocTrainConfig& cfg, const std::string& run_dir) {
  fs::create_directories(run_dir);
  data::ImageStore store(base_dir);

  model_cfg.vocab_rows = vocab.encode_vocab_size();
  Rng init_rng(derive_seed(cfg.seed, 1));
  AssocModel model(model_cfg, init_rng);
  model.vocab_hash = vocab.content_hash();
  if (pretrained_backbone != nullptr) {
    require(pretrained_backbone->input_size == model_cfg.image_size &&
                pretrained_backbone->feat_dim == model_cfg.feat_dim,
            "train_association: backbone checkpoint does not match the model config");
    model.img.backbone = *pretrained_backbone;
  }
  if (init_table != nullptr) {
    require(init_table->rows() == model_cfg.vocab_rows && init_table->dim == model_cfg.embed_dim,
            "train_association: embedding table does not match the vocabulary");
    nn::ParamList ps;
    model.txt.params(ps);
    ps[0]->v = init_table->vectors;  // txt.embed.w
  }

  SplitData train = gather_split(manifest, data::Split::train, vocab, store, cfg.max_train);
  SplitData val = gather_split(manifest, data::Split::val, vocab, store, 0);
  require(!train.tokens.empty(), "train_association: no usable training recipes");

  Tensor train_feats = extract_features(model.img.backbone, store, train.refs);
  Tensor val_feats;
  if (!val.tokens.empty()) val_feats = extract_features(model.img.backbone, store, val.refs);

  nn::ParamList params;
  model.trainable_params(params);
  nn::Adam opt(params, cfg.lr);
  Rng rng(derive_seed(cfg.seed, 2));

  std::ofstream trace(fs::path(run_dir) / "trace.jsonl");
  AssocTrainResult result;
  result.best_val_medr = 1e18;
  const long N = static_cast<long>(train.tokens.size());
  const long D = model_cfg.joint_dim;
  std::vector<long> order(static_cast<size_t>(N));
  std::iota(order.begin(), order.end(), 0L);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    long steps = 0;
    for (long start = 0; start < N; start += cfg.batch) {
      const long bn = std::min<long>(cfg.batch, N - start);
      if (bn < 2) continue;  // in-batch negatives need at least 2 recipes
      std::vector<std::vector<int>> tokens;
      Tensor feats({bn, model_cfg.feat_dim});
      for (long i = 0; i < bn; ++i) {
        const long src = order[static_cast<size_t>(start + i)];
        tokens.push_back(train.tokens[static_cast<size_t>(src)]);
        std::copy(train_feats.data() + src * model_cfg.feat_dim,
                  train_feats.data() + (src + 1) * model_cfg.feat_dim,
                  feats.data() + i * model_cfg.feat_dim);
      }
      Tensor p = model.txt.forward(tokens);
      Tensor q = model.img.forward_feats(feats);

      Tensor gp({bn, D}), gq({bn, D});
      double loss = 0.0;
      for (long i = 0; i < bn; ++i) {
        long j = static_cast<long>(rng() % static_cast<uint64_t>(bn - 1));
        if (j >= i) ++j;  // wrong-image negative
        long k = static_cast<long>(rng() % static_cast<uint64_t>(bn - 1));
        if (k >= i) ++k;  // wrong-recipe negative
        Tensor pi = Tensor({D}), qi = Tensor({D}), qj = Tensor({D}), pk = Tensor({D});
        std::copy(p.data() + i * D, p.data() + (i + 1) * D, pi.data());
        std::copy(q.data() + i * D, q.data() + (i + 1) * D, qi.data());
        std::copy(q.data() + j * D, q.data() + (j + 1) * D, qj.data());
        std::copy(p.data() + k * D, p.data() + (k + 1) * D, pk.data());
        Tensor gpi({D}), gqi({D}), gqj({D}), gpk({D});
        loss += triplet_backward(pi, qi, qj, pk, model_cfg.margin, gpi, gqi, gqj, gpk);
        for (long e = 0; e < D; ++e) {
          gp[i * D + e] += gpi[e];
          gq[i * D + e] += gqi[e];
          gq[j * D + e] += gqj[e];
          gp[k * D + e] += gpk[e];
        }
      }
      loss /= static_cast<double>(bn);
      require(std::isfinite(loss), "train_association: non-finite loss at epoch " +
                                       std::to_string(epoch) + ", step " + std::to_string(steps));
      gp.scale_(1.0 / static_cast<double>(bn));
      gq.scale_(1.0 / static_cast<double>(bn));

      nn::zero_grads(params);
      model.txt.backward(gp);
      model.img.backward_feats(gq);
      opt.step();
      epoch_loss += loss;
      ++steps;
    }
    epoch_loss /= static_cast<double>(std::max<long>(1, steps));
    result.final_loss = epoch_loss;
    result.epochs_run = epoch + 1;

    json line;
    line["epoch"] = epoch;
    line["loss"] = epoch_loss;

    if (cfg.train_eval_pool > 0) {
      const long pool = std::min<long>(cfg.train_eval_pool, N);
      result.final_train_medr =
          paired_medr(model, train, train_feats, pool, 1, derive_seed(cfg.seed, 900));
      line["train_medr"] = result.final_train_medr;
    }
    if (!val.tokens.empty() && (epoch + 1) % cfg.eval_every == 0) {
      const long pool = std::min<long>(cfg.val_pool, static_cast<long>(val.tokens.size()));
      const double medr =
          paired_medr(model, val, val_feats, pool, cfg.val_reps, derive_seed(cfg.seed, 901));
      line["val_medr"] = medr;
      if (medr < result.best_val_medr) {
        result.best_val_medr = medr;
        result.best_checkpoint = (fs::path(run_dir) / "best.ckpt").string();
        model.save(result.best_checkpoint);
      }
    }
    trace << line.dump() << "\n";
    trace.flush();

    if (cfg.stop_train_medr > 0.0 && cfg.train_eval_pool > 0 &&
        result.final_train_medr <= cfg.stop_train_medr)
      break;
  }

  result.last_checkpoint = (fs::path(run_dir) / "last.ckpt").string();
  model.save(result.last_checkpoint);
  if (result.best_checkpoint.empty()) {
    result.best_checkpoint = result.last_checkpoint;
    if (result.best_val_medr > 1e17) result.best_val_medr = 0.0;
  }

  json metrics;
  metrics["final_loss"] = result.final_loss;
  metrics["best_val_medr"] = result.best_val_medr;
  metrics["final_train_medr"] = result.final_train_medr;
  metrics["epochs_run"] = result.epochs_run;
  write_json_file((fs::path(run_dir) / "metrics.json").string(), metrics);
  return result;
}

}  // namespace mealgen::assoc
