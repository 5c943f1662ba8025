#include "assoc/backbone.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/check.hpp"
#include "core/serial.hpp"
#include "nn/adam.hpp"
#include "synth/bench.hpp"

namespace mealgen::assoc {

ConvBackbone::ConvBackbone(int input_size, long feat_dim, Rng& rng)
    : input_size(input_size), feat_dim(feat_dim),
      c1(3, 24, 3, 2, 1, rng, "backbone.c1"),
      c2(24, 48, 3, 2, 1, rng, "backbone.c2"),
      c3(48, 96, 3, 2, 1, rng, "backbone.c3"),
      c4(96, 192, 3, 2, 1, rng, "backbone.c4"),
      c5(192, static_cast<int>(feat_dim), 1, 1, 0, rng, "backbone.c5") {}

Tensor ConvBackbone::forward(const Tensor& images) {
  require(images.ndim() == 4 && images.dim(1) == 3 && images.dim(2) == input_size &&
              images.dim(3) == input_size,
          "backbone: want [B,3," + std::to_string(input_size) + "," + std::to_string(input_size) + "]");
  Tensor h = a1.forward(c1.forward(images));
  h = a2.forward(c2.forward(h));
  h = a3.forward(c3.forward(h));
  h = a4.forward(c4.forward(h));
  h = a5.forward(c5.forward(h));
  const long B = h.dim(0), C = h.dim(1);
  pooled_h_ = h.dim(2);
  pooled_w_ = h.dim(3);
  const long S = pooled_h_ * pooled_w_;
  Tensor feat({B, C});
  for (long n = 0; n < B; ++n)
    for (long c = 0; c < C; ++c) {
      const double* p = h.data() + (n * C + c) * S;
      double sum = 0.0;
      for (long i = 0; i < S; ++i) sum += p[i];
      feat[n * C + c] = sum / static_cast<double>(S);
    }
  return feat;
}

Tensor ConvBackbone::backward_input(const Tensor& gfeat) {
  const long B = gfeat.dim(0), C = feat_dim, S = pooled_h_ * pooled_w_;
  Tensor gh({B, C, pooled_h_, pooled_w_});
  for (long n = 0; n < B; ++n)
    for (long c = 0; c < C; ++c) {
      const double g = gfeat[n * C + c] / static_cast<double>(S);
      double* p = gh.data() + (n * C + c) * S;
      for (long i = 0; i < S; ++i) p[i] = g;
    }
  Tensor gx = c5.backward(a5.backward(gh));
  gx = c4.backward(a4.backward(gx));
  gx = c3.backward(a3.backward(gx));
  gx = c2.backward(a2.backward(gx));
  gx = c1.backward(a1.backward(gx));
  return gx;
}

void ConvBackbone::params(nn::ParamList& out) {
  c1.params(out);
  c2.params(out);
  c3.params(out);
  c4.params(out);
  c5.params(out);
}

void ConvBackbone::save(const std::string& path) const {
  TensorFile tf;
  tf.meta["kind"] = "mealgen-backbone-v1";
  tf.meta["input_size"] = input_size;
  tf.meta["feat_dim"] = feat_dim;
  ConvBackbone& self = const_cast<ConvBackbone&>(*this);
  nn::ParamList ps;
  self.params(ps);
  for (auto* p : ps) tf.tensors[p->name] = p->v;
  tf.save(path);
}

ConvBackbone ConvBackbone::load(const std::string& path) {
  TensorFile tf = TensorFile::load(path);
  require(tf.meta.value("kind", "") == "mealgen-backbone-v1", "backbone: bad checkpoint " + path);
  Rng rng(0);
  ConvBackbone bb(tf.meta["input_size"].get<int>(), tf.meta["feat_dim"].get<long>(), rng);
  nn::ParamList ps;
  bb.params(ps);
  for (auto* p : ps) p->v = tf.get(p->name);
  return bb;
}

double pretrain_backbone(const data::DatasetManifest& manifest, const std::string& bench_dir,
                         const BackbonePretrainConfig& cfg, const std::string& out_path) {
  const synth::BenchMeta meta = synth::BenchMeta::load(bench_dir);
  const long K = meta.palette.visible_count();
  data::ImageStore store(bench_dir);

  struct Sample {
    std::string ref;
    std::vector<int> label;
  };
  std::vector<Sample> train, val;
  for (const auto* r : manifest.split(data::Split::train)) {
    if (static_cast<long>(train.size()) >= cfg.max_images) break;
    train.push_back({r->image_refs.front(), meta.visible_label(r->ingredients)});
  }
  for (const auto* r : manifest.split(data::Split::val)) {
    if (static_cast<long>(val.size()) >= 400) break;
    val.push_back({r->image_refs.front(), meta.visible_label(r->ingredients)});
  }
  require(!train.empty() && !val.empty(), "pretrain_backbone: empty splits");

  Rng rng(cfg.seed);
  ConvBackbone bb(64, 2048, rng);
  nn::Linear head(bb.feat_dim, K, rng, "pretrain.head");
  nn::ParamList ps;
  bb.params(ps);
  head.params(ps);
  nn::Adam opt(ps, cfg.lr);

  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0u);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch)) {
      const size_t bn = std::min(static_cast<size_t>(cfg.batch), order.size() - start);
      std::vector<std::string> refs;
      Tensor y({static_cast<long>(bn), K});
      for (size_t i = 0; i < bn; ++i) {
        const Sample& s = train[order[start + i]];
        refs.push_back(s.ref);
        for (long k = 0; k < K; ++k) y[static_cast<long>(i) * K + k] = s.label[static_cast<size_t>(k)];
      }
      Tensor x = store.batch(refs, bb.input_size);
      nn::zero_grads(ps);
      Tensor logits = head.forward(bb.forward(x));
      Tensor glogits(logits.shape());
      double loss = 0.0;
      for (long i = 0; i < logits.size(); ++i) {
        const double z = logits[i], t = y[i];
        loss += nn::softplus(z) - t * z;
        glogits[i] = (1.0 / (1.0 + std::exp(-z)) - t) / static_cast<double>(logits.size());
      }
      require(std::isfinite(loss), "pretrain_backbone: non-finite loss");
      bb.backward_input(head.backward(glogits));
      opt.step();
    }
  }

  // held-out per-label accuracy
  long hits = 0, total = 0;
  for (size_t start = 0; start < val.size(); start += 64) {
    const size_t bn = std::min<size_t>(64, val.size() - start);
    std::vector<std::string> refs;
    for (size_t i = 0; i < bn; ++i) refs.push_back(val[start + i].ref);
    Tensor logits = head.forward(bb.forward(store.batch(refs, bb.input_size)));
    for (size_t i = 0; i < bn; ++i)
      for (long k = 0; k < K; ++k) {
        const bool pred = logits[static_cast<long>(i) * K + k] > 0.0;
        hits += pred == (val[start + i].label[static_cast<size_t>(k)] == 1) ? 1 : 0;
        ++total;
      }
  }
  bb.save(out_path);
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace mealgen::assoc
