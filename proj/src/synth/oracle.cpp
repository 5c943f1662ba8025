#include "synth/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/check.hpp"
#include "core/serial.hpp"
#include "nn/adam.hpp"

namespace mealgen::synth {

PresenceOracle::PresenceOracle(const OracleConfig& cfg, Rng& rng)
    : cfg(cfg),
      l1_(static_cast<long>(cfg.bins_per_channel) * cfg.bins_per_channel * cfg.bins_per_channel,
          cfg.hidden, rng, "oracle.l1"),
      l2_(cfg.hidden, cfg.k, rng, "oracle.l2") {}

Tensor PresenceOracle::featurize(const Tensor& images) {
  require(images.ndim() == 4 && images.dim(1) == 3, "oracle: want [B,3,h,w]");
  Tensor in = images;
  if (images.dim(2) != cfg.input_size || images.dim(3) != cfg.input_size)
    in = nn::bilinear_resize(images, cfg.input_size, cfg.input_size);
  const long B = in.dim(0), hw = in.dim(2) * in.dim(3);
  const int bins = cfg.bins_per_channel;
  Tensor feat({B, static_cast<long>(bins) * bins * bins});
  for (long n = 0; n < B; ++n) {
    const double* r = in.data() + (n * 3 + 0) * hw;
    const double* g = in.data() + (n * 3 + 1) * hw;
    const double* b = in.data() + (n * 3 + 2) * hw;
    double* f = feat.data() + n * feat.dim(1);
    auto bin_of = [bins](double v) {
      const double v01 = std::clamp((v + 1.0) * 0.5, 0.0, 1.0);
      return std::min(bins - 1, static_cast<int>(v01 * bins));
    };
    for (long i = 0; i < hw; ++i)
      f[(bin_of(r[i]) * bins + bin_of(g[i])) * bins + bin_of(b[i])] += 1.0;
    // Hellinger scaling: sqrt of normalized counts keeps the small glyph
    // bins from being drowned out by the plate and table mass
    for (long i = 0; i < feat.dim(1); ++i) f[i] = std::sqrt(f[i] / static_cast<double>(hw));
  }
  return feat;
}

Tensor PresenceOracle::predict(const Tensor& images) {
  Tensor h = l1_.forward(featurize(images));
  for (long i = 0; i < h.size(); ++i) h[i] = h[i] > 0.0 ? h[i] : 0.0;
  Tensor logits = l2_.forward(h);
  Tensor probs(logits.shape());
  for (long i = 0; i < logits.size(); ++i) probs[i] = 1.0 / (1.0 + std::exp(-logits[i]));
  return probs;
}

Tensor PresenceOracle::hidden_features(const Tensor& images) {
  Tensor h = l1_.forward(featurize(images));
  for (long i = 0; i < h.size(); ++i) h[i] = h[i] > 0.0 ? h[i] : 0.0;
  return h;
}

Tensor PresenceOracle::class_distribution(const Tensor& images) {
  Tensor probs = predict(images);
  const long B = probs.dim(0), K = probs.dim(1);
  for (long n = 0; n < B; ++n) {
    double sum = 0.0;
    for (long k = 0; k < K; ++k) sum += probs[n * K + k];
    if (sum <= 0.0) {
      for (long k = 0; k < K; ++k) probs[n * K + k] = 1.0 / static_cast<double>(K);
    } else {
      for (long k = 0; k < K; ++k) probs[n * K + k] /= sum;
    }
  }
  return probs;
}

double PresenceOracle::train(const Tensor& images, const Tensor& labels) {
  const long N = images.dim(0), K = cfg.k;
  require(labels.dim(0) == N && labels.dim(1) == K, "oracle: labels shape mismatch");
  Tensor feats = featurize(images);
  const long F = feats.dim(1);

  Rng rng(cfg.seed);
  nn::ParamList params;
  l1_.params(params);
  l2_.params(params);
  nn::Adam opt(params, cfg.lr);

  std::vector<long> order(static_cast<size_t>(N));
  std::iota(order.begin(), order.end(), 0L);
  double last_loss = 0.0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    long steps = 0;
    for (long start = 0; start < N; start += cfg.batch) {
      const long bn = std::min<long>(cfg.batch, N - start);
      Tensor x({bn, F}), y({bn, K});
      std::normal_distribution<double> jitter(0.0, cfg.noise_std);
      for (long i = 0; i < bn; ++i) {
        const long src = order[static_cast<size_t>(start + i)];
        for (long f = 0; f < F; ++f)
          x[i * F + f] = std::max(0.0, feats[src * F + f] + jitter(rng) * 0.02);
        for (long k = 0; k < K; ++k) y[i * K + k] = labels[src * K + k];
      }
      nn::zero_grads(params);
      Tensor h = l1_.forward(x);
      Tensor mask(h.shape());
      for (long i = 0; i < h.size(); ++i) {
        mask[i] = h[i] > 0.0 ? 1.0 : 0.0;
        h[i] = std::max(0.0, h[i]);
      }
      Tensor logits = l2_.forward(h);
      double loss = 0.0;
      Tensor glogits(logits.shape());
      for (long i = 0; i < logits.size(); ++i) {
        const double z = logits[i], t = y[i];
        loss += nn::softplus(z) - t * z;  // BCE-with-logits
        const double p = 1.0 / (1.0 + std::exp(-z));
        glogits[i] = (p - t) / static_cast<double>(bn * K);
      }
      loss /= static_cast<double>(bn * K);
      Tensor gh = l2_.backward(glogits);
      for (long i = 0; i < gh.size(); ++i) gh[i] *= mask[i];
      l1_.backward(gh);
      opt.step();
      epoch_loss += loss;
      ++steps;
    }
    last_loss = epoch_loss / static_cast<double>(steps);
  }
  return last_loss;
}

void PresenceOracle::save(const std::string& path) const {
  TensorFile tf;
  tf.meta["kind"] = "mealgen-oracle-v1";
  tf.meta["k"] = cfg.k;
  tf.meta["bins_per_channel"] = cfg.bins_per_channel;
  tf.meta["hidden"] = cfg.hidden;
  tf.meta["input_size"] = cfg.input_size;
  tf.tensors["l1.w"] = l1_.w.v;
  tf.tensors["l1.b"] = l1_.b.v;
  tf.tensors["l2.w"] = l2_.w.v;
  tf.tensors["l2.b"] = l2_.b.v;
  tf.save(path);
}

PresenceOracle PresenceOracle::load(const std::string& path) {
  TensorFile tf = TensorFile::load(path);
  require(tf.meta.value("kind", "") == "mealgen-oracle-v1", "oracle: bad checkpoint " + path);
  OracleConfig cfg;
  cfg.k = tf.meta["k"].get<int>();
  cfg.bins_per_channel = tf.meta["bins_per_channel"].get<int>();
  cfg.hidden = tf.meta["hidden"].get<int>();
  cfg.input_size = tf.meta["input_size"].get<int>();
  Rng rng(0);
  PresenceOracle o(cfg, rng);
  o.l1_.w.v = tf.get("l1.w");
  o.l1_.b.v = tf.get("l1.b");
  o.l2_.w.v = tf.get("l2.w");
  o.l2_.b.v = tf.get("l2.b");
  return o;
}

}  // namespace mealgen::synth
