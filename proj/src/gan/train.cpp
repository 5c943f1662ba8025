#include "gan/train.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "core/serial.hpp"
#include "nn/adam.hpp"
#include "synth/bench.hpp"
#include "synth/oracle.hpp"

namespace mealgen::gan {

namespace fs = std::filesystem;

GanModel::GanModel(const GanConfig& cfg, Rng& rng)
    : cfg(cfg), ca(cfg, rng), gen(cfg, rng),
      d0(cfg, cfg.base_scale, rng, "d0"),
      d1(cfg, cfg.base_scale * 2, rng, "d1"),
      d2(cfg, cfg.base_scale * 4, rng, "d2") {}

void GanModel::g_params(nn::ParamList& out) {
  gen.params(out);
  ca.params(out);
}

void GanModel::d_params(nn::ParamList& out) {
  d0.params(out);
  d1.params(out);
  d2.params(out);
}

void GanModel::save(const std::string& path) const {
  TensorFile tf;
  tf.meta["kind"] = "mealgen-gan-v1";
  tf.meta["config"] = cfg.to_json();
  tf.meta["foodspace_hash"] = foodspace_hash;
  GanModel& self = const_cast<GanModel&>(*this);
  nn::ParamList ps;
  self.g_params(ps);
  self.d_params(ps);
  for (auto* p : ps) tf.tensors[p->name] = p->v;
  std::vector<std::pair<std::string, Tensor*>> st;
  self.gen.state(st);
  self.d0.state(st);
  self.d1.state(st);
  self.d2.state(st);
  for (auto& [name, t] : st) tf.tensors[name] = *t;
  tf.save(path);
}

GanModel GanModel::load(const std::string& path) {
  TensorFile tf = TensorFile::load(path);
  require(tf.meta.value("kind", "") == "mealgen-gan-v1", "gan checkpoint: bad file " + path);
  Rng rng(0);
  GanModel m(GanConfig::from_json(tf.meta["config"]), rng);
  m.foodspace_hash = tf.meta["foodspace_hash"].get<uint64_t>();
  nn::ParamList ps;
  m.g_params(ps);
  m.d_params(ps);
  for (auto* p : ps) p->v = tf.get(p->name);
  std::vector<std::pair<std::string, Tensor*>> st;
  m.gen.state(st);
  m.d0.state(st);
  m.d1.state(st);
  m.d2.state(st);
  for (auto& [name, t] : st) *t = tf.get(name);
  return m;
}

Tensor make_noise(long batch, int z_dim, uint64_t seed) {
  Rng rng(seed);
  return Tensor::randn({batch, z_dim}, rng);
}

MultiScaleImages generate_from(GanModel& model, const Tensor& p, uint64_t z_seed, bool sample_c) {
  Rng eta_rng(derive_seed(z_seed, 77));
  auto cs = model.ca.forward(p, sample_c, sample_c ? &eta_rng : nullptr);
  Tensor z = make_noise(p.dim(0), model.cfg.z_dim, z_seed);
  return model.gen.forward(z, cs.c, /*train=*/false);
}

namespace {

// d softplus(x) / dx = sigmoid(x)
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct ScaleLoss {
  double cond = 0.0, uncond = 0.0;
};

// One discriminator group (real / wrong / fake) forward+backward. labels:
// cond_real / uncond_real choose which heads see this group as real.
ScaleLoss disc_group_step(Discriminator& d, const Tensor& imgs, const Tensor& c, bool cond_real,
                          bool uncond_real, double lambda_uncond) {
  const long B = imgs.dim(0);
  auto out = d.forward(imgs, c, /*train=*/true);
  ScaleLoss loss;
  Tensor glc({B}), glu({B});
  for (long i = 0; i < B; ++i) {
    const double lc = out.logit_cond[i], lu = out.logit_uncond[i];
    if (cond_real) {
      loss.cond += nn::softplus(-lc);
      glc[i] = -sigmoid(-lc) / static_cast<double>(B);
    } else {
      loss.cond += nn::softplus(lc);
      glc[i] = sigmoid(lc) / static_cast<double>(B);
    }
    if (uncond_real) {
      loss.uncond += nn::softplus(-lu);
      glu[i] = -lambda_uncond * sigmoid(-lu) / static_cast<double>(B);
    } else {
      loss.uncond += nn::softplus(lu);
      glu[i] = lambda_uncond * sigmoid(lu) / static_cast<double>(B);
    }
  }
  loss.cond /= static_cast<double>(B);
  loss.uncond /= static_cast<double>(B);
  d.backward(glc, glu);
  return loss;
}

}  // namespace

GanTrainResult train_gan(const data::DatasetManifest& manifest, const std::string& base_dir,
                         assoc::AssocModel& assoc_model, const vocab::IngredientVocabulary& vocab,
                         GanConfig model_cfg, const GanTrainConfig& cfg,
                         const std::string& run_dir, uint64_t foodspace_hash) {
  fs::create_directories(run_dir);
  fs::create_directories(fs::path(run_dir) / "grids");
  data::ImageStore store(base_dir);

  // train recipes with usable images
  std::vector<std::vector<int>> tokens;
  std::vector<std::vector<std::string>> names;
  std::vector<std::string> refs, ids;
  for (const auto* r : manifest.split(data::Split::train)) {
    if (cfg.max_train > 0 && static_cast<long>(tokens.size()) >= cfg.max_train) break;
    if (!cfg.category.empty() && r->category != cfg.category) continue;
    if (r->image_refs.empty() || store.load(r->image_refs.front()) == nullptr) continue;
    tokens.push_back(vocab.encode(r->ingredients));
    names.push_back(r->ingredients);
    refs.push_back(r->image_refs.front());
    ids.push_back(r->id);
  }
  const long N = static_cast<long>(tokens.size());
  require(N >= 4, "train_gan: need at least 4 usable training recipes");

  model_cfg.joint_dim = assoc_model.cfg.joint_dim;
  const long D = model_cfg.joint_dim;

  // frozen text/image coordinates of the training set
  Tensor p_all = assoc::encode_recipes(assoc_model, tokens);
  Tensor feats_all = assoc::extract_features(assoc_model.img.backbone, store, refs);
  Tensor q_all = assoc_model.img.forward_feats(feats_all);
  Rng init_rng(derive_seed(cfg.seed, 1));
  GanModel model(model_cfg, init_rng);
  model.foodspace_hash = foodspace_hash;

  nn::ParamList gp, dp;
  model.g_params(gp);
  model.d_params(dp);
  nn::Adam opt_g(gp, cfg.lr_g, cfg.beta1, cfg.beta2);
  nn::Adam opt_d(dp, cfg.lr_d, cfg.beta1, cfg.beta2);

  Rng data_rng(derive_seed(cfg.seed, 2));
  Rng z_rng(derive_seed(cfg.seed, 3));
  Rng eta_rng(derive_seed(cfg.seed, 4));

  const int s0 = model_cfg.base_scale, s1 = 2 * s0, s2 = 4 * s0;
  const int enc_size = assoc_model.cfg.image_size;
  nn::BilinearResize cyc_resize[3] = {nn::BilinearResize(enc_size, enc_size),
                                      nn::BilinearResize(enc_size, enc_size),
                                      nn::BilinearResize(enc_size, enc_size)};

  std::unique_ptr<synth::PresenceOracle> oracle;
  std::unique_ptr<synth::BenchMeta> bench_meta;
  if (!cfg.oracle_path.empty()) {
    oracle = std::make_unique<synth::PresenceOracle>(synth::PresenceOracle::load(cfg.oracle_path));
    bench_meta = std::make_unique<synth::BenchMeta>(synth::BenchMeta::load(base_dir));
  }

  std::ofstream trace(fs::path(run_dir) / "trace.jsonl");
  const std::string ckpt_path = (fs::path(run_dir) / "last.ckpt").string();
  GanTrainResult result;

  auto write_grids = [&](int step) {
    const long n_show = std::min<long>(6, N);
    Tensor p({n_show, D});
    json sidecar;
    sidecar["z_seed"] = derive_seed(cfg.seed, 55);
    sidecar["recipe_ids"] = json::array();
    for (long i = 0; i < n_show; ++i) {
      std::copy(p_all.data() + i * D, p_all.data() + (i + 1) * D, p.data() + i * D);
      sidecar["recipe_ids"].push_back(ids[static_cast<size_t>(i)]);
    }
    auto imgs = generate_from(model, p, derive_seed(cfg.seed, 55));
    const Tensor* vs[3] = {&imgs.v0, &imgs.v1, &imgs.v2};
    const int sizes[3] = {s0, s1, s2};
    for (int k = 0; k < 3; ++k) {
      std::vector<ImageU8> tiles;
      for (long i = 0; i < n_show; ++i) {
        Tensor one({3, sizes[k], sizes[k]});
        std::copy(vs[k]->data() + i * one.size(), vs[k]->data() + (i + 1) * one.size(), one.data());
        tiles.push_back(tensor_to_image(one));
      }
      char name[64];
      std::snprintf(name, sizeof(name), "step%06d_s%d.ppm", step, sizes[k]);
      write_ppm((fs::path(run_dir) / "grids" / name).string(), tile_grid(tiles, 1));
      sidecar["scales"].push_back(sizes[k]);
    }
    char meta_name[64];
    std::snprintf(meta_name, sizeof(meta_name), "step%06d.json", step);
    write_json_file((fs::path(run_dir) / "grids" / meta_name).string(), sidecar);
  };

  for (int step = 0; step < cfg.steps; ++step) {
    // ------------------------------------------------ batch assembly
    const long B = cfg.batch;
    std::vector<long> idx(static_cast<size_t>(B)), wrong(static_cast<size_t>(B));
    for (long i = 0; i < B; ++i) {
      idx[static_cast<size_t>(i)] = static_cast<long>(data_rng() % static_cast<uint64_t>(N));
      long w = static_cast<long>(data_rng() % static_cast<uint64_t>(N));
      if (w == idx[static_cast<size_t>(i)]) w = (w + 1) % N;
      wrong[static_cast<size_t>(i)] = w;
    }
    std::vector<std::string> real_refs, wrong_refs;
    Tensor p({B, D}), q_plus({B, D});
    for (long i = 0; i < B; ++i) {
      const long src = idx[static_cast<size_t>(i)];
      real_refs.push_back(refs[static_cast<size_t>(src)]);
      wrong_refs.push_back(refs[static_cast<size_t>(wrong[static_cast<size_t>(i)])]);
      std::copy(p_all.data() + src * D, p_all.data() + (src + 1) * D, p.data() + i * D);
      std::copy(q_all.data() + src * D, q_all.data() + (src + 1) * D, q_plus.data() + i * D);
    }
    const int sizes[3] = {s0, s1, s2};
    Tensor reals[3], wrongs[3];
    for (int k = 0; k < 3; ++k) {
      reals[k] = store.batch(real_refs, sizes[k]);
      wrongs[k] = store.batch(wrong_refs, sizes[k]);
    }

    auto cs = model.ca.forward(p, /*sample=*/true, &eta_rng);
    Tensor z = Tensor::randn({B, model_cfg.z_dim}, z_rng);
    MultiScaleImages fakes = model.gen.forward(z, cs.c, /*train=*/true);
    const Tensor* fake_ptr[3] = {&fakes.v0, &fakes.v1, &fakes.v2};
    Discriminator* ds[3] = {&model.d0, &model.d1, &model.d2};

    // ------------------------------------------------ discriminator step
    nn::zero_grads(dp);
    double d_loss = 0.0;
    for (int k = 0; k < 3; ++k) {
      const auto lr = disc_group_step(*ds[k], reals[k], cs.c, true, true, model_cfg.lambda_uncond);
      const auto lw = disc_group_step(*ds[k], wrongs[k], cs.c, false, true, model_cfg.lambda_uncond);
      const auto lf = disc_group_step(*ds[k], *fake_ptr[k], cs.c, false, false, model_cfg.lambda_uncond);
      d_loss += lr.cond + lw.cond + lf.cond +
                model_cfg.lambda_uncond * (lr.uncond + lw.uncond + lf.uncond);
    }
    opt_d.step();

    // ------------------------------------------------ generator step
    nn::zero_grads(gp);
    Tensor gfake[3];
    Tensor gc_total({B, static_cast<long>(model_cfg.c_dim)});
    double g_loss = 0.0, cycle_mean = 0.0;
    for (int k = 0; k < 3; ++k) {
      auto out = ds[k]->forward(*fake_ptr[k], cs.c, /*train=*/true);
      Tensor glc({B}), glu({B});
      for (long i = 0; i < B; ++i) {
        g_loss += (nn::softplus(-out.logit_cond[i]) +
                   model_cfg.lambda_uncond * nn::softplus(-out.logit_uncond[i])) /
                  static_cast<double>(B);
        glc[i] = -sigmoid(-out.logit_cond[i]) / static_cast<double>(B);
        glu[i] = -model_cfg.lambda_uncond * sigmoid(-out.logit_uncond[i]) / static_cast<double>(B);
      }
      auto [gimg, gc] = ds[k]->backward(glc, glu);
      gfake[k] = gimg;
      gc_total.add_(gc);

      // cycle term through the frozen image encoder
      Tensor resized = cyc_resize[k].forward(*fake_ptr[k]);
      Tensor q_tilde = assoc_model.img.forward_images(resized);
      Tensor gq({B, D});
      Tensor row_q(std::vector<long>{D}), row_qt(std::vector<long>{D}), grow(std::vector<long>{D}),
          scratch(std::vector<long>{D});
      for (long i = 0; i < B; ++i) {
        std::copy(q_plus.data() + i * D, q_plus.data() + (i + 1) * D, row_q.data());
        std::copy(q_tilde.data() + i * D, q_tilde.data() + (i + 1) * D, row_qt.data());
        const double sim = cosine(row_q, row_qt);
        cycle_mean += sim / (3.0 * static_cast<double>(B));
        g_loss += -model_cfg.lambda_cycle * sim / static_cast<double>(B);
        grow.zero_();
        scratch.zero_();
        cosine_backward(row_qt, row_q, -model_cfg.lambda_cycle / static_cast<double>(B), grow,
                        scratch);
        std::copy(grow.data(), grow.data() + D, gq.data() + i * D);
      }
      Tensor gimg64 = assoc_model.img.backward_images(gq);
      gfake[k].add_(cyc_resize[k].backward(gimg64));
    }
    const double l_ca = kl_standard_normal(cs.mu, cs.logvar);
    g_loss += model_cfg.lambda_ca * l_ca;
    Tensor gmu(cs.mu.shape()), glogvar(cs.logvar.shape());
    kl_standard_normal_backward(cs.mu, cs.logvar, model_cfg.lambda_ca, gmu, glogvar);

    gc_total.add_(model.gen.backward(gfake[0], gfake[1], gfake[2]));
    model.ca.backward(gc_total, gmu, glogvar);  // gradient on p is discarded: encoders frozen
    opt_g.step();

    if (!std::isfinite(d_loss) || !std::isfinite(g_loss))
      throw Error("train_gan: non-finite loss at step " + std::to_string(step) +
                  "; last good checkpoint: " + (result.checkpoint.empty() ? "none" : result.checkpoint));

    result.final_d_loss = d_loss;
    result.final_g_loss = g_loss;
    result.steps_run = step + 1;

    if (cfg.log_every > 0 && step % cfg.log_every == 0) {
      json line;
      line["step"] = step;
      line["d_loss"] = d_loss;
      line["g_loss"] = g_loss;
      line["l_ca"] = l_ca;
      line["cycle_mean"] = cycle_mean;
      trace << line.dump() << "\n";
      trace.flush();
    }
    if (cfg.eval_every > 0 && (step + 1) % cfg.eval_every == 0) {
      model.save(ckpt_path);
      result.checkpoint = ckpt_path;
      json line;
      line["step"] = step;
      line["snapshot"] = "checkpoint";
      if (oracle) {
        // conditioning snapshot: oracle micro-F1 on a fixed probe batch
        const long n_probe = std::min<long>(48, N);
        Tensor pp({n_probe, D});
        for (long i = 0; i < n_probe; ++i)
          std::copy(p_all.data() + i * D, p_all.data() + (i + 1) * D, pp.data() + i * D);
        auto imgs = generate_from(model, pp, derive_seed(cfg.seed, 500));
        Tensor probs = oracle->predict(imgs.v2);
        long tp = 0, fp = 0, fn = 0;
        const long K = probs.dim(1);
        for (long i = 0; i < n_probe; ++i) {
          const auto label = bench_meta->visible_label(names[static_cast<size_t>(i)]);
          for (long k = 0; k < K; ++k) {
            const bool pred = probs[i * K + k] > 0.5;
            const bool truth = label[static_cast<size_t>(k)] == 1;
            tp += pred && truth;
            fp += pred && !truth;
            fn += !pred && truth;
          }
        }
        line["probe_f1"] = 2.0 * static_cast<double>(tp) /
                           std::max(1.0, 2.0 * static_cast<double>(tp) + static_cast<double>(fp) +
                                             static_cast<double>(fn));
      }
      trace << line.dump() << "\n";
      trace.flush();
    }
    if (cfg.grid_every > 0 && ((step + 1) % cfg.grid_every == 0 || step + 1 == cfg.steps))
      write_grids(step + 1);
  }

  model.save(ckpt_path);
  result.checkpoint = ckpt_path;

  json metrics;
  metrics["final_d_loss"] = result.final_d_loss;
  metrics["final_g_loss"] = result.final_g_loss;
  metrics["steps_run"] = result.steps_run;
  write_json_file((fs::path(run_dir) / "metrics.json").string(), metrics);
  return result;
}

}  // namespace mealgen::gan
