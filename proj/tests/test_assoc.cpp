#include <doctest.h>

#include <filesystem>

#include "assoc/model.hpp"
#include "core/check.hpp"
#include "testutil.hpp"

using namespace mealgen;
using test::gradcheck;
namespace fs = std::filesystem;

namespace {

assoc::AssocConfig tiny_config() {
  assoc::AssocConfig cfg;
  cfg.vocab_rows = 12;
  cfg.embed_dim = 8;
  cfg.lstm_hidden = 5;
  cfg.joint_dim = 16;
  cfg.feat_dim = 32;
  cfg.image_size = 16;
  return cfg;
}

Tensor unit_vec(long d, long axis) {
  Tensor v({d});
  v[axis] = 1.0;
  return v;
}

}  // namespace

TEST_CASE("ingredient encoder: widths, determinism, attention trace") {
  Rng rng(41);
  auto cfg = tiny_config();
  assoc::IngredientEncoder enc(cfg, rng);

  Tensor p = enc.forward({{1, 2, 3}});
  CHECK(p.ndim() == 2);
  CHECK(p.dim(1) == cfg.joint_dim);

  // single ingredient -> attention weight exactly 1
  enc.forward({{4}});
  CHECK(enc.last_alpha()[0] == doctest::Approx(1.0));

  // deterministic in eval: same input, same output
  Tensor p1 = enc.forward({{1, 2, 3}});
  Tensor p2 = enc.forward({{1, 2, 3}});
  for (long i = 0; i < p1.size(); ++i) CHECK(p1[i] == p2[i]);

  // pooled state equals the attention-weighted sum of hidden states
  enc.forward({{2, 5, 7}});
  const Tensor& hs = enc.last_hidden();
  const Tensor& alpha = enc.last_alpha();
  const Tensor& pooled = enc.last_pooled();
  const long H = hs.dim(2);
  for (long e = 0; e < H; ++e) {
    double want = 0;
    for (long t = 0; t < 3; ++t) want += alpha[t] * hs[t * H + e];
    CHECK(pooled[e] == doctest::Approx(want).epsilon(1e-12));
  }

  CHECK_THROWS_AS(enc.forward({{99}}), Error);   // out-of-range token
  CHECK_THROWS_AS(enc.forward({{}}), Error);     // empty list
}

TEST_CASE("image encoder: widths and strict dissimilarity of distinct inputs") {
  Rng rng(43);
  auto cfg = tiny_config();
  assoc::ImageEncoder enc(cfg, rng);
  Rng irng(44);
  Tensor imgs = Tensor::uniform({2, 3, 16, 16}, irng, -1.0, 1.0);
  Tensor q = enc.forward_images(imgs);
  CHECK(q.dim(1) == cfg.joint_dim);

  Tensor q2 = enc.forward_images(imgs);
  for (long i = 0; i < q.size(); ++i) CHECK(q[i] == q2[i]);

  Tensor qa({cfg.joint_dim}), qb({cfg.joint_dim});
  for (long e = 0; e < cfg.joint_dim; ++e) {
    qa[e] = q[e];
    qb[e] = q[cfg.joint_dim + e];
  }
  CHECK(cosine(qa, qb) < 1.0);
}

TEST_CASE("triplet objective: paper-anchored values") {
  const long d = 16;
  Tensor u = unit_vec(d, 0);

  // all four vectors identical: each hinge term is min(1-1-0.3, 0) = -0.3
  CHECK(assoc::triplet_objective(u, u, u, u, 0.3) == doctest::Approx(-0.6).epsilon(1e-12));

  // orthogonal negatives with identical positives: margin satisfied, V = 0
  Tensor v = unit_vec(d, 1);
  CHECK(assoc::triplet_objective(u, u, v, v, 0.3) == doctest::Approx(0.0));

  // zero-norm vectors are rejected
  Tensor zero({d});
  CHECK_THROWS_AS(assoc::triplet_objective(zero, u, v, v, 0.3), Error);

  // with margin 0 the objective is bounded by 0 and attains it when every
  // positive outranks its negative
  Rng rng(47);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor p = Tensor::randn({d}, rng), q = Tensor::randn({d}, rng);
    Tensor qn = Tensor::randn({d}, rng), pn = Tensor::randn({d}, rng);
    CHECK(assoc::triplet_objective(p, q, qn, pn, 0.3) <= 1e-12);
  }
  CHECK(assoc::triplet_objective(u, u, v, v, 0.0) == doctest::Approx(0.0));
}

TEST_CASE("triplet objective matches an independent scalar oracle") {
  Rng rng(53);
  for (int trial = 0; trial < 10; ++trial) {
    const long d = 8;
    Tensor p = Tensor::randn({d}, rng), q = Tensor::randn({d}, rng);
    Tensor qn = Tensor::randn({d}, rng), pn = Tensor::randn({d}, rng);
    const double eps = 0.3;

    // direct formula, scalar loops only
    auto cos_ref = [&](const Tensor& a, const Tensor& b) {
      double dot = 0, na = 0, nb = 0;
      for (long i = 0; i < d; ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
      }
      return dot / (std::sqrt(na) * std::sqrt(nb));
    };
    const double spp = cos_ref(p, q);
    const double want = std::min(spp - cos_ref(p, qn) - eps, 0.0) +
                        std::min(spp - cos_ref(pn, q) - eps, 0.0);
    CHECK(assoc::triplet_objective(p, q, qn, pn, eps) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("triplet gradient matches finite differences") {
  Rng rng(59);
  const long d = 8;
  Tensor p = Tensor::randn({d}, rng), q = Tensor::randn({d}, rng);
  Tensor qn = Tensor::randn({d}, rng), pn = Tensor::randn({d}, rng);
  Tensor gp({d}), gq({d}), gqn({d}), gpn({d});
  assoc::triplet_backward(p, q, qn, pn, 0.3, gp, gq, gqn, gpn);
  auto loss = [&]() { return -assoc::triplet_objective(p, q, qn, pn, 0.3); };
  CHECK(gradcheck(p, gp, loss) < 1e-4);
  CHECK(gradcheck(q, gq, loss) < 1e-4);
  CHECK(gradcheck(qn, gqn, loss) < 1e-4);
  CHECK(gradcheck(pn, gpn, loss) < 1e-4);
}

TEST_CASE("encoder gradients flow end to end") {
  Rng rng(61);
  auto cfg = tiny_config();
  assoc::IngredientEncoder enc(cfg, rng);
  const std::vector<std::vector<int>> tokens = {{1, 2, 3}, {4, 5}};
  test::Readout r({2, cfg.joint_dim});
  auto run = [&]() { return r.value(enc.forward(tokens)); };
  nn::ParamList ps;
  enc.params(ps);
  nn::zero_grads(ps);
  enc.forward(tokens);
  enc.backward(r.grad());
  for (auto* p : ps) CHECK(gradcheck(p->v, p->g, run, 1e-5, std::max<long>(1, p->v.size() / 40)) < 1e-5);
}

TEST_CASE("checkpoint round trip preserves encodings") {
  Rng rng(67);
  auto cfg = tiny_config();
  assoc::AssocModel model(cfg, rng);
  model.vocab_hash = 12345;

  const std::vector<std::vector<int>> tokens = {{1, 2, 3}};
  Tensor before = model.txt.forward(tokens);

  const std::string path = (fs::temp_directory_path() / "mg_assoc.ckpt").string();
  model.save(path);
  auto loaded = assoc::AssocModel::load(path);
  CHECK(loaded.vocab_hash == 12345);
  Tensor after = loaded.txt.forward(tokens);
  for (long i = 0; i < before.size(); ++i) CHECK(after[i] == before[i]);

  Rng irng(68);
  Tensor imgs = Tensor::uniform({1, 3, 16, 16}, irng, -1.0, 1.0);
  Tensor qa = model.img.forward_images(imgs);
  Tensor qb = loaded.img.forward_images(imgs);
  for (long i = 0; i < qa.size(); ++i) CHECK(qa[i] == qb[i]);
  fs::remove(path);
}

TEST_CASE("backbone input gradient matches finite differences") {
  Rng rng(71);
  assoc::ConvBackbone bb(16, 24, rng);
  Rng irng(72);
  Tensor x = Tensor::uniform({1, 3, 16, 16}, irng, -1.0, 1.0);
  test::Readout r({1, 24});
  auto run = [&]() { return r.value(bb.forward(x)); };
  bb.forward(x);
  Tensor gx = bb.backward_input(r.grad());
  CHECK(gradcheck(x, gx, run, 1e-5, 7) < 1e-5);
}
