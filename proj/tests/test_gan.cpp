#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "core/check.hpp"
#include "gan/losses.hpp"
#include "gan/train.hpp"
#include "testutil.hpp"

using namespace mealgen;
using test::gradcheck;
namespace fs = std::filesystem;

namespace {

gan::GanConfig tiny_config() {
  gan::GanConfig cfg;
  cfg.joint_dim = 24;
  cfg.z_dim = 6;
  cfg.c_dim = 5;
  cfg.base_scale = 16;
  cfg.ngf = 8;
  cfg.ndf = 4;
  return cfg;
}

}  // namespace

TEST_CASE("condition augment: reparameterized sampling") {
  Rng rng(81);
  auto cfg = tiny_config();
  gan::ConditionAugment ca(cfg, rng);
  Rng prng(82);
  Tensor p = Tensor::randn({3, cfg.joint_dim}, prng);

  Rng eta_rng(83);
  auto s1 = ca.forward(p, true, &eta_rng);
  auto s2 = ca.forward(p, true, &eta_rng);
  bool differ = false;
  for (long i = 0; i < s1.c.size(); ++i) {
    CHECK(s1.mu[i] == s2.mu[i]);
    CHECK(s1.logvar[i] == s2.logvar[i]);
    if (s1.c[i] != s2.c[i]) differ = true;
  }
  CHECK(differ);

  // deterministic eval switch: c = mu exactly
  auto se = ca.forward(p, false, nullptr);
  for (long i = 0; i < se.c.size(); ++i) CHECK(se.c[i] == se.mu[i]);
}

TEST_CASE("condition augment: Monte-Carlo mean of c approaches mu") {
  Rng rng(89);
  gan::GanConfig cfg = tiny_config();
  cfg.c_dim = 4;
  gan::ConditionAugment ca(cfg, rng);
  Rng prng(90);
  Tensor p = Tensor::randn({1, cfg.joint_dim}, prng);

  const long n = 100000;
  Tensor sum({static_cast<long>(cfg.c_dim)});
  Rng eta_rng(91);
  Tensor mu, logvar;
  for (long k = 0; k < n; ++k) {
    auto s = ca.forward(p, true, &eta_rng);
    for (long i = 0; i < cfg.c_dim; ++i) sum[i] += s.c[i];
    if (k == 0) {
      mu = s.mu;
      logvar = s.logvar;
    }
  }
  for (long i = 0; i < cfg.c_dim; ++i) {
    const double mean = sum[i] / static_cast<double>(n);
    const double se = std::exp(0.5 * logvar[i]) / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(mean - mu[i]) <= 3.0 * se);
  }
}

TEST_CASE("reparameterization jacobians: identity on mu, analytic on logvar") {
  Rng rng(97);
  auto cfg = tiny_config();
  gan::ConditionAugment ca(cfg, rng);
  Rng prng(98), eta_rng(99);
  Tensor p = Tensor::randn({2, cfg.joint_dim}, prng);
  auto s = ca.forward(p, true, &eta_rng);

  // c = mu + exp(logvar/2) eta: f = sum(w . c) differentiates to w on mu and
  // w * 0.5 exp(logvar/2) eta on logvar
  test::Readout r({2, static_cast<long>(cfg.c_dim)});
  const Tensor& eta = ca.last_eta();
  for (long i = 0; i < s.c.size(); ++i) {
    const double want_mu = r.grad()[i];  // dc/dmu is exactly the identity
    const double want_lv = r.grad()[i] * 0.5 * std::exp(0.5 * s.logvar[i]) * eta[i];
    // verify against finite differences of the reparameterization itself
    const double eps = 1e-6;
    const double c_plus = (s.mu[i] + eps) + std::exp(0.5 * s.logvar[i]) * eta[i];
    const double c_minus = (s.mu[i] - eps) + std::exp(0.5 * s.logvar[i]) * eta[i];
    CHECK(test::rel_err((c_plus - c_minus) / (2 * eps) * r.grad()[i], want_mu) < 1e-7);
    const double l_plus = s.mu[i] + std::exp(0.5 * (s.logvar[i] + eps)) * eta[i];
    const double l_minus = s.mu[i] + std::exp(0.5 * (s.logvar[i] - eps)) * eta[i];
    CHECK(std::abs((l_plus - l_minus) / (2 * eps) * r.grad()[i] - want_lv) < 1e-6);
  }
}

TEST_CASE("kl to standard normal: closed form, bounds and gradient") {
  Tensor mu0({1, 4}), lv0({1, 4});
  CHECK(gan::kl_standard_normal(mu0, lv0) == doctest::Approx(0.0));

  Tensor mu1({1, 4});
  mu1.fill_(1.0);
  CHECK(gan::kl_standard_normal(mu1, lv0) == doctest::Approx(2.0).epsilon(1e-12));

  Rng rng(101);
  for (int t = 0; t < 10; ++t) {
    Tensor mu = Tensor::randn({1, 6}, rng), lv = Tensor::uniform({1, 6}, rng, -0.5, 0.5);
    CHECK(gan::kl_standard_normal(mu, lv) >= -1e-12);
  }

  Tensor bad({1, 2});
  bad[0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(gan::kl_standard_normal(bad, lv0.reshaped({1, 4})), Error);

  Tensor mu = Tensor::randn({2, 5}, rng), lv = Tensor::uniform({2, 5}, rng, -0.7, 0.7);
  Tensor gmu(mu.shape()), glv(lv.shape());
  gan::kl_standard_normal_backward(mu, lv, 1.0, gmu, glv);
  auto f = [&]() { return gan::kl_standard_normal(mu, lv); };
  CHECK(gradcheck(mu, gmu, f) < 1e-4);
  CHECK(gradcheck(lv, glv, f) < 1e-4);
}

TEST_CASE("kl matches a Monte-Carlo estimate within 1%") {
  Rng rng(103);
  const long d = 6;
  Tensor mu = Tensor::uniform({1, d}, rng, -1.0, 1.0);
  Tensor lv = Tensor::uniform({1, d}, rng, -0.5, 0.5);
  const double closed = gan::kl_standard_normal(mu, lv);

  // E_q[log q(x) - log p(x)] with x ~ q, 1e5 samples
  Rng srng(104);
  const long n = 100000;
  double acc = 0.0;
  for (long k = 0; k < n; ++k) {
    double log_q = 0.0, log_p = 0.0;
    for (long i = 0; i < d; ++i) {
      const double sigma = std::exp(0.5 * lv[i]);
      const double x = mu[i] + sigma * gauss(srng);
      log_q += -0.5 * std::log(2 * M_PI) - 0.5 * lv[i] - 0.5 * (x - mu[i]) * (x - mu[i]) / (sigma * sigma);
      log_p += -0.5 * std::log(2 * M_PI) - 0.5 * x * x;
    }
    acc += log_q - log_p;
  }
  const double mc = acc / static_cast<double>(n);
  CHECK(std::abs(mc - closed) / closed < 0.01);
}

TEST_CASE("discriminator losses: anchored values and contracts") {
  Tensor half({4});
  half.fill_(0.5);
  CHECK(gan::disc_loss_cond(half, half, half) == doctest::Approx(3.0 * std::log(2.0)).epsilon(1e-12));
  CHECK(gan::disc_loss_uncond(half, half, half) == doctest::Approx(3.0 * std::log(2.0)).epsilon(1e-12));

  // perfect discriminator limit -> 0
  Tensor hi({4}), lo({4});
  hi.fill_(1.0 - 1e-9);
  lo.fill_(1e-9);
  CHECK(gan::disc_loss_cond(hi, lo, lo) < 1e-7);

  // monotone decreasing in D(real)
  Tensor p1({1}), p2({1});
  p1[0] = 0.3;
  p2[0] = 0.6;
  CHECK(gan::disc_loss_cond(p2, half, half) < gan::disc_loss_cond(p1, half, half));

  Tensor bad({1});
  bad[0] = 1.0;
  CHECK_THROWS_AS(gan::disc_loss_cond(bad, half, half), Error);

  // permutation invariance over the batch
  Rng rng(107);
  Tensor pr = Tensor::uniform({6}, rng, 0.01, 0.99);
  Tensor pw = Tensor::uniform({6}, rng, 0.01, 0.99);
  Tensor pf = Tensor::uniform({6}, rng, 0.01, 0.99);
  Tensor pr2 = pr;
  std::swap(pr2[0], pr2[5]);
  std::swap(pr2[1], pr2[3]);
  CHECK(gan::disc_loss_cond(pr, pw, pf) == doctest::Approx(gan::disc_loss_cond(pr2, pw, pf)));
}

TEST_CASE("generator loss: reductions and term-by-term oracle") {
  Rng rng(109);
  auto rand_probs = [&](long n) { return Tensor::uniform({n}, rng, 0.05, 0.95); };
  auto rand_sims = [&](long n) { return Tensor::uniform({n}, rng, -1.0, 1.0); };
  std::vector<Tensor> pc = {rand_probs(4), rand_probs(4), rand_probs(4)};
  std::vector<Tensor> pu = {rand_probs(4), rand_probs(4), rand_probs(4)};
  std::vector<Tensor> sims = {rand_sims(4), rand_sims(4), rand_sims(4)};
  const double l_ca = 0.37;

  gan::LossWeights w;
  const double got = gan::generator_loss(pc, pu, sims, l_ca, w);

  // independent scalar evaluation
  double want = w.lambda_ca * l_ca;
  for (int i = 0; i < 3; ++i) {
    double adv = 0, advu = 0, sim = 0;
    for (long k = 0; k < 4; ++k) {
      adv += -std::log(pc[static_cast<size_t>(i)][k]) / 4.0;
      advu += -std::log(pu[static_cast<size_t>(i)][k]) / 4.0;
      sim += sims[static_cast<size_t>(i)][k] / 4.0;
    }
    want += adv + w.lambda_uncond * advu - w.lambda_cycle * sim;
  }
  CHECK(got == doctest::Approx(want).epsilon(1e-9));

  // zeroed weights reduce to the plain conditional adversarial loss
  gan::LossWeights zero{0.0, 0.0, 0.0};
  double plain = 0;
  for (int i = 0; i < 3; ++i) plain += gan::gen_adv_cond(pc[static_cast<size_t>(i)]);
  CHECK(gan::generator_loss(pc, pu, sims, l_ca, zero) == doctest::Approx(plain).epsilon(1e-12));

  // perfect cycle: each scale contributes exactly -lambda_cycle
  std::vector<Tensor> ones = {Tensor({2}), Tensor({2}), Tensor({2})};
  for (auto& t : ones) t.fill_(1.0);
  const double with_cycle = gan::generator_loss(pc, pu, ones, 0.0, w);
  double adv_only = 0;
  for (int i = 0; i < 3; ++i)
    adv_only += gan::gen_adv_cond(pc[static_cast<size_t>(i)]) +
                w.lambda_uncond * gan::gen_adv_uncond(pu[static_cast<size_t>(i)]);
  CHECK(with_cycle == doctest::Approx(adv_only - 3.0 * w.lambda_cycle).epsilon(1e-12));

  // missing scale -> error
  std::vector<Tensor> two = {rand_probs(4), rand_probs(4)};
  CHECK_THROWS_AS(gan::generator_loss(two, pu, sims, l_ca, w), Error);
}

TEST_CASE("generator: shape contract, determinism and conditioning reach") {
  Rng rng(113);
  auto cfg = tiny_config();
  gan::Generator g(cfg, rng);
  Rng zr(114);
  Tensor z = Tensor::randn({2, cfg.z_dim}, zr);
  Tensor c = Tensor::randn({2, cfg.c_dim}, zr);

  auto out = g.forward(z, c, false);
  CHECK(out.v0.shape() == std::vector<long>{2, 3, 16, 16});
  CHECK(out.v1.shape() == std::vector<long>{2, 3, 32, 32});
  CHECK(out.v2.shape() == std::vector<long>{2, 3, 64, 64});
  for (long i = 0; i < out.v2.size(); ++i) {
    CHECK(out.v2[i] >= -1.0);
    CHECK(out.v2[i] <= 1.0);
  }

  auto out2 = g.forward(z, c, false);
  for (long i = 0; i < out.v2.size(); ++i) CHECK(out.v2[i] == out2.v2[i]);

  // same z, different c -> different images at every scale
  Tensor c2 = Tensor::randn({2, cfg.c_dim}, zr);
  auto out3 = g.forward(z, c2, false);
  double max_diff = 0;
  for (long i = 0; i < out.v2.size(); ++i)
    max_diff = std::max(max_diff, std::abs(out.v2[i] - out3.v2[i]));
  CHECK(max_diff > 0.0);

  // doubling the batch doubles only the leading dimension
  Tensor z4 = Tensor::randn({4, cfg.z_dim}, zr);
  Tensor c4 = Tensor::randn({4, cfg.c_dim}, zr);
  auto out4 = g.forward(z4, c4, false);
  CHECK(out4.v0.shape() == std::vector<long>{4, 3, 16, 16});

  Tensor zbad = Tensor::randn({2, cfg.z_dim + 1}, zr);
  CHECK_THROWS_AS(g.forward(zbad, c, false), Error);
}

TEST_CASE("default generator config matches the documented 64/128/256 scales") {
  gan::GanConfig def;
  CHECK(def.base_scale == 64);
  CHECK(def.z_dim == 100);
  CHECK(def.c_dim == 128);
  CHECK(def.lambda_uncond == 0.5);
  CHECK(def.lambda_ca == 0.02);
  CHECK(def.lambda_cycle == 1.0);

  Rng rng(115);
  gan::Generator g(def, rng);
  Rng zr(116);
  Tensor z = Tensor::randn({1, def.z_dim}, zr);
  Tensor c = Tensor::randn({1, def.c_dim}, zr);
  auto out = g.forward(z, c, false);
  CHECK(out.v0.shape() == std::vector<long>{1, 3, 64, 64});
  CHECK(out.v1.shape() == std::vector<long>{1, 3, 128, 128});
  CHECK(out.v2.shape() == std::vector<long>{1, 3, 256, 256});
}

TEST_CASE("generator backward propagates a correct gradient to c") {
  Rng rng(117);
  auto cfg = tiny_config();
  gan::Generator g(cfg, rng);
  Rng zr(118);
  Tensor z = Tensor::randn({1, cfg.z_dim}, zr);
  Tensor c = Tensor::randn({1, cfg.c_dim}, zr);
  test::Readout r0({1, 3, 16, 16}, 1);
  test::Readout r1({1, 3, 32, 32}, 2);
  test::Readout r2({1, 3, 64, 64}, 3);
  auto run = [&]() {
    auto o = g.forward(z, c, true);
    return r0.value(o.v0) + r1.value(o.v1) + r2.value(o.v2);
  };
  g.forward(z, c, true);
  nn::ParamList ps;
  g.params(ps);
  nn::zero_grads(ps);
  g.forward(z, c, true);
  Tensor gc = g.backward(r0.grad(), r1.grad(), r2.grad());
  CHECK(gradcheck(c, gc, run, 1e-5) < 1e-5);
}

TEST_CASE("discriminator backward propagates correct input gradients") {
  Rng rng(119);
  auto cfg = tiny_config();
  gan::Discriminator d(cfg, 16, rng, "t");
  Rng ir(120);
  Tensor img = Tensor::uniform({2, 3, 16, 16}, ir, -1.0, 1.0);
  Tensor c = Tensor::randn({2, cfg.c_dim}, ir);
  Tensor wc({2}), wu({2});
  wc[0] = 0.7;
  wc[1] = -0.3;
  wu[0] = 0.2;
  wu[1] = 0.9;
  auto run = [&]() {
    auto o = d.forward(img, c, true);
    double s = 0;
    for (long i = 0; i < 2; ++i) s += wc[i] * o.logit_cond[i] + wu[i] * o.logit_uncond[i];
    return s;
  };
  d.forward(img, c, true);
  nn::ParamList ps;
  d.params(ps);
  nn::zero_grads(ps);
  d.forward(img, c, true);
  auto [gimg, gc] = d.backward(wc, wu);
  CHECK(gradcheck(img, gimg, run, 1e-5, 23) < 1e-5);
  CHECK(gradcheck(c, gc, run, 1e-5) < 1e-5);
}

TEST_CASE("gan checkpoint round trip preserves eval generation") {
  Rng rng(121);
  auto cfg = tiny_config();
  gan::GanModel model(cfg, rng);
  model.foodspace_hash = 777;
  Rng pr(122);
  Tensor p = Tensor::randn({2, cfg.joint_dim}, pr);
  auto before = gan::generate_from(model, p, 5);

  const std::string path = (fs::temp_directory_path() / "mg_gan.ckpt").string();
  model.save(path);
  auto loaded = gan::GanModel::load(path);
  CHECK(loaded.foodspace_hash == 777);
  auto after = gan::generate_from(loaded, p, 5);
  for (long i = 0; i < before.v2.size(); ++i) CHECK(before.v2[i] == after.v2[i]);
  fs::remove(path);
}
