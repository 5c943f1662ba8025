#include "gan/losses.hpp"

#include <cmath>

#include "core/check.hpp"

namespace mealgen::gan {

double kl_standard_normal(const Tensor& mu, const Tensor& logvar) {
  require(mu.size() == logvar.size(), "kl: shape mismatch");
  require(mu.all_finite() && logvar.all_finite(), "kl: non-finite inputs");
  const long B = mu.ndim() >= 2 ? mu.dim(0) : 1;
  double total = 0.0;
  for (long i = 0; i < mu.size(); ++i)
    total += 0.5 * (mu[i] * mu[i] + std::exp(logvar[i]) - 1.0 - logvar[i]);
  return total / static_cast<double>(B);
}

void kl_standard_normal_backward(const Tensor& mu, const Tensor& logvar, double g, Tensor& gmu,
                                 Tensor& glogvar) {
  const long B = mu.ndim() >= 2 ? mu.dim(0) : 1;
  const double s = g / static_cast<double>(B);
  for (long i = 0; i < mu.size(); ++i) {
    gmu[i] += s * mu[i];
    glogvar[i] += s * 0.5 * (std::exp(logvar[i]) - 1.0);
  }
}

namespace {

double mean_neg_log(const Tensor& p, bool complement) {
  require(p.size() >= 1, "discriminator loss: empty batch");
  double total = 0.0;
  for (long i = 0; i < p.size(); ++i) {
    const double v = complement ? 1.0 - p[i] : p[i];
    require(p[i] > 0.0 && p[i] < 1.0,
            "discriminator loss: D output outside (0,1); the head must produce probabilities");
    total += -std::log(v);
  }
  return total / static_cast<double>(p.size());
}

}  // namespace

double disc_loss_cond(const Tensor& p_real, const Tensor& p_wrong, const Tensor& p_fake) {
  return mean_neg_log(p_real, false) + mean_neg_log(p_wrong, true) + mean_neg_log(p_fake, true);
}

double disc_loss_uncond(const Tensor& p_real, const Tensor& p_wrong, const Tensor& p_fake) {
  return mean_neg_log(p_real, false) + mean_neg_log(p_wrong, false) + mean_neg_log(p_fake, true);
}

double gen_adv_cond(const Tensor& p_fake) { return mean_neg_log(p_fake, false); }

double gen_adv_uncond(const Tensor& p_fake) { return mean_neg_log(p_fake, false); }

double generator_loss(const std::vector<Tensor>& d_cond_fake,
                      const std::vector<Tensor>& d_uncond_fake,
                      const std::vector<Tensor>& cycle_sims, double l_ca, const LossWeights& w) {
  require(d_cond_fake.size() == 3 && d_uncond_fake.size() == 3 && cycle_sims.size() == 3,
          "generator_loss: expected all three scales");
  double total = w.lambda_ca * l_ca;
  for (int i = 0; i < 3; ++i) {
    total += gen_adv_cond(d_cond_fake[static_cast<size_t>(i)]);
    total += w.lambda_uncond * gen_adv_uncond(d_uncond_fake[static_cast<size_t>(i)]);
    const Tensor& sims = cycle_sims[static_cast<size_t>(i)];
    require(sims.size() >= 1, "generator_loss: missing cycle similarities for a scale");
    double mean_sim = 0.0;
    for (long k = 0; k < sims.size(); ++k) {
      require(sims[k] >= -1.0 - 1e-9 && sims[k] <= 1.0 + 1e-9,
              "generator_loss: cycle similarity outside [-1,1]");
      mean_sim += sims[k];
    }
    mean_sim /= static_cast<double>(sims.size());
    total -= w.lambda_cycle * mean_sim;
  }
  return total;
}

double discriminator_total(const std::vector<double>& cond_losses,
                           const std::vector<double>& uncond_losses, double lambda_uncond) {
  require(cond_losses.size() == 3 && uncond_losses.size() == 3,
          "discriminator_total: expected three scales");
  double total = 0.0;
  for (int i = 0; i < 3; ++i)
    total += cond_losses[static_cast<size_t>(i)] + lambda_uncond * uncond_losses[static_cast<size_t>(i)];
  return total;
}

}  // namespace mealgen::gan
