#pragma once

#include <vector>

#include "core/tensor.hpp"

namespace mealgen::gan {

struct LossWeights {
  double lambda_uncond = 0.5;
  double lambda_ca = 0.02;
  double lambda_cycle = 1.0;
};

// Closed-form KL( N(mu, diag(exp(logvar))) || N(0, I) ), averaged over the
// batch dimension when the input is [B, d]:
//   0.5 * sum(mu^2 + exp(logvar) - 1 - logvar)
double kl_standard_normal(const Tensor& mu, const Tensor& logvar);
void kl_standard_normal_backward(const Tensor& mu, const Tensor& logvar, double g, Tensor& gmu,
                                 Tensor& glogvar);

// Probability-space discriminator losses over batches of D outputs; every
// probability must lie strictly inside (0,1). Paired real images count as
// real under the conditional loss; under the unconditional loss both real
// batches count as real and only generated images count as fake.
double disc_loss_cond(const Tensor& p_real, const Tensor& p_wrong, const Tensor& p_fake);
double disc_loss_uncond(const Tensor& p_real, const Tensor& p_wrong, const Tensor& p_fake);

// Non-saturating generator terms: -E log D(fake, c) and -E log D(fake).
double gen_adv_cond(const Tensor& p_fake);
double gen_adv_uncond(const Tensor& p_fake);

// Total generator objective over the three scales:
//   sum_i { adv_cond_i + lu * adv_uncond_i - lc * mean(cycle_sims_i) } + lca * l_ca
double generator_loss(const std::vector<Tensor>& d_cond_fake,
                      const std::vector<Tensor>& d_uncond_fake,
                      const std::vector<Tensor>& cycle_sims, double l_ca, const LossWeights& w);

// Matching discriminator total: sum_i { cond_i + lu * uncond_i }.
double discriminator_total(const std::vector<double>& cond_losses,
                           const std::vector<double>& uncond_losses, double lambda_uncond);

}  // namespace mealgen::gan
