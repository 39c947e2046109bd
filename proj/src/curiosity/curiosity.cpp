#include "bop/curiosity/curiosity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bop/advantage/advantage.hpp"

namespace bop::curiosity {

double gaussian_kl(std::span<const double> mu1, std::span<const double> sigma1,
                   std::span<const double> mu2, std::span<const double> sigma2) {
  if (mu1.size() != sigma1.size() || mu1.size() != mu2.size() || mu1.size() != sigma2.size())
    throw std::invalid_argument("gaussian_kl: dimension mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < mu1.size(); ++i) {
    if (sigma1[i] <= 0.0 || sigma2[i] <= 0.0)
      throw std::invalid_argument("gaussian_kl: sigma must be positive");
    const double r = sigma1[i] / sigma2[i];
    const double md = (mu1[i] - mu2[i]) / sigma2[i];
    kl += std::log(sigma2[i] / sigma1[i]) + 0.5 * (r * r + md * md) - 0.5;
  }
  return kl;
}

double information_gain(const retdist::SharedVae& shared, double x_k, double g_i,
                        std::span<const double> state) {
  const auto [mu1, sigma1] = shared.encode(x_k, state);
  const auto [mu2, sigma2] = shared.encode(g_i, state);
  return gaussian_kl(mu1, sigma1, mu2, sigma2);
}

std::vector<double> bonuses(std::span<const double> kls, double beta, double clip) {
  std::vector<double> out(kls.size());
  for (std::size_t t = 0; t < kls.size(); ++t) out[t] = std::min(beta * kls[t], clip);
  return out;
}

std::vector<double> augment(const AdvantageInputs& inputs, std::span<const double> kls,
                            double beta, double clip) {
  if (kls.size() != inputs.rewards.size())
    throw std::invalid_argument("augment: bonus table length mismatch");
  const auto bonus = bonuses(kls, beta, clip);
  std::vector<double> rewards(inputs.rewards.size());
  for (std::size_t t = 0; t < rewards.size(); ++t) rewards[t] = inputs.rewards[t] + bonus[t];
  if (inputs.use_vtrace) {
    return advantage::vtrace_advantage(rewards, inputs.values, inputs.dones,
                                       inputs.behaviour_logp, inputs.target_logp, inputs.gamma,
                                       inputs.rho_bar, inputs.c_bar);
  }
  return advantage::gae(rewards, inputs.values, inputs.dones, inputs.gamma, inputs.lambda);
}

}  // namespace bop::curiosity
