#include "bop/advantage/advantage.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bop::advantage {

ImportanceWeights importance_weights(std::span<const double> behaviour_logp,
                                     std::span<const double> target_logp, double rho_bar,
                                     double c_bar) {
  if (behaviour_logp.size() != target_logp.size())
    throw std::invalid_argument("importance_weights: length mismatch");
  ImportanceWeights w;
  w.rho_bar = rho_bar;
  w.c_bar = c_bar;
  w.rho.resize(behaviour_logp.size());
  w.c.resize(behaviour_logp.size());
  for (std::size_t t = 0; t < behaviour_logp.size(); ++t) {
    const double ratio = std::exp(target_logp[t] - behaviour_logp[t]);
    w.rho[t] = std::min(rho_bar, ratio);
    w.c[t] = std::min(c_bar, ratio);
  }
  return w;
}

std::vector<double> gae(std::span<const double> rewards, std::span<const double> values,
                        std::span<const std::uint8_t> dones, double gamma, double lambda) {
  const std::size_t T = rewards.size();
  if (values.size() != T + 1 || dones.size() != T)
    throw std::invalid_argument("gae: values must have length T+1 and dones length T");
  std::vector<double> adv(T);
  double acc = 0.0;
  for (std::size_t ti = T; ti-- > 0;) {
    const double nd = dones[ti] ? 0.0 : 1.0;
    const double delta = rewards[ti] + gamma * nd * values[ti + 1] - values[ti];
    acc = delta + gamma * lambda * nd * acc;
    adv[ti] = acc;
  }
  return adv;
}

std::vector<double> vtrace_advantage(std::span<const double> rewards,
                                     std::span<const double> values,
                                     std::span<const std::uint8_t> dones,
                                     std::span<const double> behaviour_logp,
                                     std::span<const double> target_logp, double gamma,
                                     double rho_bar, double c_bar) {
  const std::size_t T = rewards.size();
  if (values.size() != T + 1 || dones.size() != T || behaviour_logp.size() != T ||
      target_logp.size() != T)
    throw std::invalid_argument("vtrace_advantage: sequence lengths misaligned");
  for (std::size_t t = 0; t < T; ++t) {
    if (!std::isfinite(behaviour_logp[t]))
      throw std::invalid_argument("vtrace_advantage: behaviour log-prob not finite");
  }
  const auto w = importance_weights(behaviour_logp, target_logp, rho_bar, c_bar);

  std::vector<double> vs(T + 1);
  vs[T] = values[T];
  for (std::size_t ti = T; ti-- > 0;) {
    const double nd = dones[ti] ? 0.0 : 1.0;
    const double delta = rewards[ti] + gamma * nd * values[ti + 1] - values[ti];
    vs[ti] = values[ti] + w.rho[ti] * delta + gamma * nd * w.c[ti] * (vs[ti + 1] - values[ti + 1]);
  }
  std::vector<double> adv(T);
  for (std::size_t t = 0; t < T; ++t) {
    const double nd = dones[t] ? 0.0 : 1.0;
    adv[t] = w.rho[t] * (rewards[t] + gamma * nd * vs[t + 1] - values[t]);
  }
  return adv;
}

std::vector<double> bellman_targets(std::span<const double> advantages,
                                    std::span<const double> return_samples) {
  if (advantages.size() != return_samples.size())
    throw std::invalid_argument("bellman_targets: length mismatch");
  std::vector<double> x(advantages.size());
  for (std::size_t t = 0; t < x.size(); ++t) x[t] = advantages[t] + return_samples[t];
  return x;
}

}  // namespace bop::advantage
