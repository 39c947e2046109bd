#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace bop::advantage {

// Truncated importance weights rho_t = min(rho_bar, pi/mu), c_t = min(c_bar, pi/mu).
struct ImportanceWeights {
  std::vector<double> rho;
  std::vector<double> c;
  double rho_bar = 1.0;
  double c_bar = 1.0;
};

ImportanceWeights importance_weights(std::span<const double> behaviour_logp,
                                     std::span<const double> target_logp, double rho_bar,
                                     double c_bar);

// Generalized advantage estimation by backward recursion:
//   delta_t = r_t + gamma * (1 - done_t) * v_{t+1} - v_t
//   A_t     = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}
// `values` has length T+1 (bootstrap value last).
std::vector<double> gae(std::span<const double> rewards, std::span<const double> values,
                        std::span<const std::uint8_t> dones, double gamma, double lambda);

// V-trace advantages for off-policy data:
//   vs_t = v_t + rho_t * delta_t + gamma * (1 - done_t) * c_t * (vs_{t+1} - v_{t+1})
//   A_t  = rho_t * (r_t + gamma * (1 - done_t) * vs_{t+1} - v_t)
// `values` has length T+1, vs_T = v_T.
std::vector<double> vtrace_advantage(std::span<const double> rewards,
                                     std::span<const double> values,
                                     std::span<const std::uint8_t> dones,
                                     std::span<const double> behaviour_logp,
                                     std::span<const double> target_logp, double gamma,
                                     double rho_bar, double c_bar);

// x_t = A_t + g_t, elementwise. Targets must be built from pre-augmentation
// advantages; the curiosity bonus never reaches them.
std::vector<double> bellman_targets(std::span<const double> advantages,
                                    std::span<const double> return_samples);

}  // namespace bop::advantage
