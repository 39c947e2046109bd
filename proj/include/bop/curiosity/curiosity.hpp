#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bop/retdist/retdist.hpp"

namespace bop::curiosity {

// Closed-form KL between diagonal Gaussians, summed over dimensions.
double gaussian_kl(std::span<const double> mu1, std::span<const double> sigma1,
                   std::span<const double> mu2, std::span<const double> sigma2);

// KL( q(.|x_k, s) || q(.|g_i, s) ) on the current encoder. Pure measurement:
// never touches gradients (the bonus is a reward, not a loss term).
double information_gain(const retdist::SharedVae& shared, double x_k, double g_i,
                        std::span<const double> state);

// Everything needed to recompute one head's advantages on one segment.
struct AdvantageInputs {
  std::vector<double> rewards;
  std::vector<double> values;  // length T+1
  std::vector<std::uint8_t> dones;
  std::vector<double> behaviour_logp;  // used only when use_vtrace
  std::vector<double> target_logp;
  double gamma = 0.99;
  double lambda = 0.95;
  double rho_bar = 1.0;
  double c_bar = 1.0;
  bool use_vtrace = false;
};

// Per-step bonus applied to the reward: min(beta * kl, clip).
std::vector<double> bonuses(std::span<const double> kls, double beta, double clip);

// Recomputes advantages with rewards r_t + min(beta*kl_t, clip). Bellman
// targets are never recomputed from these.
std::vector<double> augment(const AdvantageInputs& inputs, std::span<const double> kls,
                            double beta, double clip = 1.0);

}  // namespace bop::curiosity
