#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace bop::verify {

// Definition-expanding GAE: A_t = sum_l delta_{t+l} * prod_{m<l} gamma*lambda*(1-done_{t+m}),
// written as explicit nested loops. Independent of the recursive implementation.
std::vector<double> gae_bruteforce(std::span<const double> rewards,
                                   std::span<const double> values,
                                   std::span<const std::uint8_t> dones, double gamma,
                                   double lambda);

// Definition-expanding V-trace: vs and advantages from explicit products and
// sums over the remaining horizon.
std::vector<double> vtrace_bruteforce(std::span<const double> rewards,
                                      std::span<const double> values,
                                      std::span<const std::uint8_t> dones,
                                      std::span<const double> behaviour_logp,
                                      std::span<const double> target_logp, double gamma,
                                      double rho_bar, double c_bar);

// KL(N(mu1,s1) || N(mu2,s2)) by Simpson integration of p log(p/q) over
// mu1 +- 12 s1. One latent dimension.
double gaussian_kl_integral(double mu1, double sigma1, double mu2, double sigma2);

struct BatteryLine {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Quick oracle battery behind the `verify` CLI subcommand: V-trace and GAE
// brute force, KL integration, and finite-difference gradient checks.
std::vector<BatteryLine> run_battery(std::uint64_t seed);

}  // namespace bop::verify
