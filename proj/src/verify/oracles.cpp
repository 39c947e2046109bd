#include "bop/verify/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bop/advantage/advantage.hpp"
#include "bop/common/rng.hpp"
#include "bop/curiosity/curiosity.hpp"
#include "bop/diff/gradcheck.hpp"
#include "bop/diff/mlp.hpp"

namespace bop::verify {

std::vector<double> gae_bruteforce(std::span<const double> rewards,
                                   std::span<const double> values,
                                   std::span<const std::uint8_t> dones, double gamma,
                                   double lambda) {
  const std::size_t T = rewards.size();
  std::vector<double> adv(T, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    double acc = 0.0;
    for (std::size_t l = 0; t + l < T; ++l) {
      double weight = 1.0;
      for (std::size_t m = 0; m < l; ++m) {
        weight *= gamma * lambda * (dones[t + m] ? 0.0 : 1.0);
      }
      const std::size_t u = t + l;
      const double nd = dones[u] ? 0.0 : 1.0;
      const double delta = rewards[u] + gamma * nd * values[u + 1] - values[u];
      acc += weight * delta;
    }
    adv[t] = acc;
  }
  return adv;
}

std::vector<double> vtrace_bruteforce(std::span<const double> rewards,
                                      std::span<const double> values,
                                      std::span<const std::uint8_t> dones,
                                      std::span<const double> behaviour_logp,
                                      std::span<const double> target_logp, double gamma,
                                      double rho_bar, double c_bar) {
  const std::size_t T = rewards.size();
  std::vector<double> rho(T), c(T);
  for (std::size_t t = 0; t < T; ++t) {
    const double ratio = std::exp(target_logp[t] - behaviour_logp[t]);
    rho[t] = std::min(rho_bar, ratio);
    c[t] = std::min(c_bar, ratio);
  }
  // vs_t = v_t + sum_l [prod_{m<l} gamma*(1-done)*c]_{t+m} * rho_{t+l} * delta_{t+l}
  std::vector<double> vs(T + 1);
  vs[T] = values[T];
  for (std::size_t t = 0; t < T; ++t) {
    double acc = values[t];
    for (std::size_t l = 0; t + l < T; ++l) {
      double weight = 1.0;
      for (std::size_t m = 0; m < l; ++m) {
        weight *= gamma * (dones[t + m] ? 0.0 : 1.0) * c[t + m];
      }
      const std::size_t u = t + l;
      const double nd = dones[u] ? 0.0 : 1.0;
      const double delta = rewards[u] + gamma * nd * values[u + 1] - values[u];
      acc += weight * rho[u] * delta;
    }
    vs[t] = acc;
  }
  std::vector<double> adv(T);
  for (std::size_t t = 0; t < T; ++t) {
    const double nd = dones[t] ? 0.0 : 1.0;
    adv[t] = rho[t] * (rewards[t] + gamma * nd * vs[t + 1] - values[t]);
  }
  return adv;
}

double gaussian_kl_integral(double mu1, double sigma1, double mu2, double sigma2) {
  const double lo = mu1 - 12.0 * sigma1;
  const double hi = mu1 + 12.0 * sigma1;
  const int n = 20000;  // Simpson intervals (even)
  const double h = (hi - lo) / n;
  auto integrand = [&](double x) {
    const double z1 = (x - mu1) / sigma1;
    const double z2 = (x - mu2) / sigma2;
    const double logp = -0.5 * z1 * z1 - std::log(sigma1);
    const double logq = -0.5 * z2 * z2 - std::log(sigma2);
    const double p = std::exp(logp) / std::sqrt(2.0 * 3.14159265358979323846);
    return p * (logp - logq);
  };
  double sum = integrand(lo) + integrand(hi);
  for (int i = 1; i < n; ++i) {
    sum += integrand(lo + i * h) * ((i % 2) ? 4.0 : 2.0);
  }
  return sum * h / 3.0;
}

std::vector<BatteryLine> run_battery(std::uint64_t seed) {
  std::vector<BatteryLine> lines;
  Rng rng(seed);

  {
    // V-trace and GAE against the definition-expanding oracles.
    double worst_v = 0.0, worst_g = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t T = 15;
      std::vector<double> r(T), v(T + 1), bl(T), tl(T);
      std::vector<std::uint8_t> d(T, 0);
      for (auto& x : r) x = rng.uniform(-1.0, 1.0);
      for (auto& x : v) x = rng.uniform(-1.0, 1.0);
      for (auto& x : bl) x = rng.uniform(-2.0, 0.0);
      for (auto& x : tl) x = rng.uniform(-2.0, 0.0);
      for (auto& x : d) x = rng.uniform01() < 0.15 ? 1 : 0;
      const double rho_bar = rng.uniform(0.5, 2.0);
      const double c_bar = rng.uniform(0.5, 2.0);
      const auto fast = advantage::vtrace_advantage(r, v, d, bl, tl, 0.99, rho_bar, c_bar);
      const auto slow = vtrace_bruteforce(r, v, d, bl, tl, 0.99, rho_bar, c_bar);
      for (std::size_t t = 0; t < T; ++t) worst_v = std::max(worst_v, std::fabs(fast[t] - slow[t]));
      const auto gfast = advantage::gae(r, v, d, 0.99, 0.95);
      const auto gslow = gae_bruteforce(r, v, d, 0.99, 0.95);
      for (std::size_t t = 0; t < T; ++t)
        worst_g = std::max(worst_g, std::fabs(gfast[t] - gslow[t]));
    }
    std::ostringstream os;
    os << "max abs err " << worst_v;
    lines.push_back({"vtrace-bruteforce", worst_v < 1e-10, os.str()});
    std::ostringstream os2;
    os2 << "max abs err " << worst_g;
    lines.push_back({"gae-bruteforce", worst_g < 1e-10, os2.str()});
  }

  {
    // Closed-form diagonal-Gaussian KL against numerical integration.
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const double mu1 = rng.uniform(-2.0, 2.0);
      const double mu2 = rng.uniform(-2.0, 2.0);
      const double s1 = rng.uniform(0.3, 2.0);
      const double s2 = rng.uniform(0.3, 2.0);
      const double closed =
          curiosity::gaussian_kl(std::vector{mu1}, std::vector{s1}, std::vector{mu2},
                                 std::vector{s2});
      const double numeric = gaussian_kl_integral(mu1, s1, mu2, s2);
      worst = std::max(worst, std::fabs(closed - numeric));
    }
    std::ostringstream os;
    os << "max abs err " << worst;
    lines.push_back({"kl-integration", worst < 1e-4, os.str()});
  }

  {
    // Finite-difference gradient check of a small tanh network.
    namespace diff = bop::diff;
    auto mlp = diff::Mlp::make({5, 8, 8, 1}, diff::Activation::kTanh, rng);
    std::vector<double> input(5);
    for (auto& x : input) x = rng.uniform(-1.0, 1.0);
    auto f = [&]() {
      auto x = diff::Tensor::from_vector({1, 5}, std::vector<double>(input));
      return diff::mean_t(diff::square_t(mlp.forward(x)));
    };
    const auto report = diff::gradient_check(f, mlp.parameters());
    std::ostringstream os;
    os << "max rel err " << report.max_rel_error << " over " << report.parameters_checked
       << " parameters";
    lines.push_back({"gradient-check", report.max_rel_error < 1e-4, os.str()});
  }

  return lines;
}

}  // namespace bop::verify
