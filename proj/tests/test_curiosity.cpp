#include <doctest.h>

#include <cmath>

#include "bop/advantage/advantage.hpp"
#include "bop/common/rng.hpp"
#include "bop/curiosity/curiosity.hpp"
#include "bop/verify/oracles.hpp"

using namespace bop;

namespace {

retdist::SharedVae make_vae(std::uint64_t seed) {
  Rng rng(seed);
  return retdist::SharedVae::make(3, 2, 8, diff::Activation::kTanh, rng);
}

}  // namespace

TEST_CASE("gaussian_kl: identical parameters give exactly zero") {
  std::vector<double> mu{0.3, -1.2}, sigma{0.7, 2.0};
  CHECK(curiosity::gaussian_kl(mu, sigma, mu, sigma) == 0.0);
}

TEST_CASE("gaussian_kl: unit-gap means with unit variances give 1/2") {
  const double kl = curiosity::gaussian_kl(std::vector{1.0}, std::vector{1.0}, std::vector{0.0},
                                           std::vector{1.0});
  CHECK(kl == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::fabs(kl - verify::gaussian_kl_integral(1.0, 1.0, 0.0, 1.0)) < 1e-6);
}

TEST_CASE("gaussian_kl: sigma ratio 2:1 matches log(1/2) + 2 - 1/2") {
  const double kl = curiosity::gaussian_kl(std::vector{0.4}, std::vector{2.0}, std::vector{0.4},
                                           std::vector{1.0});
  const double expected = std::log(0.5) + 2.0 - 0.5;
  CHECK(kl == doctest::Approx(expected).epsilon(1e-12));
  CHECK(std::fabs(kl - verify::gaussian_kl_integral(0.4, 2.0, 0.4, 1.0)) < 1e-6);
}

TEST_CASE("gaussian_kl: non-positive sigma is a contract error") {
  CHECK_THROWS_AS((void)curiosity::gaussian_kl(std::vector{0.0}, std::vector{0.0},
                                               std::vector{0.0}, std::vector{1.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)curiosity::gaussian_kl(std::vector{0.0}, std::vector{1.0},
                                               std::vector{0.0}, std::vector{-2.0}),
                  std::invalid_argument);
}

TEST_CASE("gaussian_kl: nonnegative on random pairs, zero iff equal") {
  Rng rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> mu1(2), mu2(2), s1(2), s2(2);
    for (int i = 0; i < 2; ++i) {
      mu1[i] = rng.uniform(-3.0, 3.0);
      mu2[i] = rng.uniform(-3.0, 3.0);
      s1[i] = rng.uniform(0.05, 4.0);
      s2[i] = rng.uniform(0.05, 4.0);
    }
    const double kl = curiosity::gaussian_kl(mu1, s1, mu2, s2);
    CHECK(kl >= 0.0);
    if (mu1 == mu2 && s1 == s2) CHECK(kl == 0.0);
  }
}

TEST_CASE("information_gain: zero when both conditioning returns coincide") {
  auto vae = make_vae(2);
  std::vector<double> s{0.1, -0.2, 0.3};
  CHECK(curiosity::information_gain(vae, 0.8, 0.8, s) == 0.0);
}

TEST_CASE("information_gain: nonnegative and compositional") {
  auto vae = make_vae(3);
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> s(3);
    for (auto& v : s) v = rng.uniform(-1.0, 1.0);
    const double x = rng.uniform(-2.0, 2.0);
    const double g = rng.uniform(-2.0, 2.0);
    const double ig = curiosity::information_gain(vae, x, g, s);
    CHECK(ig >= 0.0);
    const auto [mu1, s1] = vae.encode(x, s);
    const auto [mu2, s2] = vae.encode(g, s);
    CHECK(std::fabs(ig - curiosity::gaussian_kl(mu1, s1, mu2, s2)) <= 1e-12);
  }
}

TEST_CASE("information_gain: never adds gradient entries to the encoder") {
  auto vae = make_vae(5);
  for (auto p : vae.encoder().parameters()) p.zero_grad();
  std::vector<double> s{0.5, 0.5, -0.5};
  (void)curiosity::information_gain(vae, 1.0, -1.0, s);
  for (const auto& p : vae.encoder().parameters()) CHECK_FALSE(p.has_grad());
}

TEST_CASE("augment: beta = 0 reproduces the original advantages bit-exactly") {
  Rng rng(6);
  curiosity::AdvantageInputs in;
  const std::size_t T = 12;
  in.rewards.resize(T);
  in.values.resize(T + 1);
  in.dones.assign(T, 0);
  for (auto& v : in.rewards) v = rng.uniform(-1.0, 1.0);
  for (auto& v : in.values) v = rng.uniform(-1.0, 1.0);
  in.dones[T - 1] = 1;
  std::vector<double> kls(T);
  for (auto& v : kls) v = rng.uniform(0.0, 5.0);

  const auto original = advantage::gae(in.rewards, in.values, in.dones, in.gamma, in.lambda);
  const auto augmented = curiosity::augment(in, kls, 0.0);
  CHECK(augmented == original);

  // All-zero KL likewise changes nothing, for any beta.
  const std::vector<double> zeros(T, 0.0);
  CHECK(curiosity::augment(in, zeros, 0.7) == original);
}

TEST_CASE("augment: one-step episode shifts the advantage by exactly beta*KL") {
  curiosity::AdvantageInputs in;
  in.rewards = {0.3};
  in.values = {0.9, 0.4};
  in.dones = {1};
  const double beta = 0.05;
  const std::vector<double> kls{2.5};  // bonus = 0.125, below the clip
  const auto original = advantage::gae(in.rewards, in.values, in.dones, in.gamma, in.lambda);
  const auto augmented = curiosity::augment(in, kls, beta);
  CHECK(augmented[0] - original[0] == doctest::Approx(beta * kls[0]).epsilon(1e-12));
}

TEST_CASE("augment: bonus saturates at the configured clip") {
  const auto b = curiosity::bonuses(std::vector{100.0, 0.1}, 0.05, 1.0);
  CHECK(b[0] == 1.0);  // 0.05 * 100 = 5 clips to 1
  CHECK(b[1] == doctest::Approx(0.005).epsilon(1e-12));
}

TEST_CASE("augment: v-trace path uses the same reward substitution") {
  Rng rng(7);
  curiosity::AdvantageInputs in;
  const std::size_t T = 8;
  in.rewards.resize(T);
  in.values.resize(T + 1);
  in.dones.assign(T, 0);
  in.behaviour_logp.resize(T);
  in.target_logp.resize(T);
  in.use_vtrace = true;
  for (auto& v : in.rewards) v = rng.uniform(-1.0, 1.0);
  for (auto& v : in.values) v = rng.uniform(-1.0, 1.0);
  for (auto& v : in.behaviour_logp) v = rng.uniform(-2.0, -0.1);
  for (auto& v : in.target_logp) v = rng.uniform(-2.0, -0.1);
  std::vector<double> kls(T, 1.0);
  const double beta = 0.01;

  std::vector<double> shifted = in.rewards;
  for (auto& r : shifted) r += beta;  // bonus = min(0.01, 1) = 0.01
  const auto expected =
      advantage::vtrace_advantage(shifted, in.values, in.dones, in.behaviour_logp, in.target_logp,
                                  in.gamma, in.rho_bar, in.c_bar);
  CHECK(curiosity::augment(in, kls, beta) == expected);
}
