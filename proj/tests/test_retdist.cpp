#include <doctest.h>

#include <cmath>

#include "bop/common/rng.hpp"
#include "bop/diff/gradcheck.hpp"
#include "bop/retdist/retdist.hpp"

using namespace bop;
using namespace bop::retdist;

namespace {

constexpr int kObs = 4;
constexpr int kLatent = 2;

envs::ActionSpace discrete2() { return envs::Discrete{2}; }

SharedVae make_shared_vae(std::uint64_t seed, int latent = kLatent) {
  Rng rng(seed);
  return SharedVae::make(kObs, latent, 8, diff::Activation::kTanh, rng);
}

std::vector<Head> make_heads(int k, std::uint64_t seed, int latent = kLatent) {
  std::vector<Head> heads;
  for (int i = 0; i < k; ++i)
    heads.push_back(Head::make(i, kObs, latent, discrete2(), 8, diff::Activation::kTanh,
                               derive_seed(seed, 100 + i)));
  return heads;
}

UpdateBatch small_batch(int k, int b, Rng& rng) {
  UpdateBatch ub;
  for (int i = 0; i < b; ++i) {
    std::vector<double> s(kObs);
    for (auto& v : s) v = rng.uniform(-1.0, 1.0);
    ub.states.push_back(s);
    ub.data_x.push_back(rng.uniform(-1.0, 1.0));
  }
  ub.head_targets.assign(k, {});
  for (int i = 0; i < k; ++i)
    for (int bi = 0; bi < b; ++bi) ub.head_targets[i].push_back(rng.uniform(-1.0, 1.0));
  return ub;
}

void zero_mlp(diff::Mlp& mlp) {
  for (auto& p : mlp.parameters()) std::fill(p.data().begin(), p.data().end(), 0.0);
}

// Hand recomputation of log D with plain loops over the raw weights.
double naive_disc_logit(const SharedVae& vae, double x, const std::vector<double>& z,
                        const std::vector<double>& s) {
  std::vector<double> h;
  h.push_back(x);
  h.insert(h.end(), z.begin(), z.end());
  h.insert(h.end(), s.begin(), s.end());
  const auto& params = vae.discriminator().parameters();
  const std::size_t layers = params.size() / 2;
  for (std::size_t l = 0; l < layers; ++l) {
    const auto& w = params[2 * l];
    const auto& b = params[2 * l + 1];
    const std::size_t in = w.shape()[0];
    const std::size_t out = w.shape()[1];
    std::vector<double> next(out);
    for (std::size_t j = 0; j < out; ++j) {
      double acc = b.data()[j];
      for (std::size_t i = 0; i < in; ++i) acc += h[i] * w.data()[i * out + j];
      next[j] = (l + 1 < layers) ? std::tanh(acc) : acc;
    }
    h = std::move(next);
  }
  return std::clamp(h[0], -kDiscLogitClamp, kDiscLogitClamp);
}

}  // namespace

TEST_CASE("sample_return: zero-weight generator returns its bias regardless of z") {
  auto vae = make_shared_vae(1);
  auto heads = make_heads(1, 1);
  zero_mlp(heads[0].generator());
  heads[0].generator().parameters().back().data() = {0.75};
  Rng rng(5);
  std::vector<double> state{0.1, -0.3, 0.7, 0.0};
  for (int trial = 0; trial < 5; ++trial) {
    const auto s = sample_return(heads[0], vae, state, rng);
    CHECK(s.value == 0.75);
  }
}

TEST_CASE("sample_return: fixed latent and state give a deterministic value") {
  auto heads = make_heads(1, 2);
  std::vector<double> z{0.2, -0.4};
  std::vector<double> state{0.5, 0.5, -0.5, 0.0};
  CHECK(heads[0].generator_value(z, state) == heads[0].generator_value(z, state));
}

TEST_CASE("sample_return: Monte-Carlo mean matches quadrature on a 1-D latent") {
  // L = 1 fixture; compare 1e5 reparameterized samples of G(z,s) against
  // Simpson integration of G(z,s) N(z; mu, sigma) dz.
  auto vae = make_shared_vae(3, 1);
  auto heads = make_heads(1, 3, 1);
  std::vector<double> state{0.3, -0.2, 0.8, -0.5};

  const auto prior_raw = vae.prior().eval(state);
  const double mu = prior_raw[0];
  const double sigma = std::clamp(std::exp(prior_raw[1]), kSigmaLo, kSigmaHi);

  const int intervals = 4000;
  const double lo = mu - 10.0 * sigma, hi = mu + 10.0 * sigma;
  const double h = (hi - lo) / intervals;
  double integral = 0.0;
  for (int i = 0; i <= intervals; ++i) {
    const double z = lo + i * h;
    const double pdf =
        std::exp(-0.5 * (z - mu) * (z - mu) / (sigma * sigma)) / (sigma * std::sqrt(2 * M_PI));
    const double g = heads[0].generator_value(std::vector<double>{z}, state);
    const double w = (i == 0 || i == intervals) ? 1.0 : ((i % 2) ? 4.0 : 2.0);
    integral += w * pdf * g;
  }
  integral *= h / 3.0;

  Rng rng(11);
  const int samples = 100000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < samples; ++i) {
    const auto s = sample_return(heads[0], vae, state, rng);
    sum += s.value;
    sumsq += s.value * s.value;
  }
  const double mean = sum / samples;
  const double var = sumsq / samples - mean * mean;
  const double stderr_mean = std::sqrt(var / samples);
  CHECK(std::fabs(mean - integral) < 3.0 * stderr_mean + 1e-9);
}

TEST_CASE("encode: sigma is clamped into [1e-4, 1e4] even for extreme inputs") {
  auto vae = make_shared_vae(4);
  std::vector<double> state{100.0, -100.0, 50.0, -50.0};
  for (double x : {-1e8, 0.0, 1e8}) {
    const auto [mu, sigma] = vae.encode(x, state);
    for (double s : sigma) {
      CHECK(s >= kSigmaLo);
      CHECK(s <= kSigmaHi);
    }
  }
}

TEST_CASE("encode: deterministic in (x, state)") {
  auto vae = make_shared_vae(5);
  std::vector<double> state{0.1, 0.2, 0.3, 0.4};
  const auto a = vae.encode(0.5, state);
  const auto b = vae.encode(0.5, state);
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
}

TEST_CASE("encode: gradients w.r.t. encoder parameters match finite differences") {
  auto vae = make_shared_vae(6);
  std::vector<double> state{0.4, -0.6, 0.2, 0.9};
  auto f = [&]() {
    auto x = diff::Tensor::from_vector({1, 1}, {0.7});
    auto s = diff::Tensor::from_vector({1, kObs}, std::vector<double>(state));
    auto q = vae.encode_params(x, s);
    return diff::add(diff::sum_t(q.mu), diff::sum_t(q.sigma));
  };
  const auto report = diff::gradient_check(f, vae.encoder().parameters());
  CHECK(report.max_rel_error <= 1e-4);
}

TEST_CASE("discriminator_loss: D == 0.5 everywhere gives 2 log(1/2)") {
  auto vae = make_shared_vae(7);
  zero_mlp(vae.discriminator());
  auto heads = make_heads(2, 7);
  Rng rng(8);
  auto ub = small_batch(2, 3, rng);
  const auto fwd = prepare_update_batch(vae, heads, ub, rng);
  const auto objective = discriminator_loss(vae, fwd);
  CHECK(objective.item() == doctest::Approx(2.0 * std::log(0.5)).epsilon(1e-12));
}

TEST_CASE("discriminator_loss: perfect discriminator approaches zero from below") {
  auto vae = make_shared_vae(9);
  auto heads = make_heads(1, 9);
  // Craft D(x, z, s) ~= sigmoid(BIG * tanh(tanh(x))): x > 0 => ~1, x < 0 => ~0.
  auto& disc = vae.discriminator();
  zero_mlp(disc);
  disc.parameters()[0].data()[0] = 5.0;    // input x -> first hidden unit
  disc.parameters()[2].data()[0] = 5.0;    // h1_0 -> h2_0
  disc.parameters()[4].data()[0] = 200.0;  // h2_0 -> logit

  // Separable fixture: generated returns sit at +1, data returns at -1.
  for (auto& h : heads) {
    zero_mlp(h.target_generator());
    h.target_generator().parameters().back().data() = {1.0};
  }
  Rng rng(10);
  auto ub = small_batch(1, 4, rng);
  std::fill(ub.data_x.begin(), ub.data_x.end(), -1.0);
  const auto fwd = prepare_update_batch(vae, heads, ub, rng);
  const auto objective = discriminator_loss(vae, fwd).item();
  CHECK(objective < 0.0);
  CHECK(objective > -1e-10);
}

TEST_CASE("discriminator_loss: matches hand recomputation on a 3-sample batch") {
  auto vae = make_shared_vae(11);
  auto heads = make_heads(2, 11);
  Rng rng(12);
  auto ub = small_batch(2, 3, rng);
  const auto fwd = prepare_update_batch(vae, heads, ub, rng);

  double expected = 0.0;
  const std::size_t L = kLatent;
  for (std::size_t b = 0; b < 3; ++b) {
    std::vector<double> zbar(fwd.zbar.data().begin() + b * L,
                             fwd.zbar.data().begin() + (b + 1) * L);
    std::vector<double> zp(fwd.z_prior.data().begin() + b * L,
                           fwd.z_prior.data().begin() + (b + 1) * L);
    const double l1 = naive_disc_logit(vae, fwd.xbar.data()[b], zp, ub.states[b]);
    const double l2 = naive_disc_logit(vae, ub.data_x[b], zbar, ub.states[b]);
    const double d1 = 1.0 / (1.0 + std::exp(-l1));
    const double d2 = 1.0 / (1.0 + std::exp(-l2));
    expected += std::log(d1) + std::log(1.0 - d2);
  }
  expected /= 3.0;
  CHECK(discriminator_loss(vae, fwd).item() == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("encoder_prior_loss: D == 0.5 gives 2 log(1/2); swap symmetry holds") {
  auto vae = make_shared_vae(13);
  zero_mlp(vae.discriminator());
  auto heads = make_heads(2, 13);
  Rng rng(14);
  auto ub = small_batch(2, 3, rng);
  const auto fwd = prepare_update_batch(vae, heads, ub, rng);
  CHECK(encoder_prior_loss(vae, fwd).item() ==
        doctest::Approx(2.0 * std::log(0.5)).epsilon(1e-12));

  // Sum of the two flipped objectives is invariant under swapping the two
  // D-argument tuples (xbar, z) <-> (x, zbar).
  auto vae2 = make_shared_vae(15);
  auto fwd2 = prepare_update_batch(vae2, heads, ub, rng);
  const double sum_orig =
      discriminator_loss(vae2, fwd2).item() + encoder_prior_loss(vae2, fwd2).item();
  VaeForward swapped = fwd2;
  std::swap(swapped.xbar, swapped.data_x);
  std::swap(swapped.z_prior, swapped.zbar);
  const double sum_swapped =
      discriminator_loss(vae2, swapped).item() + encoder_prior_loss(vae2, swapped).item();
  CHECK(sum_orig == doctest::Approx(sum_swapped).epsilon(1e-12));
}

TEST_CASE("generator_loss: perfect reconstruction and constant-generator cases") {
  auto vae = make_shared_vae(16);
  auto heads = make_heads(1, 16);
  zero_mlp(heads[0].generator());
  heads[0].generator().parameters().back().data() = {0.5};
  Rng rng(17);
  auto ub = small_batch(1, 4, rng);

  // Targets equal to the constant output: zero loss.
  std::fill(ub.head_targets[0].begin(), ub.head_targets[0].end(), 0.5);
  auto fwd = prepare_update_batch(vae, heads, ub, rng);
  CHECK(generator_loss(heads[0], fwd, 0).item() == 0.0);

  // Constant generator c against targets x: mean (x - c)^2.
  std::vector<double> xs{1.0, -1.0, 2.0, 0.0};
  ub.head_targets[0] = xs;
  fwd = prepare_update_batch(vae, heads, ub, rng);
  double expected = 0.0;
  for (double x : xs) expected += (x - 0.5) * (x - 0.5);
  expected /= xs.size();
  CHECK(generator_loss(heads[0], fwd, 0).item() == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("generator_loss: 5-sample batch matches the hand-computed residual mean") {
  auto vae = make_shared_vae(18);
  auto heads = make_heads(2, 18);
  Rng rng(19);
  auto ub = small_batch(2, 5, rng);
  const auto fwd = prepare_update_batch(vae, heads, ub, rng);
  double expected = 0.0;
  for (std::size_t b = 0; b < 5; ++b) {
    std::vector<double> zt(fwd.ztilde[1].data().begin() + b * kLatent,
                           fwd.ztilde[1].data().begin() + (b + 1) * kLatent);
    const double recon = heads[1].generator_value(zt, ub.states[b]);
    const double err = ub.head_targets[1][b] - recon;
    expected += err * err;
  }
  expected /= 5.0;
  CHECK(generator_loss(heads[1], fwd, 1).item() == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("make_adversaries: K=1 averages equal the single head's values") {
  auto vae = make_shared_vae(20);
  auto heads = make_heads(1, 20);
  Rng rng(21);
  auto ub = small_batch(1, 3, rng);
  Rng rng_a = rng;
  const auto fwd = prepare_update_batch(vae, heads, ub, rng_a);
  CHECK(fwd.zbar.data() == fwd.ztilde[0].data());
}

TEST_CASE("make_adversaries: constant identical heads collapse the average") {
  auto vae = make_shared_vae(22);
  auto heads = make_heads(3, 22);
  for (auto& h : heads) {
    zero_mlp(h.target_generator());
    h.target_generator().parameters().back().data() = {2.5};
  }
  Rng rng(23);
  auto ub = small_batch(3, 4, rng);
  const auto adv = make_adversaries(heads, vae, ub, rng);
  for (double x : adv.xbar) CHECK(x == 2.5);
}

TEST_CASE("make_adversaries: K=3 mean matches hand arithmetic") {
  auto vae = make_shared_vae(24);
  auto heads = make_heads(3, 24);
  Rng rng(25);
  auto ub = small_batch(3, 2, rng);
  const auto fwd = prepare_update_batch(vae, heads, ub, rng);
  for (std::size_t idx = 0; idx < fwd.zbar.data().size(); ++idx) {
    const double mean =
        (fwd.ztilde[0].data()[idx] + fwd.ztilde[1].data()[idx] + fwd.ztilde[2].data()[idx]) / 3.0;
    CHECK(fwd.zbar.data()[idx] == doctest::Approx(mean).epsilon(1e-12));
  }
}

TEST_CASE("sync_targets: hard copy, init equality, idempotence") {
  auto heads = make_heads(1, 26);
  std::vector<double> z{0.1, 0.2};
  std::vector<double> s{0.3, 0.4, -0.5, 0.6};
  // Before any sync the target equals the initial copy.
  CHECK(heads[0].generator_value(z, s) == heads[0].target_value(z, s));

  // Perturb the live generator; the target must not move.
  heads[0].generator().parameters()[0].data()[0] += 0.37;
  CHECK(heads[0].generator_value(z, s) != heads[0].target_value(z, s));

  heads[0].sync_target();
  CHECK(heads[0].generator_value(z, s) == heads[0].target_value(z, s));
  heads[0].sync_target();
  CHECK(heads[0].generator_value(z, s) == heads[0].target_value(z, s));
}

TEST_CASE("gradient isolation: each loss touches exactly its own parameters") {
  auto vae = make_shared_vae(27);
  auto heads = make_heads(2, 27);
  Rng rng(28);
  auto ub = small_batch(2, 4, rng);
  const auto fwd = prepare_update_batch(vae, heads, ub, rng);

  auto any_grad = [](const std::vector<diff::Tensor>& params) {
    for (const auto& p : params)
      if (p.has_grad()) return true;
    return false;
  };
  auto zero_all = [&]() {
    for (auto p : vae.discriminator().parameters()) p.zero_grad();
    for (auto p : vae.encoder().parameters()) p.zero_grad();
    for (auto p : vae.prior().parameters()) p.zero_grad();
    for (auto& h : heads) {
      for (auto p : h.generator().parameters()) p.zero_grad();
      for (auto p : h.target_generator().parameters()) p.zero_grad();
      for (auto p : h.policy().net().parameters()) p.zero_grad();
    }
  };

  zero_all();
  discriminator_loss(vae, fwd).backward();
  CHECK(any_grad(vae.discriminator().parameters()));
  CHECK_FALSE(any_grad(vae.encoder().parameters()));
  CHECK_FALSE(any_grad(vae.prior().parameters()));
  CHECK_FALSE(any_grad(heads[0].generator().parameters()));

  zero_all();
  encoder_prior_loss(vae, fwd).backward();
  CHECK_FALSE(any_grad(vae.discriminator().parameters()));
  CHECK(any_grad(vae.encoder().parameters()));
  CHECK(any_grad(vae.prior().parameters()));
  CHECK_FALSE(any_grad(heads[0].generator().parameters()));
  CHECK_FALSE(any_grad(heads[0].target_generator().parameters()));

  zero_all();
  generator_loss(heads[0], fwd, 0).backward();
  CHECK(any_grad(heads[0].generator().parameters()));
  CHECK_FALSE(any_grad(heads[1].generator().parameters()));
  CHECK_FALSE(any_grad(vae.encoder().parameters()));
  CHECK_FALSE(any_grad(vae.discriminator().parameters()));
}

TEST_CASE("discriminator output is strictly inside (0, 1)") {
  auto vae = make_shared_vae(29);
  Rng rng(30);
  std::vector<double> z(kLatent), s(kObs);
  for (int trial = 0; trial < 100; ++trial) {
    for (auto& v : z) v = rng.uniform(-1e4, 1e4);
    for (auto& v : s) v = rng.uniform(-1e4, 1e4);
    const double d = vae.disc_prob(rng.uniform(-1e6, 1e6), z, s);
    CHECK(d > 0.0);
    CHECK(d < 1.0);
  }
}

TEST_CASE("heads are pairwise distinct at initialization") {
  auto heads = make_heads(3, 31);
  Rng rng(32);
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      double max_gap = 0.0;
      for (int trial = 0; trial < 4; ++trial) {
        std::vector<double> s(kObs), z(kLatent, 0.0);
        for (auto& v : s) v = rng.uniform(-1.0, 1.0);
        max_gap = std::max(max_gap, std::fabs(heads[i].generator_value(z, s) -
                                              heads[j].generator_value(z, s)));
      }
      CHECK(max_gap > 0.0);
    }
  }
}

TEST_CASE("one shared latent feeds all heads at a timestep") {
  auto vae = make_shared_vae(33);
  auto heads = make_heads(3, 33);
  Rng rng(34);
  std::vector<double> s{0.1, 0.2, 0.3, 0.4};
  const auto samples = sample_returns(heads, vae, s, rng);
  REQUIRE(samples.size() == 3);
  CHECK(samples[0].latent == samples[1].latent);
  CHECK(samples[1].latent == samples[2].latent);
  // And the values are those of each head's generator on that shared latent.
  for (int i = 0; i < 3; ++i)
    CHECK(samples[i].value == heads[i].generator_value(samples[0].latent, s));
}
