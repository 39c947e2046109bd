#pragma once

#include <span>
#include <vector>

#include "bop/common/rng.hpp"
#include "bop/diff/mlp.hpp"
#include "bop/diff/tensor.hpp"
#include "bop/ensemble/policy.hpp"

namespace bop::retdist {

struct GaussianParams {
  diff::Tensor mu;     // {B, L}
  diff::Tensor sigma;  // {B, L}, clamped to [1e-4, 1e4]
};

inline constexpr double kSigmaLo = 1e-4;
inline constexpr double kSigmaHi = 1e4;
inline constexpr double kDiscLogitClamp = 30.0;  // keeps D strictly inside (0,1)

// Shared latent prior p(z|s), variational encoder q(z|x,s), and
// discriminator D(x,z,s) over joint (return, latent, state) tuples.
class SharedVae {
 public:
  SharedVae() = default;
  static SharedVae make(int obs_dim, int latent_dim, std::size_t hidden_width,
                        diff::Activation act, Rng& rng);

  int latent_dim() const { return latent_dim_; }
  int obs_dim() const { return obs_dim_; }

  GaussianParams prior_params(const diff::Tensor& states) const;
  GaussianParams encode_params(const diff::Tensor& x, const diff::Tensor& states) const;
  diff::Tensor disc_logit(const diff::Tensor& x, const diff::Tensor& z,
                          const diff::Tensor& states) const;  // {B}

  // Single-point value-mode encoder output, for curiosity bonuses.
  std::pair<std::vector<double>, std::vector<double>> encode(double x,
                                                             std::span<const double> state) const;
  // Reparameterized prior draw, value mode.
  std::vector<double> sample_prior(std::span<const double> state, Rng& rng) const;
  double disc_prob(double x, std::span<const double> z, std::span<const double> state) const;

  diff::Mlp& prior() { return prior_; }
  diff::Mlp& encoder() { return encoder_; }
  diff::Mlp& discriminator() { return discriminator_; }
  const diff::Mlp& prior() const { return prior_; }
  const diff::Mlp& encoder() const { return encoder_; }
  const diff::Mlp& discriminator() const { return discriminator_; }

 private:
  static GaussianParams split_gaussian(const diff::Tensor& raw, int latent_dim);

  int obs_dim_ = 0;
  int latent_dim_ = 0;
  diff::Mlp prior_;
  diff::Mlp encoder_;
  diff::Mlp discriminator_;
};

// One ensemble member: live return generator G(z,s), frozen target copy,
// and the policy that module `ensemble` updates.
class Head {
 public:
  Head() = default;
  static Head make(int index, int obs_dim, int latent_dim,
                   const envs::ActionSpace& action_space, std::size_t hidden_width,
                   diff::Activation act, std::uint64_t seed);

  int index() const { return index_; }

  diff::Tensor generator_out(const diff::Tensor& z, const diff::Tensor& states) const;  // {B}
  diff::Tensor target_out(const diff::Tensor& z, const diff::Tensor& states) const;     // {B}
  double generator_value(std::span<const double> z, std::span<const double> state) const;
  double target_value(std::span<const double> z, std::span<const double> state) const;

  // theta_bar <- theta, hard copy.
  void sync_target();

  diff::Mlp& generator() { return generator_; }
  diff::Mlp& target_generator() { return target_generator_; }
  const diff::Mlp& generator() const { return generator_; }
  const diff::Mlp& target_generator() const { return target_generator_; }
  ensemble::PolicyHead& policy() { return policy_; }
  const ensemble::PolicyHead& policy() const { return policy_; }

 private:
  int index_ = 0;
  diff::Mlp generator_;
  diff::Mlp target_generator_;  // parameters never require grad
  ensemble::PolicyHead policy_;
};

void sync_targets(std::vector<Head>& heads);

struct ReturnSample {
  double value = 0.0;
  std::vector<double> latent;
  int head_index = 0;
};

// Reparameterized z ~ p(.|s); g = G_i(z, s). Value mode.
ReturnSample sample_return(const Head& head, const SharedVae& shared,
                           std::span<const double> state, Rng& rng);

// One shared z per call feeds every head's generator.
std::vector<ReturnSample> sample_returns(const std::vector<Head>& heads, const SharedVae& shared,
                                         std::span<const double> state, Rng& rng);

// Constants of one update minibatch.
struct UpdateBatch {
  std::vector<std::vector<double>> states;        // B x obs_dim
  std::vector<std::vector<double>> head_targets;  // K x B: x_t^i
  std::vector<double> data_x;                     // B: x_t fed to D as the encoded pair
};

// Graph quantities shared by the update-stage losses; built once per
// minibatch so the same latent draws serve every loss.
struct VaeForward {
  diff::Tensor states;                // {B, ds} constant
  std::vector<diff::Tensor> ztilde;   // K x {B, L}: q-encodings of x^i, live through phi
  diff::Tensor zbar;                  // {B, L} mean of ztilde, live through phi
  diff::Tensor xbar;                  // {B, 1} mean of target-generator adversaries (constant)
  diff::Tensor z_prior;               // {B, L} reparameterized prior draw, live through theta_p
  diff::Tensor data_x;                // {B, 1} constant
  std::vector<diff::Tensor> head_x;   // K x {B, 1} constants
};

// Dense-op attribution of one preparation pass: work that scales with K
// (encodings, adversaries) vs work that does not (prior passes).
struct OpSplit {
  std::uint64_t shared = 0;
  std::uint64_t per_head = 0;
};

VaeForward prepare_update_batch(const SharedVae& shared, const std::vector<Head>& heads,
                                const UpdateBatch& batch, Rng& rng, OpSplit* split = nullptr);

// Objective of Algorithm-style discriminator ascent:
//   mean[ log D(xbar, z, s) + log(1 - D(x, zbar, s)) ]
// All non-psi inputs are detached; the reverse pass reaches only psi.
diff::Tensor discriminator_loss(const SharedVae& shared, const VaeForward& fwd);

// Flipped objective for the encoder/prior ascent:
//   mean[ log(1 - D(xbar, z, s)) + log D(x, zbar, s) ]
// The discriminator is frozen for this pass; gradients reach phi and the
// prior parameters only.
diff::Tensor encoder_prior_loss(const SharedVae& shared, const VaeForward& fwd);

// mean (x^i - G_i(ztilde^i, s))^2 with ztilde detached; gradients reach the
// head-i generator only. Optional 0/1 weights select a sample subset.
diff::Tensor generator_loss(const Head& head, const VaeForward& fwd, int head_index,
                            const std::vector<double>* weights = nullptr);

struct Adversaries {
  std::vector<std::vector<double>> zbar;  // B x L
  std::vector<double> xbar;               // B
};

// Value-mode lines 22-24: fresh prior draws through the frozen target
// generators, plus q-encodings of each head's target, averaged across heads.
Adversaries make_adversaries(const std::vector<Head>& heads, const SharedVae& shared,
                             const UpdateBatch& batch, Rng& rng);

}  // namespace bop::retdist
