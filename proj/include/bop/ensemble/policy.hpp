#pragma once

#include <span>
#include <string>
#include <vector>

#include "bop/common/rng.hpp"
#include "bop/diff/mlp.hpp"
#include "bop/diff/tensor.hpp"
#include "bop/envs/env.hpp"

namespace bop::ensemble {

enum class ActionSelection {
  kAverageThenArgmax,  // test default
  kArgmaxThenVote,
  kSampleThenArgmax,
  kSample,  // training roll-outs
};

ActionSelection action_selection_from_string(const std::string& s);
std::string to_string(ActionSelection mode);

// One policy head: categorical over n actions for discrete action spaces,
// diagonal Gaussian (mu, log sigma) for continuous ones.
class PolicyHead {
 public:
  PolicyHead() = default;
  static PolicyHead make(int obs_dim, const envs::ActionSpace& space, std::size_t hidden_width,
                         diff::Activation act, Rng& rng);

  bool continuous() const { return continuous_; }
  int action_dim() const { return action_dim_; }

  // Single-state helpers (no graph).
  std::vector<double> action_probs(std::span<const double> state) const;  // categorical
  std::vector<double> all_logp(std::span<const double> state) const;      // categorical, log probs
  std::pair<std::vector<double>, std::vector<double>> gaussian_params(
      std::span<const double> state) const;  // (mu, sigma)
  int sample_discrete(std::span<const double> state, Rng& rng) const;
  int greedy_discrete(std::span<const double> state) const;

  // Batched graph builders for the update stage.
  diff::Tensor logp_batch(const diff::Tensor& states, const std::vector<int>& actions) const;
  diff::Tensor logp_batch_continuous(const diff::Tensor& states,
                                     const diff::Tensor& actions) const;
  diff::Tensor entropy_batch(const diff::Tensor& states) const;

  diff::Mlp& net() { return net_; }
  const diff::Mlp& net() const { return net_; }

 private:
  diff::Tensor gaussian_log_sigma(const diff::Tensor& raw) const;

  diff::Mlp net_;
  bool continuous_ = false;
  int action_dim_ = 0;
};

struct SelectionContext {
  ActionSelection mode = ActionSelection::kAverageThenArgmax;
  bool gaussian_mixture_mode = false;  // mixture-mode variant of averaging
};

// Test-time action selection across heads for discrete action spaces.
int select_action_discrete(const std::vector<const PolicyHead*>& heads,
                           std::span<const double> state, const SelectionContext& ctx, Rng& rng);

// Continuous counterpart; returns the selected action vector.
std::vector<double> select_action_continuous(const std::vector<const PolicyHead*>& heads,
                                             std::span<const double> state,
                                             const SelectionContext& ctx, Rng& rng);

// Mean of the K categorical distributions at `state`.
std::vector<double> average_probs(const std::vector<const PolicyHead*>& heads,
                                  std::span<const double> state);

// Per-sample PPO surrogate min(r*A, clip(r, 1-eps, 1+eps)*A) with
// r = exp(logp_new - logp_behaviour); `raw` switches to logp_new * A.
diff::Tensor ppo_surrogate(const diff::Tensor& logp_new,
                           const std::vector<double>& behaviour_logp,
                           const std::vector<double>& advantages, double clip, bool raw);

}  // namespace bop::ensemble
