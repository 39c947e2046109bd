#include "bop/ensemble/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bop::ensemble {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kPolicyLogSigmaLo = -10.0;
constexpr double kPolicyLogSigmaHi = 4.0;

int argmax_lowest_tie(std::span<const double> v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}
}  // namespace

ActionSelection action_selection_from_string(const std::string& s) {
  if (s == "average-then-argmax") return ActionSelection::kAverageThenArgmax;
  if (s == "argmax-then-vote") return ActionSelection::kArgmaxThenVote;
  if (s == "sample-then-argmax") return ActionSelection::kSampleThenArgmax;
  if (s == "sample") return ActionSelection::kSample;
  throw std::invalid_argument("unknown action selection mode '" + s + "'");
}

std::string to_string(ActionSelection mode) {
  switch (mode) {
    case ActionSelection::kAverageThenArgmax:
      return "average-then-argmax";
    case ActionSelection::kArgmaxThenVote:
      return "argmax-then-vote";
    case ActionSelection::kSampleThenArgmax:
      return "sample-then-argmax";
    case ActionSelection::kSample:
      return "sample";
  }
  return "?";
}

PolicyHead PolicyHead::make(int obs_dim, const envs::ActionSpace& space, std::size_t hidden_width,
                            diff::Activation act, Rng& rng) {
  PolicyHead head;
  std::size_t out;
  if (const auto* d = std::get_if<envs::Discrete>(&space)) {
    head.continuous_ = false;
    head.action_dim_ = d->n;
    out = static_cast<std::size_t>(d->n);
  } else {
    const auto& c = std::get<envs::Continuous>(space);
    head.continuous_ = true;
    head.action_dim_ = c.dim;
    out = static_cast<std::size_t>(2 * c.dim);
  }
  head.net_ = diff::Mlp::make({static_cast<std::size_t>(obs_dim), hidden_width, hidden_width, out},
                              act, rng);
  return head;
}

std::vector<double> PolicyHead::action_probs(std::span<const double> state) const {
  auto logp = all_logp(state);
  for (auto& v : logp) v = std::exp(v);
  return logp;
}

std::vector<double> PolicyHead::all_logp(std::span<const double> state) const {
  if (continuous_) throw std::logic_error("all_logp: continuous head");
  auto logits = net_.eval(state);
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double s = 0.0;
  for (double v : logits) s += std::exp(v - mx);
  const double lse = mx + std::log(s);
  for (auto& v : logits) v -= lse;
  return logits;
}

std::pair<std::vector<double>, std::vector<double>> PolicyHead::gaussian_params(
    std::span<const double> state) const {
  if (!continuous_) throw std::logic_error("gaussian_params: discrete head");
  auto out = net_.eval(state);
  std::vector<double> mu(out.begin(), out.begin() + action_dim_);
  std::vector<double> sigma(action_dim_);
  for (int i = 0; i < action_dim_; ++i) {
    sigma[i] = std::exp(std::clamp(out[action_dim_ + i], kPolicyLogSigmaLo, kPolicyLogSigmaHi));
  }
  return {std::move(mu), std::move(sigma)};
}

int PolicyHead::sample_discrete(std::span<const double> state, Rng& rng) const {
  const auto probs = action_probs(state);
  const double u = rng.uniform01();
  double acc = 0.0;
  for (int a = 0; a < static_cast<int>(probs.size()); ++a) {
    acc += probs[a];
    if (u < acc) return a;
  }
  return static_cast<int>(probs.size()) - 1;
}

int PolicyHead::greedy_discrete(std::span<const double> state) const {
  const auto probs = action_probs(state);
  return argmax_lowest_tie(probs);
}

diff::Tensor PolicyHead::logp_batch(const diff::Tensor& states,
                                    const std::vector<int>& actions) const {
  if (continuous_) throw std::logic_error("logp_batch: continuous head");
  return diff::gather_cols(diff::log_softmax_rows(net_.forward(states)), actions);
}

diff::Tensor PolicyHead::gaussian_log_sigma(const diff::Tensor& raw) const {
  return diff::clamp_t(raw, kPolicyLogSigmaLo, kPolicyLogSigmaHi);
}

diff::Tensor PolicyHead::logp_batch_continuous(const diff::Tensor& states,
                                               const diff::Tensor& actions) const {
  if (!continuous_) throw std::logic_error("logp_batch_continuous: discrete head");
  const std::size_t d = static_cast<std::size_t>(action_dim_);
  auto out = net_.forward(states);
  auto mu = diff::slice_cols(out, 0, d);
  auto log_sigma = gaussian_log_sigma(diff::slice_cols(out, d, 2 * d));
  auto diffv = diff::sub(actions, mu);
  auto inv_var = diff::exp_t(diff::scale(log_sigma, -2.0));
  auto quad = diff::sum_rows(diff::mul(diff::square_t(diffv), inv_var));
  auto logp = diff::scale(quad, -0.5);
  logp = diff::sub(logp, diff::sum_rows(log_sigma));
  return diff::add_scalar(logp, -0.5 * static_cast<double>(d) * kLog2Pi);
}

diff::Tensor PolicyHead::entropy_batch(const diff::Tensor& states) const {
  if (continuous_) {
    const std::size_t d = static_cast<std::size_t>(action_dim_);
    auto out = net_.forward(states);
    auto log_sigma = gaussian_log_sigma(diff::slice_cols(out, d, 2 * d));
    return diff::add_scalar(diff::sum_rows(log_sigma),
                            0.5 * static_cast<double>(d) * (1.0 + kLog2Pi));
  }
  auto logp = diff::log_softmax_rows(net_.forward(states));
  auto p = diff::exp_t(logp);
  return diff::neg(diff::sum_rows(diff::mul(p, logp)));
}

diff::Tensor ppo_surrogate(const diff::Tensor& logp_new,
                           const std::vector<double>& behaviour_logp,
                           const std::vector<double>& advantages, double clip, bool raw) {
  auto adv = diff::Tensor::from_vector({advantages.size()}, std::vector<double>(advantages));
  if (raw) return diff::mul(logp_new, adv);
  auto behaviour =
      diff::Tensor::from_vector({behaviour_logp.size()}, std::vector<double>(behaviour_logp));
  auto ratio = diff::exp_t(diff::sub(logp_new, behaviour));
  auto unclipped = diff::mul(ratio, adv);
  auto clipped = diff::mul(diff::clamp_t(ratio, 1.0 - clip, 1.0 + clip), adv);
  return diff::min_t(unclipped, clipped);
}

std::vector<double> average_probs(const std::vector<const PolicyHead*>& heads,
                                  std::span<const double> state) {
  if (heads.empty()) throw std::invalid_argument("average_probs: no heads");
  std::vector<double> avg(heads.front()->action_dim(), 0.0);
  for (const auto* h : heads) {
    const auto p = h->action_probs(state);
    for (std::size_t i = 0; i < avg.size(); ++i) avg[i] += p[i];
  }
  const double inv = 1.0 / static_cast<double>(heads.size());
  for (auto& v : avg) v *= inv;
  return avg;
}

int select_action_discrete(const std::vector<const PolicyHead*>& heads,
                           std::span<const double> state, const SelectionContext& ctx, Rng& rng) {
  if (heads.empty()) throw std::invalid_argument("select_action_discrete: no heads");
  switch (ctx.mode) {
    case ActionSelection::kAverageThenArgmax: {
      const auto avg = average_probs(heads, state);
      return argmax_lowest_tie(avg);
    }
    case ActionSelection::kArgmaxThenVote: {
      std::vector<int> votes(heads.front()->action_dim(), 0);
      for (const auto* h : heads) votes[h->greedy_discrete(state)]++;
      int best = 0;
      for (int a = 1; a < static_cast<int>(votes.size()); ++a) {
        if (votes[a] > votes[best]) best = a;
      }
      return best;
    }
    case ActionSelection::kSampleThenArgmax: {
      const auto* h = heads[rng.index(static_cast<int>(heads.size()))];
      return h->greedy_discrete(state);
    }
    case ActionSelection::kSample: {
      const auto* h = heads[rng.index(static_cast<int>(heads.size()))];
      return h->sample_discrete(state, rng);
    }
  }
  throw std::logic_error("select_action_discrete: unreachable");
}

std::vector<double> select_action_continuous(const std::vector<const PolicyHead*>& heads,
                                             std::span<const double> state,
                                             const SelectionContext& ctx, Rng& rng) {
  if (heads.empty()) throw std::invalid_argument("select_action_continuous: no heads");
  const int d = heads.front()->action_dim();
  std::vector<std::vector<double>> mus;
  std::vector<std::vector<double>> sigmas;
  mus.reserve(heads.size());
  for (const auto* h : heads) {
    auto [mu, sigma] = h->gaussian_params(state);
    mus.push_back(std::move(mu));
    sigmas.push_back(std::move(sigma));
  }
  switch (ctx.mode) {
    case ActionSelection::kAverageThenArgmax: {
      std::vector<double> avg(d, 0.0);
      for (const auto& mu : mus)
        for (int i = 0; i < d; ++i) avg[i] += mu[i];
      for (auto& v : avg) v /= static_cast<double>(mus.size());
      if (!ctx.gaussian_mixture_mode) return avg;
      // Mixture variant: the component mean with the highest mixture density.
      auto mixture_logpdf = [&](const std::vector<double>& x) {
        double total = 0.0;
        for (std::size_t k = 0; k < mus.size(); ++k) {
          double lp = 0.0;
          for (int i = 0; i < d; ++i) {
            const double z = (x[i] - mus[k][i]) / sigmas[k][i];
            lp += -0.5 * z * z - std::log(sigmas[k][i]) - 0.9189385332046727;
          }
          total += std::exp(lp);
        }
        return total;
      };
      std::size_t best = 0;
      double best_pdf = mixture_logpdf(mus[0]);
      for (std::size_t k = 1; k < mus.size(); ++k) {
        const double pdf = mixture_logpdf(mus[k]);
        if (pdf > best_pdf) {
          best_pdf = pdf;
          best = k;
        }
      }
      return mus[best];
    }
    case ActionSelection::kArgmaxThenVote: {
      // "Most popular / similar" action: the head mean closest to the others.
      std::size_t best = 0;
      double best_cost = 1e300;
      for (std::size_t k = 0; k < mus.size(); ++k) {
        double cost = 0.0;
        for (std::size_t j = 0; j < mus.size(); ++j) {
          double d2 = 0.0;
          for (int i = 0; i < d; ++i) {
            const double dv = mus[k][i] - mus[j][i];
            d2 += dv * dv;
          }
          cost += std::sqrt(d2);
        }
        if (cost < best_cost) {
          best_cost = cost;
          best = k;
        }
      }
      return mus[best];
    }
    case ActionSelection::kSampleThenArgmax: {
      return mus[rng.index(static_cast<int>(mus.size()))];
    }
    case ActionSelection::kSample: {
      const std::size_t k = static_cast<std::size_t>(rng.index(static_cast<int>(mus.size())));
      std::vector<double> a(d);
      for (int i = 0; i < d; ++i) a[i] = mus[k][i] + sigmas[k][i] * rng.normal();
      return a;
    }
  }
  throw std::logic_error("select_action_continuous: unreachable");
}

}  // namespace bop::ensemble
