#include "bop/ensemble/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "bop/advantage/advantage.hpp"
#include "bop/common/binio.hpp"
#include "bop/curiosity/curiosity.hpp"
#include "bop/diff/serialize.hpp"

namespace bop::ensemble {

namespace diff = bop::diff;

int select_active_head(Rng& rng, int num_heads) {
  if (num_heads < 1) throw std::invalid_argument("select_active_head: need K >= 1");
  return rng.index(num_heads);
}

namespace {

constexpr std::uint32_t kTrainerBlobVersion = 1;

diff::Tensor vector_tensor(const std::vector<double>& v) {
  return diff::Tensor::from_vector({v.size()}, std::vector<double>(v));
}

// Weighted batch mean; empty weights mean uniform.
diff::Tensor batch_mean(const diff::Tensor& per_sample, const std::vector<double>& weights) {
  if (weights.empty()) return diff::mean_t(per_sample);
  double total = 0.0;
  for (double w : weights) total += w;
  auto weighted = diff::mul(per_sample, vector_tensor(weights));
  return diff::scale(diff::sum_t(weighted), 1.0 / total);
}

void ensure_finite(double v, const char* what, int iteration) {
  if (!std::isfinite(v)) {
    std::ostringstream os;
    os << "numeric failure: " << what << " is not finite at iteration " << iteration;
    throw std::runtime_error(os.str());
  }
}

bool any_grad(const std::vector<diff::Tensor>& params) {
  for (const auto& p : params) {
    if (p.has_grad()) return true;
  }
  return false;
}

}  // namespace

Trainer::Trainer(const harness::RunConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  schedule_mode_ = harness::schedule_mode_from_string(cfg_.schedule_mode);
  rng_ = Rng(derive_seed(cfg_.seed, 1));

  slots_.resize(cfg_.num_envs);
  for (int i = 0; i < cfg_.num_envs; ++i) {
    slots_[i].env = envs::make_env(cfg_.env, derive_seed(cfg_.seed, 200 + i));
  }
  const auto& spec = slots_[0].env->spec();
  if (!std::holds_alternative<envs::Discrete>(spec.action_space))
    throw std::invalid_argument("Trainer: provided environments are discrete-action");

  const auto act = cfg_.activation == "relu" ? diff::Activation::kRelu : diff::Activation::kTanh;
  Rng shared_rng(derive_seed(cfg_.seed, 10));
  shared_ = retdist::SharedVae::make(spec.obs_dim, cfg_.latent_dim,
                                     static_cast<std::size_t>(cfg_.hidden_width), act, shared_rng);
  heads_.reserve(cfg_.k);
  for (int i = 0; i < cfg_.k; ++i) {
    heads_.push_back(retdist::Head::make(i, spec.obs_dim, cfg_.latent_dim, spec.action_space,
                                         static_cast<std::size_t>(cfg_.hidden_width), act,
                                         derive_seed(cfg_.seed, 100 + i)));
  }

  const diff::LinearSchedule lr{cfg_.lr_start, cfg_.lr_end};
  opt_disc_ = diff::Adam(shared_.discriminator().parameters(), lr);
  std::vector<diff::Tensor> ep = shared_.encoder().parameters();
  ep.insert(ep.end(), shared_.prior().parameters().begin(), shared_.prior().parameters().end());
  opt_encoder_prior_ = diff::Adam(ep, lr);
  for (int i = 0; i < cfg_.k; ++i) {
    opt_generator_.emplace_back(heads_[i].generator().parameters(), lr);
    opt_policy_.emplace_back(heads_[i].policy().net().parameters(), lr);
  }

  collect_probe_states();
  ops_baseline_ = diff::mac_count();
}

void Trainer::collect_probe_states() {
  // 64 states from a uniform-random roll-out, frozen for the whole run.
  auto env = envs::make_env(cfg_.env, derive_seed(cfg_.seed, 300));
  Rng rng(derive_seed(cfg_.seed, 301));
  const int n_actions = envs::discrete_actions(env->spec());
  auto obs = env->reset();
  probe_states_.clear();
  while (probe_states_.size() < 64) {
    probe_states_.push_back(obs);
    if (env->done()) {
      obs = env->reset();
      continue;
    }
    const auto tr = env->step(rng.index(n_actions));
    obs = tr.next_state;
    if (tr.done) obs = env->reset();
  }
}

double Trainer::progress() const {
  return std::min(1.0, static_cast<double>(env_steps_) / static_cast<double>(cfg_.total_env_steps));
}

void Trainer::rollout_stage(TrajectoryBatch& batch, IterationMetrics& metrics) {
  const int K = cfg_.k;
  batch.num_heads = K;
  metrics.active_head_histogram.assign(K, 0);
  std::vector<double> return_sum(K, 0.0);
  std::vector<int> return_count(K, 0);

  for (auto& slot : slots_) {
    for (int episode = 0; episode < cfg_.episodes_per_rollout; ++episode) {
      if (!slot.mid_episode) {
        slot.obs = slot.env->reset();
        slot.active_head = select_active_head(rng_, K);
        metrics.active_head_histogram[slot.active_head]++;
        slot.episode_return = 0.0;
        slot.episode_len = 0;
        slot.mid_episode = true;
      }
      Segment seg;
      seg.active_head = slot.active_head;
      seg.logp.resize(K);
      seg.values.resize(K);

      for (int t = 0; t < cfg_.rollout_timesteps; ++t) {
        // Log-probs of every head at s_t; only head k's distribution acts.
        std::vector<std::vector<double>> logps(K);
        {
          const auto mark = diff::mac_count();
          for (int i = 0; i < K; ++i) logps[i] = heads_[i].policy().all_logp(slot.obs);
          ops_per_head_cumulative_ += diff::mac_count() - mark;
        }
        int action = 0;
        {
          const double u = rng_.uniform01();
          double acc = 0.0;
          const auto& lp = logps[seg.active_head];
          for (int a = 0; a < static_cast<int>(lp.size()); ++a) {
            acc += std::exp(lp[a]);
            if (u < acc) {
              action = a;
              break;
            }
            action = a;
          }
        }

        // One shared z_t per step feeds all K generators.
        std::vector<double> z;
        {
          const auto mark = diff::mac_count();
          z = shared_.sample_prior(slot.obs, rng_);
          ops_shared_cumulative_ += diff::mac_count() - mark;
        }
        {
          const auto mark = diff::mac_count();
          for (int i = 0; i < K; ++i)
            seg.values[i].push_back(heads_[i].generator_value(z, slot.obs));
          ops_per_head_cumulative_ += diff::mac_count() - mark;
        }

        const auto tr = slot.env->step(action);
        seg.states.push_back(slot.obs);
        seg.actions.push_back(action);
        seg.rewards.push_back(tr.reward);
        seg.latents.push_back(z);
        for (int i = 0; i < K; ++i) seg.logp[i].push_back(logps[i][action]);

        slot.obs = tr.next_state;
        slot.episode_return += tr.reward;
        slot.episode_len += 1;
        ++env_steps_;
        if (tr.done) {
          seg.terminal = true;
          break;
        }
      }

      // Bootstrap samples g_T^i at the segment's final state.
      {
        std::vector<double> z;
        {
          const auto mark = diff::mac_count();
          z = shared_.sample_prior(slot.obs, rng_);
          ops_shared_cumulative_ += diff::mac_count() - mark;
        }
        const auto mark = diff::mac_count();
        for (int i = 0; i < K; ++i) seg.values[i].push_back(heads_[i].generator_value(z, slot.obs));
        ops_per_head_cumulative_ += diff::mac_count() - mark;
      }

      if (seg.terminal) {
        return_sum[seg.active_head] += slot.episode_return;
        return_count[seg.active_head] += 1;
        slot.mid_episode = false;
      }
      batch.segments.push_back(std::move(seg));
    }
  }

  metrics.head_mean_return.assign(K, std::numeric_limits<double>::quiet_NaN());
  metrics.head_episode_counts.assign(K, 0);
  for (int i = 0; i < K; ++i) {
    metrics.head_episode_counts[i] = return_count[i];
    if (return_count[i] > 0) metrics.head_mean_return[i] = return_sum[i] / return_count[i];
  }
  batch.check_invariants();
}

void Trainer::estimation_stage(const TrajectoryBatch& batch, std::vector<AdvantageTable>& tables,
                               IterationMetrics& metrics) {
  const int K = cfg_.k;
  tables.clear();
  tables.reserve(batch.segments.size());
  std::vector<double> kl_sum(K, 0.0);
  std::vector<double> kl_max(K, 0.0);
  std::size_t steps = 0;

  for (const auto& seg : batch.segments) {
    const std::size_t T = seg.length();
    steps += T;
    AdvantageTable table;
    table.advantage.resize(K);
    table.bellman_target.resize(K);
    table.curiosity_kl.assign(K, std::vector<double>(T, 0.0));
    table.bonus.assign(K, std::vector<double>(T, 0.0));
    table.augmented_advantage.resize(K);

    std::vector<std::uint8_t> dones(T, 0);
    if (seg.terminal) dones[T - 1] = 1;

    // Advantages from external rewards only, then Bellman targets (ordering
    // invariant: targets are fixed before any curiosity enters).
    for (int i = 0; i < K; ++i) {
      if (i == seg.active_head) {
        table.advantage[i] =
            advantage::gae(seg.rewards, seg.values[i], dones, cfg_.gamma, cfg_.lambda);
      } else {
        table.advantage[i] = advantage::vtrace_advantage(
            seg.rewards, seg.values[i], dones, seg.logp[seg.active_head], seg.logp[i], cfg_.gamma,
            cfg_.rho_bar, cfg_.c_bar);
      }
      table.bellman_target[i] = advantage::bellman_targets(
          table.advantage[i],
          std::span<const double>(seg.values[i].data(), T));
    }

    // Curiosity: KL between the encoder posterior conditioned on the active
    // head's target and the one conditioned on each head's own sample.
    for (std::size_t t = 0; t < T; ++t) {
      const auto& s = seg.states[t];
      std::pair<std::vector<double>, std::vector<double>> qk;
      {
        const auto mark = diff::mac_count();
        qk = shared_.encode(table.bellman_target[seg.active_head][t], s);
        ops_shared_cumulative_ += diff::mac_count() - mark;
      }
      const auto mark = diff::mac_count();
      for (int i = 0; i < K; ++i) {
        const auto qi = shared_.encode(seg.values[i][t], s);
        const double kl =
            curiosity::gaussian_kl(qk.first, qk.second, qi.first, qi.second);
        table.curiosity_kl[i][t] = kl;
        table.bonus[i][t] = std::min(cfg_.beta * kl, cfg_.curiosity_clip);
        kl_sum[i] += kl;
        kl_max[i] = std::max(kl_max[i], kl);
      }
      ops_per_head_cumulative_ += diff::mac_count() - mark;
    }

    // Augmented advantages: same estimator per head, rewards r + bonus.
    for (int i = 0; i < K; ++i) {
      curiosity::AdvantageInputs inputs;
      inputs.rewards = seg.rewards;
      inputs.values = seg.values[i];
      inputs.dones = dones;
      inputs.gamma = cfg_.gamma;
      inputs.lambda = cfg_.lambda;
      inputs.rho_bar = cfg_.rho_bar;
      inputs.c_bar = cfg_.c_bar;
      inputs.use_vtrace = (i != seg.active_head);
      if (inputs.use_vtrace) {
        inputs.behaviour_logp = seg.logp[seg.active_head];
        inputs.target_logp = seg.logp[i];
      }
      table.augmented_advantage[i] =
          curiosity::augment(inputs, table.curiosity_kl[i], cfg_.beta, cfg_.curiosity_clip);
    }
    tables.push_back(std::move(table));
  }

  metrics.kl_mean.assign(K, 0.0);
  metrics.kl_max.assign(K, 0.0);
  for (int i = 0; i < K; ++i) {
    metrics.kl_mean[i] = steps > 0 ? kl_sum[i] / static_cast<double>(steps) : 0.0;
    metrics.kl_max[i] = kl_max[i];
  }
}

std::vector<int> Trainer::schedule_heads(const std::vector<double>& mean_bonus,
                                         const std::vector<int>& active_heads) {
  const int K = cfg_.k;
  std::vector<int> out;
  switch (schedule_mode_) {
    case harness::UpdateScheduleMode::kAllHeadsAllData:
    case harness::UpdateScheduleMode::kTop50PercentUncertain:
      for (int i = 0; i < K; ++i) out.push_back(i);
      break;
    case harness::UpdateScheduleMode::kActiveOnly: {
      std::vector<std::uint8_t> seen(K, 0);
      for (int k : active_heads) seen[k] = 1;
      for (int i = 0; i < K; ++i)
        if (seen[i]) out.push_back(i);
      break;
    }
    case harness::UpdateScheduleMode::kMostUncertainOnly: {
      int best = 0;
      for (int i = 1; i < K; ++i)
        if (mean_bonus[i] > mean_bonus[best]) best = i;
      out.push_back(best);
      break;
    }
    case harness::UpdateScheduleMode::kRandomByUncertainty: {
      double total = 0.0;
      for (double b : mean_bonus) total += b;
      if (total <= 0.0) {
        out.push_back(rng_.index(K));
        break;
      }
      const double u = rng_.uniform01() * total;
      double acc = 0.0;
      int pick = K - 1;
      for (int i = 0; i < K; ++i) {
        acc += mean_bonus[i];
        if (u < acc) {
          pick = i;
          break;
        }
      }
      out.push_back(pick);
      break;
    }
  }
  return out;
}

GradPresence Trainer::snapshot_presence() const {
  GradPresence p;
  p.discriminator = any_grad(shared_.discriminator().parameters());
  p.encoder = any_grad(shared_.encoder().parameters());
  p.prior = any_grad(shared_.prior().parameters());
  p.generator.resize(cfg_.k);
  p.policy.resize(cfg_.k);
  for (int i = 0; i < cfg_.k; ++i) {
    p.generator[i] = any_grad(heads_[i].generator().parameters()) ? 1 : 0;
    p.policy[i] = any_grad(heads_[i].policy().net().parameters()) ? 1 : 0;
  }
  return p;
}

void Trainer::zero_all_grads() {
  auto zero = [](const std::vector<diff::Tensor>& params) {
    for (auto p : params) p.zero_grad();
  };
  zero(shared_.discriminator().parameters());
  zero(shared_.encoder().parameters());
  zero(shared_.prior().parameters());
  for (auto& h : heads_) {
    zero(h.generator().parameters());
    zero(h.target_generator().parameters());
    zero(h.policy().net().parameters());
  }
}

void Trainer::update_stage(const TrajectoryBatch& batch, const std::vector<AdvantageTable>& tables,
                           IterationMetrics& metrics) {
  const int K = cfg_.k;
  const double prog = progress();
  const double clip = diff::LinearSchedule{cfg_.clip_start, cfg_.clip_end}.value(prog);
  metrics.clip = clip;
  metrics.lr = diff::LinearSchedule{cfg_.lr_start, cfg_.lr_end}.value(prog);

  struct Ref {
    int seg;
    int t;
  };
  std::vector<Ref> refs;
  for (int si = 0; si < static_cast<int>(batch.segments.size()); ++si) {
    for (int t = 0; t < static_cast<int>(batch.segments[si].length()); ++t)
      refs.push_back({si, t});
  }
  if (refs.empty()) return;

  // Head-update schedule for this iteration.
  std::vector<double> mean_bonus(K, 0.0);
  for (const auto& table : tables)
    for (int i = 0; i < K; ++i)
      for (double b : table.bonus[i]) mean_bonus[i] += b;
  for (auto& b : mean_bonus) b /= static_cast<double>(refs.size());
  std::vector<int> active_heads;
  for (const auto& seg : batch.segments) active_heads.push_back(seg.active_head);
  const auto update_set = schedule_heads(mean_bonus, active_heads);
  std::vector<std::uint8_t> head_updates(K, 0);
  for (int h : update_set) head_updates[h] = 1;

  // Per-head top-50% sample masks over the whole batch, by bonus.
  std::vector<std::vector<double>> top50_mask;
  if (schedule_mode_ == harness::UpdateScheduleMode::kTop50PercentUncertain) {
    top50_mask.assign(K, std::vector<double>(refs.size(), 0.0));
    for (int i = 0; i < K; ++i) {
      std::vector<std::size_t> order(refs.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return tables[refs[a].seg].bonus[i][refs[a].t] > tables[refs[b].seg].bonus[i][refs[b].t];
      });
      const std::size_t keep = (refs.size() + 1) / 2;
      for (std::size_t r = 0; r < keep; ++r) top50_mask[i][order[r]] = 1.0;
    }
  }

  double disc_sum = 0.0, ep_sum = 0.0;
  std::vector<double> gen_sum(K, 0.0), pol_sum(K, 0.0);
  int minibatches = 0;
  std::vector<int> gen_counts(K, 0), pol_counts(K, 0);
  last_presence_ = UpdatePresence{};
  last_presence_.generator_phase.resize(K);
  last_presence_.policy_phase.resize(K);

  for (int epoch = 0; epoch < cfg_.update_epochs; ++epoch) {
    // Fisher-Yates shuffle driven by the trainer stream.
    std::vector<std::size_t> order(refs.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng_.below(i));
      std::swap(order[i - 1], order[j]);
    }

    for (std::size_t start = 0; start < order.size(); start += cfg_.minibatch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg_.minibatch_size);
      const std::size_t B = stop - start;
      retdist::UpdateBatch ub;
      ub.states.reserve(B);
      ub.head_targets.assign(K, {});
      ub.data_x.reserve(B);
      std::vector<int> actions(B);
      std::vector<double> behaviour_logp(B);
      std::vector<std::vector<double>> adv(K, std::vector<double>(B));
      std::vector<std::vector<double>> masks(K);
      for (int i = 0; i < K; ++i) ub.head_targets[i].reserve(B);
      if (!top50_mask.empty())
        for (int i = 0; i < K; ++i) masks[i].resize(B);

      for (std::size_t b = 0; b < B; ++b) {
        const auto ref = refs[order[start + b]];
        const auto& seg = batch.segments[ref.seg];
        const auto& table = tables[ref.seg];
        ub.states.push_back(seg.states[ref.t]);
        const double xk = table.bellman_target[seg.active_head][ref.t];
        ub.data_x.push_back(xk);
        for (int i = 0; i < K; ++i) {
          ub.head_targets[i].push_back(cfg_.shared_bellman_targets
                                           ? xk
                                           : table.bellman_target[i][ref.t]);
          adv[i][b] = table.augmented_advantage[i][ref.t];
          if (!top50_mask.empty()) masks[i][b] = top50_mask[i][order[start + b]];
        }
        actions[b] = seg.actions[ref.t];
        behaviour_logp[b] = seg.logp[seg.active_head][ref.t];
      }

      retdist::VaeForward fwd;
      {
        retdist::OpSplit split;
        fwd = retdist::prepare_update_batch(shared_, heads_, ub, rng_, &split);
        ops_shared_cumulative_ += split.shared;
        ops_per_head_cumulative_ += split.per_head;
      }
      auto states_t = fwd.states;

      // Discriminator ascent (psi only).
      {
        const auto mark = diff::mac_count();
        zero_all_grads();
        auto objective = retdist::discriminator_loss(shared_, fwd);
        ensure_finite(objective.item(), "discriminator objective", iteration_);
        disc_sum += objective.item();
        diff::neg(objective).backward();
        last_presence_.discriminator_phase = snapshot_presence();
        opt_disc_.step(shared_.discriminator().parameters(), prog);
        ops_shared_cumulative_ += diff::mac_count() - mark;
      }

      // Encoder + prior ascent (phi and prior theta; discriminator frozen).
      {
        const auto mark = diff::mac_count();
        zero_all_grads();
        auto objective = retdist::encoder_prior_loss(shared_, fwd);
        ensure_finite(objective.item(), "encoder/prior objective", iteration_);
        ep_sum += objective.item();
        diff::neg(objective).backward();
        last_presence_.encoder_prior_phase = snapshot_presence();
        std::vector<diff::Tensor> ep = shared_.encoder().parameters();
        ep.insert(ep.end(), shared_.prior().parameters().begin(),
                  shared_.prior().parameters().end());
        opt_encoder_prior_.step(ep, prog);
        ops_shared_cumulative_ += diff::mac_count() - mark;
      }

      // Per-head generator descent on its own Bellman target.
      for (int i = 0; i < K; ++i) {
        if (!head_updates[i]) continue;
        const std::vector<double>* mask = top50_mask.empty() ? nullptr : &masks[i];
        if (mask != nullptr) {
          double msum = 0.0;
          for (double v : *mask) msum += v;
          if (msum == 0.0) continue;
        }
        const auto mark = diff::mac_count();
        zero_all_grads();
        auto mse = retdist::generator_loss(heads_[i], fwd, i, mask);
        ensure_finite(mse.item(), "generator loss", iteration_);
        gen_sum[i] += mse.item();
        gen_counts[i] += 1;
        diff::scale(mse, cfg_.value_loss_weight).backward();
        last_presence_.generator_phase[i] = snapshot_presence();
        opt_generator_[i].step(heads_[i].generator().parameters(), prog);
        ops_per_head_cumulative_ += diff::mac_count() - mark;
      }

      // Per-head policy ascent: clipped PPO surrogate (or the raw surrogate)
      // against the stored behaviour log-probs, plus entropy bonus.
      for (int i = 0; i < K; ++i) {
        if (!head_updates[i]) continue;
        const std::vector<double>* mask = top50_mask.empty() ? nullptr : &masks[i];
        if (mask != nullptr) {
          double msum = 0.0;
          for (double v : *mask) msum += v;
          if (msum == 0.0) continue;
        }
        const auto mark = diff::mac_count();
        zero_all_grads();
        auto logp_new = heads_[i].policy().logp_batch(states_t, actions);
        auto per_sample =
            ppo_surrogate(logp_new, behaviour_logp, adv[i], clip, cfg_.raw_surrogate);
        const std::vector<double> empty_mask;
        const auto& mask_ref = mask ? *mask : empty_mask;
        auto surrogate = batch_mean(per_sample, mask_ref);
        auto entropy = batch_mean(heads_[i].policy().entropy_batch(states_t), mask_ref);
        auto objective = diff::add(surrogate, diff::scale(entropy, cfg_.entropy_coef));
        ensure_finite(objective.item(), "policy objective", iteration_);
        pol_sum[i] += objective.item();
        pol_counts[i] += 1;
        diff::neg(objective).backward();
        last_presence_.policy_phase[i] = snapshot_presence();
        opt_policy_[i].step(heads_[i].policy().net().parameters(), prog);
        ops_per_head_cumulative_ += diff::mac_count() - mark;
      }

      ++minibatches;
    }
  }

  metrics.discriminator_loss = minibatches ? disc_sum / minibatches : 0.0;
  metrics.encoder_prior_loss = minibatches ? ep_sum / minibatches : 0.0;
  metrics.generator_loss.assign(K, 0.0);
  metrics.policy_loss.assign(K, 0.0);
  for (int i = 0; i < K; ++i) {
    if (gen_counts[i]) metrics.generator_loss[i] = gen_sum[i] / gen_counts[i];
    if (pol_counts[i]) metrics.policy_loss[i] = pol_sum[i] / pol_counts[i];
  }
}

IterationMetrics Trainer::train_iteration() {
  IterationMetrics metrics;
  const auto iteration_mark = diff::mac_count();

  last_batch_ = TrajectoryBatch{};
  rollout_stage(last_batch_, metrics);
  estimation_stage(last_batch_, last_tables_, metrics);
  update_stage(last_batch_, last_tables_, metrics);

  // Periodic hard sync of the frozen target generators.
  ++iteration_;
  if (iteration_ % cfg_.target_sync_period == 0) retdist::sync_targets(heads_);

  // Diversity instrumentation on the frozen probe set.
  {
    const auto mark = diff::mac_count();
    std::vector<const PolicyHead*> hs;
    for (const auto& h : heads_) hs.push_back(&h.policy());
    const auto rep = metrics::policy_diversity(hs, probe_states_);
    metrics.diversity_l1 = rep.mean_offdiag_l1;
    metrics.diversity_cosine = rep.mean_offdiag_cosine;
    metrics.cosine_matrix = rep.cosine;
    ops_per_head_cumulative_ += diff::mac_count() - mark;
  }

  metrics.iteration = iteration_;
  metrics.env_steps = env_steps_;
  metrics.ops_iteration = diff::mac_count() - iteration_mark;
  ops_cumulative_ += metrics.ops_iteration;
  metrics.ops_cumulative = ops_cumulative_;
  metrics.ops_shared_cumulative = ops_shared_cumulative_;
  metrics.ops_per_head_cumulative = ops_per_head_cumulative_;
  return metrics;
}

double Trainer::evaluate(int episodes, ActionSelection mode, std::uint64_t eval_seed,
                         std::vector<double>* returns) const {
  auto env = envs::make_env(cfg_.env, derive_seed(eval_seed, 777));
  Rng rng(derive_seed(eval_seed, 778));
  std::vector<const PolicyHead*> hs;
  for (const auto& h : heads_) hs.push_back(&h.policy());
  SelectionContext ctx;
  ctx.mode = mode;
  ctx.gaussian_mixture_mode = cfg_.gaussian_mixture_mode;
  double total = 0.0;
  if (returns) returns->clear();
  for (int e = 0; e < episodes; ++e) {
    auto obs = env->reset();
    double ret = 0.0;
    while (!env->done()) {
      const int action = select_action_discrete(hs, obs, ctx, rng);
      const auto tr = env->step(action);
      ret += tr.reward;
      obs = tr.next_state;
    }
    total += ret;
    if (returns) returns->push_back(ret);
  }
  return total / static_cast<double>(episodes);
}

void Trainer::serialize(std::ostream& os) const {
  namespace io = bop::binio;
  io::write_pod<std::uint32_t>(os, kTrainerBlobVersion);
  io::write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(iteration_));
  io::write_pod<std::uint64_t>(os, env_steps_);
  io::write_pod<std::uint64_t>(os, ops_cumulative_);
  io::write_pod<std::uint64_t>(os, ops_shared_cumulative_);
  io::write_pod<std::uint64_t>(os, ops_per_head_cumulative_);
  io::write_string(os, rng_.state());

  io::write_pod<std::uint64_t>(os, slots_.size());
  for (const auto& slot : slots_) {
    slot.env->save_state(os);
    io::write_doubles(os, slot.obs);
    io::write_pod<std::int32_t>(os, slot.active_head);
    io::write_pod<std::uint8_t>(os, slot.mid_episode ? 1 : 0);
    io::write_pod<double>(os, slot.episode_return);
    io::write_pod<std::int32_t>(os, slot.episode_len);
  }

  io::write_pod<std::uint64_t>(os, probe_states_.size());
  for (const auto& s : probe_states_) io::write_doubles(os, s);

  std::vector<diff::Tensor> tensors;
  auto push_all = [&tensors](const std::vector<diff::Tensor>& ps) {
    tensors.insert(tensors.end(), ps.begin(), ps.end());
  };
  push_all(shared_.prior().parameters());
  push_all(shared_.encoder().parameters());
  push_all(shared_.discriminator().parameters());
  for (const auto& h : heads_) {
    push_all(h.generator().parameters());
    push_all(h.target_generator().parameters());
    push_all(h.policy().net().parameters());
  }
  diff::write_tensors(os, tensors);

  auto write_adam = [&os](const diff::Adam& a) {
    namespace io2 = bop::binio;
    io2::write_pod<std::uint64_t>(os, a.step_count());
    io2::write_pod<std::uint64_t>(os, a.first_moments().size());
    for (const auto& m : a.first_moments()) io2::write_doubles(os, m);
    for (const auto& v : a.second_moments()) io2::write_doubles(os, v);
  };
  write_adam(opt_disc_);
  write_adam(opt_encoder_prior_);
  for (const auto& a : opt_generator_) write_adam(a);
  for (const auto& a : opt_policy_) write_adam(a);
}

void Trainer::deserialize(std::istream& is) {
  namespace io = bop::binio;
  const auto version = io::read_pod<std::uint32_t>(is);
  if (version != kTrainerBlobVersion)
    throw std::runtime_error("trainer blob: unsupported version");
  iteration_ = static_cast<int>(io::read_pod<std::uint64_t>(is));
  env_steps_ = io::read_pod<std::uint64_t>(is);
  ops_cumulative_ = io::read_pod<std::uint64_t>(is);
  ops_shared_cumulative_ = io::read_pod<std::uint64_t>(is);
  ops_per_head_cumulative_ = io::read_pod<std::uint64_t>(is);
  rng_.set_state(io::read_string(is));

  const auto nslots = io::read_pod<std::uint64_t>(is);
  if (nslots != slots_.size()) throw std::runtime_error("trainer blob: env count mismatch");
  for (auto& slot : slots_) {
    slot.env->load_state(is);
    slot.obs = io::read_doubles(is);
    slot.active_head = io::read_pod<std::int32_t>(is);
    slot.mid_episode = io::read_pod<std::uint8_t>(is) != 0;
    slot.episode_return = io::read_pod<double>(is);
    slot.episode_len = io::read_pod<std::int32_t>(is);
  }

  const auto nprobe = io::read_pod<std::uint64_t>(is);
  probe_states_.assign(nprobe, {});
  for (auto& s : probe_states_) s = io::read_doubles(is);

  std::vector<diff::Tensor> tensors;
  auto push_all = [&tensors](const std::vector<diff::Tensor>& ps) {
    tensors.insert(tensors.end(), ps.begin(), ps.end());
  };
  push_all(shared_.prior().parameters());
  push_all(shared_.encoder().parameters());
  push_all(shared_.discriminator().parameters());
  for (auto& h : heads_) {
    push_all(h.generator().parameters());
    push_all(h.target_generator().parameters());
    push_all(h.policy().net().parameters());
  }
  diff::load_tensor_values(is, tensors);

  auto read_adam = [&is](diff::Adam& a) {
    namespace io2 = bop::binio;
    a.set_step_count(io2::read_pod<std::uint64_t>(is));
    const auto n = io2::read_pod<std::uint64_t>(is);
    if (n != a.first_moments().size()) throw std::runtime_error("trainer blob: adam size mismatch");
    for (auto& m : a.first_moments()) m = io2::read_doubles(is);
    for (auto& v : a.second_moments()) v = io2::read_doubles(is);
  };
  read_adam(opt_disc_);
  read_adam(opt_encoder_prior_);
  for (auto& a : opt_generator_) read_adam(a);
  for (auto& a : opt_policy_) read_adam(a);
  ops_baseline_ = diff::mac_count();
}

}  // namespace bop::ensemble
