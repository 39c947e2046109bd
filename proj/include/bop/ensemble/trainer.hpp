#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include "bop/common/rng.hpp"
#include "bop/diff/adam.hpp"
#include "bop/ensemble/policy.hpp"
#include "bop/ensemble/trajectory.hpp"
#include "bop/envs/env.hpp"
#include "bop/harness/config.hpp"
#include "bop/metrics/metrics.hpp"
#include "bop/retdist/retdist.hpp"

namespace bop::ensemble {

int select_active_head(Rng& rng, int num_heads);  // uniform on {0..K-1}

struct IterationMetrics {
  int iteration = 0;
  std::uint64_t env_steps = 0;
  std::vector<double> head_mean_return;  // NaN for heads with no finished episode
  std::vector<int> head_episode_counts;
  std::vector<int> active_head_histogram;  // episodes started per head
  std::vector<double> kl_mean;
  std::vector<double> kl_max;
  double diversity_l1 = 0.0;
  double diversity_cosine = 1.0;
  std::vector<double> cosine_matrix;  // K*K
  double discriminator_loss = 0.0;    // ascent objective value
  double encoder_prior_loss = 0.0;
  std::vector<double> generator_loss;  // per head, descent objective
  std::vector<double> policy_loss;     // per head, ascent objective
  double lr = 0.0;
  double clip = 0.0;
  std::uint64_t ops_iteration = 0;
  std::uint64_t ops_cumulative = 0;
  std::uint64_t ops_shared_cumulative = 0;
  std::uint64_t ops_per_head_cumulative = 0;
};

// Which parameter groups received gradients during one backward pass.
struct GradPresence {
  bool discriminator = false;
  bool encoder = false;
  bool prior = false;
  std::vector<std::uint8_t> generator;  // per head
  std::vector<std::uint8_t> policy;     // per head
};

// Presence snapshots of the most recent update stage, one per loss phase.
struct UpdatePresence {
  GradPresence discriminator_phase;
  GradPresence encoder_prior_phase;
  std::vector<GradPresence> generator_phase;  // indexed by head
  std::vector<GradPresence> policy_phase;
};

// The Bag-of-Policies outer loop: roll-out, estimation, update. One instance
// owns its environments, heads, shared networks, optimizers and RNG stream;
// everything serializes for bit-exact resume.
class Trainer {
 public:
  explicit Trainer(const harness::RunConfig& cfg);

  IterationMetrics train_iteration();

  std::uint64_t env_steps() const { return env_steps_; }
  int iteration() const { return iteration_; }
  const harness::RunConfig& config() const { return cfg_; }

  retdist::SharedVae& shared() { return shared_; }
  std::vector<retdist::Head>& heads() { return heads_; }
  const std::vector<retdist::Head>& heads() const { return heads_; }
  const std::vector<std::vector<double>>& probe_states() const { return probe_states_; }

  // Introspection for tests and metrics tooling.
  const TrajectoryBatch& last_batch() const { return last_batch_; }
  const std::vector<AdvantageTable>& last_tables() const { return last_tables_; }
  const UpdatePresence& last_presence() const { return last_presence_; }

  // Set of heads the current schedule mode would update, given mean bonuses.
  std::vector<int> schedule_heads(const std::vector<double>& mean_bonus,
                                  const std::vector<int>& active_heads);

  // Greedy evaluation on a fresh environment; does not advance training state.
  double evaluate(int episodes, ActionSelection mode, std::uint64_t eval_seed,
                  std::vector<double>* returns = nullptr) const;

  void serialize(std::ostream& os) const;
  void deserialize(std::istream& is);

 private:
  struct EnvSlot {
    std::unique_ptr<envs::Env> env;
    std::vector<double> obs;
    int active_head = 0;
    bool mid_episode = false;
    double episode_return = 0.0;
    int episode_len = 0;
  };

  void collect_probe_states();
  void rollout_stage(TrajectoryBatch& batch, IterationMetrics& metrics);
  void estimation_stage(const TrajectoryBatch& batch, std::vector<AdvantageTable>& tables,
                        IterationMetrics& metrics);
  void update_stage(const TrajectoryBatch& batch, const std::vector<AdvantageTable>& tables,
                    IterationMetrics& metrics);
  GradPresence snapshot_presence() const;
  void zero_all_grads();
  double progress() const;

  harness::RunConfig cfg_;
  harness::UpdateScheduleMode schedule_mode_ = harness::UpdateScheduleMode::kAllHeadsAllData;
  Rng rng_;
  std::vector<EnvSlot> slots_;
  retdist::SharedVae shared_;
  std::vector<retdist::Head> heads_;
  diff::Adam opt_disc_;
  diff::Adam opt_encoder_prior_;
  std::vector<diff::Adam> opt_generator_;
  std::vector<diff::Adam> opt_policy_;
  std::vector<std::vector<double>> probe_states_;

  int iteration_ = 0;
  std::uint64_t env_steps_ = 0;
  std::uint64_t ops_baseline_ = 0;          // mac_count() at construction/restore
  std::uint64_t ops_cumulative_ = 0;        // within this run
  std::uint64_t ops_shared_cumulative_ = 0;
  std::uint64_t ops_per_head_cumulative_ = 0;

  TrajectoryBatch last_batch_;
  std::vector<AdvantageTable> last_tables_;
  UpdatePresence last_presence_;
};

}  // namespace bop::ensemble
