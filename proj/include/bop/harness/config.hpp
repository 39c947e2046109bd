#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace bop::harness {

enum class UpdateScheduleMode {
  kAllHeadsAllData,  // default
  kActiveOnly,
  kMostUncertainOnly,
  kRandomByUncertainty,
  kTop50PercentUncertain,
};

UpdateScheduleMode schedule_mode_from_string(const std::string& s);
std::string to_string(UpdateScheduleMode m);

// Every knob of a run. Parsed from flat `key = value` text with strict
// unknown-key rejection; serialization round-trips the values exactly.
struct RunConfig {
  std::string env;  // required, e.g. "deep_sea:10"
  int k = 3;
  double gamma = 0.99;
  double lambda = 0.95;
  int minibatch_size = 64;          // paper default 256
  int rollout_timesteps = 64;       // paper default 128
  int episodes_per_rollout = 2;     // paper default 4
  int num_envs = 4;                 // paper default 16
  double entropy_coef = 0.01;
  double value_loss_weight = 0.5;
  double lr_start = 2.5e-4;
  double lr_end = 0.0;
  double clip_start = 0.1;
  double clip_end = 0.0;
  double beta = 0.05;          // curiosity coefficient
  double curiosity_clip = 1.0;
  double rho_bar = 1.0;
  double c_bar = 1.0;
  int latent_dim = 8;
  int hidden_width = 64;
  std::string activation = "tanh";
  int target_sync_period = 8;
  std::string schedule_mode = "all";
  std::string action_selection_mode = "average-then-argmax";
  std::uint64_t seed = 1;
  std::uint64_t total_env_steps = 100000;
  int update_epochs = 1;
  std::uint64_t eval_interval_steps = 2000;  // paper default 20000
  int eval_episodes = 3;
  bool shared_bellman_targets = false;
  bool raw_surrogate = false;
  bool gaussian_mixture_mode = false;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;

  std::string to_text() const;  // canonical snapshot, including paper_default notes
  static RunConfig from_text(const std::string& text);
  static RunConfig from_file(const std::string& path);
  void apply_override(const std::string& key, const std::string& value);

  std::uint64_t hash() const;
};

}  // namespace bop::harness
