#include "bop/harness/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "bop/diff/serialize.hpp"
#include "bop/envs/env.hpp"
#include "bop/ensemble/policy.hpp"

namespace bop::harness {

UpdateScheduleMode schedule_mode_from_string(const std::string& s) {
  if (s == "all") return UpdateScheduleMode::kAllHeadsAllData;
  if (s == "active-only") return UpdateScheduleMode::kActiveOnly;
  if (s == "most-uncertain") return UpdateScheduleMode::kMostUncertainOnly;
  if (s == "random-by-uncertainty") return UpdateScheduleMode::kRandomByUncertainty;
  if (s == "top-50-uncertain") return UpdateScheduleMode::kTop50PercentUncertain;
  throw std::invalid_argument("schedule_mode: unknown mode '" + s + "'");
}

std::string to_string(UpdateScheduleMode m) {
  switch (m) {
    case UpdateScheduleMode::kAllHeadsAllData:
      return "all";
    case UpdateScheduleMode::kActiveOnly:
      return "active-only";
    case UpdateScheduleMode::kMostUncertainOnly:
      return "most-uncertain";
    case UpdateScheduleMode::kRandomByUncertainty:
      return "random-by-uncertainty";
    case UpdateScheduleMode::kTop50PercentUncertain:
      return "top-50-uncertain";
  }
  return "?";
}

namespace {

struct FieldError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

template <typename T>
std::string fmt(const T& v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string fmt(bool v) { return v ? "true" : "false"; }

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return d;
  } catch (...) {
    throw FieldError("config field '" + key + "': expected a number, got '" + v + "'");
  }
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long d = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return static_cast<int>(d);
  } catch (...) {
    throw FieldError("config field '" + key + "': expected an integer, got '" + v + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const unsigned long long d = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return static_cast<std::uint64_t>(d);
  } catch (...) {
    throw FieldError("config field '" + key + "': expected an unsigned integer, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw FieldError("config field '" + key + "': expected true/false, got '" + v + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void RunConfig::apply_override(const std::string& key, const std::string& value) {
  if (key == "env") {
    env = value;
  } else if (key == "k") {
    k = parse_int(key, value);
  } else if (key == "gamma") {
    gamma = parse_double(key, value);
  } else if (key == "lambda") {
    lambda = parse_double(key, value);
  } else if (key == "minibatch_size") {
    minibatch_size = parse_int(key, value);
  } else if (key == "rollout_timesteps") {
    rollout_timesteps = parse_int(key, value);
  } else if (key == "episodes_per_rollout") {
    episodes_per_rollout = parse_int(key, value);
  } else if (key == "num_envs") {
    num_envs = parse_int(key, value);
  } else if (key == "entropy_coef") {
    entropy_coef = parse_double(key, value);
  } else if (key == "value_loss_weight") {
    value_loss_weight = parse_double(key, value);
  } else if (key == "lr_start") {
    lr_start = parse_double(key, value);
  } else if (key == "lr_end") {
    lr_end = parse_double(key, value);
  } else if (key == "clip_start") {
    clip_start = parse_double(key, value);
  } else if (key == "clip_end") {
    clip_end = parse_double(key, value);
  } else if (key == "beta") {
    beta = parse_double(key, value);
  } else if (key == "curiosity_clip") {
    curiosity_clip = parse_double(key, value);
  } else if (key == "rho_bar") {
    rho_bar = parse_double(key, value);
  } else if (key == "c_bar") {
    c_bar = parse_double(key, value);
  } else if (key == "latent_dim") {
    latent_dim = parse_int(key, value);
  } else if (key == "hidden_width") {
    hidden_width = parse_int(key, value);
  } else if (key == "activation") {
    activation = value;
  } else if (key == "target_sync_period") {
    target_sync_period = parse_int(key, value);
  } else if (key == "schedule_mode") {
    schedule_mode = value;
  } else if (key == "action_selection_mode") {
    action_selection_mode = value;
  } else if (key == "seed") {
    seed = parse_u64(key, value);
  } else if (key == "total_env_steps") {
    total_env_steps = parse_u64(key, value);
  } else if (key == "update_epochs") {
    update_epochs = parse_int(key, value);
  } else if (key == "eval_interval_steps") {
    eval_interval_steps = parse_u64(key, value);
  } else if (key == "eval_episodes") {
    eval_episodes = parse_int(key, value);
  } else if (key == "shared_bellman_targets") {
    shared_bellman_targets = parse_bool(key, value);
  } else if (key == "raw_surrogate") {
    raw_surrogate = parse_bool(key, value);
  } else if (key == "gaussian_mixture_mode") {
    gaussian_mixture_mode = parse_bool(key, value);
  } else {
    throw FieldError("config: unknown key '" + key + "'");
  }
}

void RunConfig::validate() const {
  if (env.empty()) throw FieldError("config field 'env': missing (environment name is required)");
  envs::make_env(env, seed);  // throws with a field-specific message on bad names
  if (k < 1) throw FieldError("config field 'k': must be >= 1");
  if (gamma < 0.0 || gamma > 1.0) throw FieldError("config field 'gamma': must be in [0, 1]");
  if (lambda < 0.0 || lambda > 1.0) throw FieldError("config field 'lambda': must be in [0, 1]");
  if (minibatch_size < 1) throw FieldError("config field 'minibatch_size': must be >= 1");
  if (rollout_timesteps < 1) throw FieldError("config field 'rollout_timesteps': must be >= 1");
  if (episodes_per_rollout < 1)
    throw FieldError("config field 'episodes_per_rollout': must be >= 1");
  if (num_envs < 1) throw FieldError("config field 'num_envs': must be >= 1");
  if (entropy_coef < 0.0) throw FieldError("config field 'entropy_coef': must be >= 0");
  if (value_loss_weight < 0.0) throw FieldError("config field 'value_loss_weight': must be >= 0");
  if (lr_start < 0.0 || lr_end < 0.0) throw FieldError("config field 'lr_start/lr_end': must be >= 0");
  if (lr_end > lr_start)
    throw FieldError("config field 'lr_end': schedule must be nonincreasing (lr_end <= lr_start)");
  if (clip_start < 0.0 || clip_end < 0.0)
    throw FieldError("config field 'clip_start/clip_end': must be >= 0");
  if (clip_end > clip_start)
    throw FieldError("config field 'clip_end': schedule must be nonincreasing");
  if (beta < 0.0) throw FieldError("config field 'beta': must be >= 0");
  if (curiosity_clip < 0.0) throw FieldError("config field 'curiosity_clip': must be >= 0");
  if (rho_bar <= 0.0) throw FieldError("config field 'rho_bar': must be > 0");
  if (c_bar <= 0.0) throw FieldError("config field 'c_bar': must be > 0");
  if (latent_dim < 1) throw FieldError("config field 'latent_dim': must be >= 1");
  if (hidden_width < 1) throw FieldError("config field 'hidden_width': must be >= 1");
  if (activation != "tanh" && activation != "relu")
    throw FieldError("config field 'activation': must be tanh or relu");
  if (target_sync_period < 1) throw FieldError("config field 'target_sync_period': must be >= 1");
  schedule_mode_from_string(schedule_mode);
  ensemble::action_selection_from_string(action_selection_mode);
  if (total_env_steps < 1) throw FieldError("config field 'total_env_steps': must be >= 1");
  if (update_epochs < 1) throw FieldError("config field 'update_epochs': must be >= 1");
  if (eval_interval_steps < 1) throw FieldError("config field 'eval_interval_steps': must be >= 1");
  if (eval_episodes < 1) throw FieldError("config field 'eval_episodes': must be >= 1");
}

std::string RunConfig::to_text() const {
  std::ostringstream os;
  os << "env = " << env << "\n";
  os << "k = " << k << "\n";
  os << "gamma = " << fmt(gamma) << "\n";
  os << "lambda = " << fmt(lambda) << "\n";
  os << "minibatch_size = " << minibatch_size << "  # paper_default 256\n";
  os << "rollout_timesteps = " << rollout_timesteps << "  # paper_default 128\n";
  os << "episodes_per_rollout = " << episodes_per_rollout << "  # paper_default 4\n";
  os << "num_envs = " << num_envs << "  # paper_default 16\n";
  os << "entropy_coef = " << fmt(entropy_coef) << "\n";
  os << "value_loss_weight = " << fmt(value_loss_weight) << "\n";
  os << "lr_start = " << fmt(lr_start) << "\n";
  os << "lr_end = " << fmt(lr_end) << "\n";
  os << "clip_start = " << fmt(clip_start) << "\n";
  os << "clip_end = " << fmt(clip_end) << "\n";
  os << "beta = " << fmt(beta) << "\n";
  os << "curiosity_clip = " << fmt(curiosity_clip) << "\n";
  os << "rho_bar = " << fmt(rho_bar) << "\n";
  os << "c_bar = " << fmt(c_bar) << "\n";
  os << "latent_dim = " << latent_dim << "\n";
  os << "hidden_width = " << hidden_width << "\n";
  os << "activation = " << activation << "\n";
  os << "target_sync_period = " << target_sync_period << "\n";
  os << "schedule_mode = " << schedule_mode << "\n";
  os << "action_selection_mode = " << action_selection_mode << "\n";
  os << "seed = " << seed << "\n";
  os << "total_env_steps = " << total_env_steps << "\n";
  os << "update_epochs = " << update_epochs << "\n";
  os << "eval_interval_steps = " << eval_interval_steps << "  # paper_default 20000\n";
  os << "eval_episodes = " << eval_episodes << "\n";
  os << "shared_bellman_targets = " << fmt(shared_bellman_targets) << "\n";
  os << "raw_surrogate = " << fmt(raw_surrogate) << "\n";
  os << "gaussian_mixture_mode = " << fmt(gaussian_mixture_mode) << "\n";
  return os.str();
}

RunConfig RunConfig::from_text(const std::string& text) {
  RunConfig cfg;
  cfg.env.clear();
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FieldError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    cfg.apply_override(key, value);
  }
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("config: cannot open '" + path + "'");
  std::ostringstream os;
  os << f.rdbuf();
  return from_text(os.str());
}

std::uint64_t RunConfig::hash() const {
  const std::string text = to_text();
  return diff::fnv1a64(text.data(), text.size());
}

}  // namespace bop::harness
