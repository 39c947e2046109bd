#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace bop::envs {

struct Discrete {
  int n = 0;
};

struct Continuous {
  int dim = 0;
  std::vector<std::pair<double, double>> bounds;
};

using ActionSpace = std::variant<Discrete, Continuous>;

struct EnvSpec {
  int obs_dim = 0;
  ActionSpace action_space;
  int max_steps = 0;
  std::uint64_t seed = 0;
};

inline int discrete_actions(const EnvSpec& spec) {
  return std::get<Discrete>(spec.action_space).n;
}

struct Transition {
  std::vector<double> state;
  int action = 0;
  double reward = 0.0;
  std::vector<double> next_state;
  bool done = false;
  int t = 0;
};

// Episodic environment. Dynamics are a deterministic function of
// (constructor seed, internal state, action sequence).
class Env {
 public:
  virtual ~Env() = default;
  virtual const EnvSpec& spec() const = 0;
  virtual std::vector<double> reset() = 0;
  virtual Transition step(int action) = 0;
  virtual bool done() const = 0;

  // Dynamic state only; static structure is rebuilt from (name, seed).
  virtual void save_state(std::ostream& os) const = 0;
  virtual void load_state(std::istream& is) = 0;
};

// Parses "deep_sea:10", "nchain:20", "maze:8x8".
std::unique_ptr<Env> make_env(const std::string& name, std::uint64_t seed);

}  // namespace bop::envs
