#pragma once

#include "bop/envs/env.hpp"

namespace bop::envs {

// Chain of N states. Action 0 ("forward") moves right with reward 0 and pays
// +10 once the final state is reached (self-loop there); action 1
// ("backward") teleports to the start for +0.1. Horizon 2N.
class NChain final : public Env {
 public:
  NChain(int length, std::uint64_t seed);

  const EnvSpec& spec() const override { return spec_; }
  std::vector<double> reset() override;
  Transition step(int action) override;
  bool done() const override { return done_; }
  void save_state(std::ostream& os) const override;
  void load_state(std::istream& is) override;

  static constexpr int kForward = 0;
  static constexpr int kBackward = 1;

 private:
  std::vector<double> observation() const;

  int length_ = 0;
  EnvSpec spec_;
  int state_ = 0;
  int t_ = 0;
  bool done_ = true;
};

}  // namespace bop::envs
