#pragma once

#include "bop/envs/env.hpp"

namespace bop::envs {

// N x N grid. The agent descends one row per step and chooses left/right;
// a per-cell action-flip mask (fixed by the seed) hides which raw action
// moves right. Moving right costs 0.01/N; the bottom-right cell pays +1,
// reachable only by moving right on every one of the N steps.
class DeepSea final : public Env {
 public:
  DeepSea(int depth, std::uint64_t seed);

  const EnvSpec& spec() const override { return spec_; }
  std::vector<double> reset() override;
  Transition step(int action) override;
  bool done() const override { return done_; }
  void save_state(std::ostream& os) const override;
  void load_state(std::istream& is) override;

  int depth() const { return depth_; }
  // Raw action that is effectively "right" at (row, col). Test-only insight;
  // the acting agent never sees it.
  int right_action(int row, int col) const;

 private:
  std::vector<double> observation() const;

  int depth_ = 0;
  EnvSpec spec_;
  std::vector<std::uint8_t> flip_;
  int row_ = 0;
  int col_ = 0;
  bool done_ = true;
};

}  // namespace bop::envs
