#pragma once

#include "bop/envs/env.hpp"

namespace bop::envs {

// Gridworld with walls on cell edges. The seeded constructor carves a perfect
// maze with a recursive backtracker; `from_walls` accepts an explicit open-edge
// mask for crafted fixtures (including unreachable goals). Reward is +1 on
// entering the goal, which ends the episode. Horizon 4*width*height. Moves
// into walls keep the agent in place.
class SparseMaze final : public Env {
 public:
  static constexpr int kUp = 0;
  static constexpr int kDown = 1;
  static constexpr int kLeft = 2;
  static constexpr int kRight = 3;

  SparseMaze(int width, int height, std::uint64_t seed);
  static SparseMaze from_walls(int width, int height, std::vector<std::uint8_t> open_mask,
                               int start_cell, int goal_cell);

  const EnvSpec& spec() const override { return spec_; }
  std::vector<double> reset() override;
  Transition step(int action) override;
  bool done() const override { return done_; }
  void save_state(std::ostream& os) const override;
  void load_state(std::istream& is) override;

  int width() const { return width_; }
  int height() const { return height_; }
  int start_cell() const { return start_; }
  int goal_cell() const { return goal_; }
  bool edge_open(int cell, int dir) const { return (open_[cell] >> dir) & 1; }

 private:
  SparseMaze() = default;
  void finish_spec(std::uint64_t seed);
  std::vector<double> observation() const;
  int neighbour(int cell, int dir) const;  // -1 when off-grid

  int width_ = 0;
  int height_ = 0;
  EnvSpec spec_;
  std::vector<std::uint8_t> open_;  // bit d set => edge towards dir d open
  int start_ = 0;
  int goal_ = 0;
  int cell_ = 0;
  int t_ = 0;
  bool done_ = true;
};

}  // namespace bop::envs
