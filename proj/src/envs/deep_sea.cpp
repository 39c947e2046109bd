#include "bop/envs/deep_sea.hpp"

#include <istream>
#include <ostream>
#include <stdexcept>

#include "bop/common/rng.hpp"

namespace bop::envs {

DeepSea::DeepSea(int depth, std::uint64_t seed) : depth_(depth) {
  if (depth < 2) throw std::invalid_argument("DeepSea: depth must be >= 2");
  spec_.obs_dim = depth * depth;
  spec_.action_space = Discrete{2};
  spec_.max_steps = depth;
  spec_.seed = seed;
  flip_.resize(static_cast<std::size_t>(depth) * depth);
  Rng rng(seed);
  for (auto& f : flip_) f = static_cast<std::uint8_t>(rng.below(2));
}

std::vector<double> DeepSea::observation() const {
  std::vector<double> obs(spec_.obs_dim, 0.0);
  if (row_ < depth_) obs[static_cast<std::size_t>(row_) * depth_ + col_] = 1.0;
  return obs;
}

std::vector<double> DeepSea::reset() {
  row_ = 0;
  col_ = 0;
  done_ = false;
  return observation();
}

Transition DeepSea::step(int action) {
  if (done_) throw std::logic_error("DeepSea::step: episode is done");
  if (action < 0 || action > 1) throw std::invalid_argument("DeepSea::step: action out of range");
  Transition tr;
  tr.state = observation();
  tr.action = action;
  tr.t = row_;

  const bool right = (action ^ flip_[static_cast<std::size_t>(row_) * depth_ + col_]) == 1;
  double reward = 0.0;
  if (right) reward -= 0.01 / static_cast<double>(depth_);
  if (row_ == depth_ - 1 && col_ == depth_ - 1 && right) reward += 1.0;

  col_ += right ? 1 : -1;
  if (col_ < 0) col_ = 0;
  if (col_ > depth_ - 1) col_ = depth_ - 1;
  ++row_;
  if (row_ == depth_) done_ = true;

  tr.reward = reward;
  tr.next_state = observation();
  tr.done = done_;
  return tr;
}

int DeepSea::right_action(int row, int col) const {
  return 1 ^ flip_[static_cast<std::size_t>(row) * depth_ + col];
}

void DeepSea::save_state(std::ostream& os) const {
  os.write(reinterpret_cast<const char*>(&row_), sizeof(row_));
  os.write(reinterpret_cast<const char*>(&col_), sizeof(col_));
  const char d = done_ ? 1 : 0;
  os.write(&d, 1);
}

void DeepSea::load_state(std::istream& is) {
  is.read(reinterpret_cast<char*>(&row_), sizeof(row_));
  is.read(reinterpret_cast<char*>(&col_), sizeof(col_));
  char d = 0;
  is.read(&d, 1);
  done_ = d != 0;
  if (!is) throw std::runtime_error("DeepSea::load_state: truncated");
}

}  // namespace bop::envs
