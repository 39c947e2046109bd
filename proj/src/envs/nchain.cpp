#include "bop/envs/nchain.hpp"

#include <istream>
#include <ostream>
#include <stdexcept>

namespace bop::envs {

NChain::NChain(int length, std::uint64_t seed) : length_(length) {
  if (length < 3) throw std::invalid_argument("NChain: length must be >= 3");
  spec_.obs_dim = length;
  spec_.action_space = Discrete{2};
  spec_.max_steps = 2 * length;
  spec_.seed = seed;
}

std::vector<double> NChain::observation() const {
  std::vector<double> obs(spec_.obs_dim, 0.0);
  obs[state_] = 1.0;
  return obs;
}

std::vector<double> NChain::reset() {
  state_ = 0;
  t_ = 0;
  done_ = false;
  return observation();
}

Transition NChain::step(int action) {
  if (done_) throw std::logic_error("NChain::step: episode is done");
  if (action < 0 || action > 1) throw std::invalid_argument("NChain::step: action out of range");
  Transition tr;
  tr.state = observation();
  tr.action = action;
  tr.t = t_;

  double reward = 0.0;
  if (action == kForward) {
    if (state_ == length_ - 1) {
      reward = 10.0;
    } else {
      ++state_;
    }
  } else {
    reward = 0.1;
    state_ = 0;
  }

  ++t_;
  if (t_ == spec_.max_steps) done_ = true;
  tr.reward = reward;
  tr.next_state = observation();
  tr.done = done_;
  return tr;
}

void NChain::save_state(std::ostream& os) const {
  os.write(reinterpret_cast<const char*>(&state_), sizeof(state_));
  os.write(reinterpret_cast<const char*>(&t_), sizeof(t_));
  const char d = done_ ? 1 : 0;
  os.write(&d, 1);
}

void NChain::load_state(std::istream& is) {
  is.read(reinterpret_cast<char*>(&state_), sizeof(state_));
  is.read(reinterpret_cast<char*>(&t_), sizeof(t_));
  char d = 0;
  is.read(&d, 1);
  done_ = d != 0;
  if (!is) throw std::runtime_error("NChain::load_state: truncated");
}

}  // namespace bop::envs
