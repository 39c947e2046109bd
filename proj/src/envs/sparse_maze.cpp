#include "bop/envs/sparse_maze.hpp"

#include <istream>
#include <ostream>
#include <stdexcept>

#include "bop/common/rng.hpp"

namespace bop::envs {

namespace {
constexpr int kOpposite[4] = {SparseMaze::kDown, SparseMaze::kUp, SparseMaze::kRight,
                              SparseMaze::kLeft};
}

int SparseMaze::neighbour(int cell, int dir) const {
  const int r = cell / width_;
  const int c = cell % width_;
  switch (dir) {
    case kUp:
      return r > 0 ? cell - width_ : -1;
    case kDown:
      return r < height_ - 1 ? cell + width_ : -1;
    case kLeft:
      return c > 0 ? cell - 1 : -1;
    case kRight:
      return c < width_ - 1 ? cell + 1 : -1;
    default:
      return -1;
  }
}

void SparseMaze::finish_spec(std::uint64_t seed) {
  spec_.obs_dim = width_ * height_;
  spec_.action_space = Discrete{4};
  spec_.max_steps = 4 * width_ * height_;
  spec_.seed = seed;
}

SparseMaze::SparseMaze(int width, int height, std::uint64_t seed) {
  if (width < 4 || height < 4)
    throw std::invalid_argument("SparseMaze: width and height must be >= 4");
  width_ = width;
  height_ = height;
  open_.assign(static_cast<std::size_t>(width) * height, 0);
  start_ = 0;
  goal_ = width * height - 1;
  finish_spec(seed);

  // Recursive backtracker over cells; yields a perfect (fully connected) maze.
  Rng rng(seed);
  std::vector<std::uint8_t> visited(open_.size(), 0);
  std::vector<int> stack;
  stack.push_back(start_);
  visited[start_] = 1;
  while (!stack.empty()) {
    const int cell = stack.back();
    int dirs[4] = {0, 1, 2, 3};
    for (int i = 3; i > 0; --i) std::swap(dirs[i], dirs[rng.index(i + 1)]);
    bool advanced = false;
    for (int di = 0; di < 4; ++di) {
      const int d = dirs[di];
      const int nb = neighbour(cell, d);
      if (nb >= 0 && !visited[nb]) {
        open_[cell] |= static_cast<std::uint8_t>(1 << d);
        open_[nb] |= static_cast<std::uint8_t>(1 << kOpposite[d]);
        visited[nb] = 1;
        stack.push_back(nb);
        advanced = true;
        break;
      }
    }
    if (!advanced) stack.pop_back();
  }
}

SparseMaze SparseMaze::from_walls(int width, int height, std::vector<std::uint8_t> open_mask,
                                  int start_cell, int goal_cell) {
  if (width < 2 || height < 2) throw std::invalid_argument("SparseMaze: grid too small");
  if (open_mask.size() != static_cast<std::size_t>(width) * height)
    throw std::invalid_argument("SparseMaze: mask size mismatch");
  SparseMaze m;
  m.width_ = width;
  m.height_ = height;
  m.open_ = std::move(open_mask);
  m.start_ = start_cell;
  m.goal_ = goal_cell;
  m.finish_spec(0);
  return m;
}

std::vector<double> SparseMaze::observation() const {
  std::vector<double> obs(spec_.obs_dim, 0.0);
  obs[cell_] = 1.0;
  return obs;
}

std::vector<double> SparseMaze::reset() {
  cell_ = start_;
  t_ = 0;
  done_ = false;
  return observation();
}

Transition SparseMaze::step(int action) {
  if (done_) throw std::logic_error("SparseMaze::step: episode is done");
  if (action < 0 || action > 3)
    throw std::invalid_argument("SparseMaze::step: action out of range");
  Transition tr;
  tr.state = observation();
  tr.action = action;
  tr.t = t_;

  if (edge_open(cell_, action)) {
    const int nb = neighbour(cell_, action);
    if (nb >= 0) cell_ = nb;
  }
  double reward = 0.0;
  if (cell_ == goal_) {
    reward = 1.0;
    done_ = true;
  }
  ++t_;
  if (t_ == spec_.max_steps) done_ = true;

  tr.reward = reward;
  tr.next_state = observation();
  tr.done = done_;
  return tr;
}

void SparseMaze::save_state(std::ostream& os) const {
  os.write(reinterpret_cast<const char*>(&cell_), sizeof(cell_));
  os.write(reinterpret_cast<const char*>(&t_), sizeof(t_));
  const char d = done_ ? 1 : 0;
  os.write(&d, 1);
}

void SparseMaze::load_state(std::istream& is) {
  is.read(reinterpret_cast<char*>(&cell_), sizeof(cell_));
  is.read(reinterpret_cast<char*>(&t_), sizeof(t_));
  char d = 0;
  is.read(&d, 1);
  done_ = d != 0;
  if (!is) throw std::runtime_error("SparseMaze::load_state: truncated");
}

}  // namespace bop::envs
