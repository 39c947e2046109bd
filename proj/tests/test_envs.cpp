#include <doctest.h>

#include <cmath>
#include <deque>
#include <queue>

#include "bop/common/rng.hpp"
#include "bop/envs/deep_sea.hpp"
#include "bop/envs/nchain.hpp"
#include "bop/envs/sparse_maze.hpp"
#include "bop/envs/vec_env.hpp"

using namespace bop;
using namespace bop::envs;

namespace {

double rollout_return(Env& env, const std::vector<int>& actions) {
  env.reset();
  double total = 0.0;
  for (int a : actions) {
    total += env.step(a).reward;
    if (env.done()) break;
  }
  return total;
}

// Finite-horizon undiscounted value iteration over (timestep, state).
double nchain_optimal_return(int n) {
  const int horizon = 2 * n;
  std::vector<std::vector<double>> value(horizon + 1, std::vector<double>(n, 0.0));
  for (int t = horizon - 1; t >= 0; --t) {
    for (int s = 0; s < n; ++s) {
      const double forward = (s == n - 1) ? 10.0 + value[t + 1][n - 1] : value[t + 1][s + 1];
      const double backward = 0.1 + value[t + 1][0];
      value[t][s] = std::max(forward, backward);
    }
  }
  return value[0][0];
}

int maze_neighbour(const SparseMaze& maze, int cell, int d) {
  const int w = maze.width();
  const int r = cell / w;
  const int c = cell % w;
  if (d == SparseMaze::kUp && r > 0) return cell - w;
  if (d == SparseMaze::kDown && r < maze.height() - 1) return cell + w;
  if (d == SparseMaze::kLeft && c > 0) return cell - 1;
  if (d == SparseMaze::kRight && c < w - 1) return cell + 1;
  return -1;
}

int bfs_shortest_path(const SparseMaze& maze) {
  const int n = maze.width() * maze.height();
  std::vector<int> dist(n, -1);
  std::queue<int> q;
  dist[maze.start_cell()] = 0;
  q.push(maze.start_cell());
  while (!q.empty()) {
    const int cell = q.front();
    q.pop();
    for (int d = 0; d < 4; ++d) {
      if (!maze.edge_open(cell, d)) continue;
      const int nb = maze_neighbour(maze, cell, d);
      if (nb >= 0 && dist[nb] < 0) {
        dist[nb] = dist[cell] + 1;
        q.push(nb);
      }
    }
  }
  return dist[maze.goal_cell()];
}

}  // namespace

TEST_CASE("deep sea: effectively-right policy earns 1 - 0.01 for any depth") {
  for (int n : {4, 6, 10}) {
    DeepSea env(n, 17);
    env.reset();
    double total = 0.0;
    for (int row = 0; row < n; ++row) {
      const int col = std::min(row, n - 1);  // all-right trajectory walks the diagonal
      total += env.step(env.right_action(row, col)).reward;
    }
    CHECK(env.done());
    CHECK(total == doctest::Approx(0.99).epsilon(1e-12));
  }
}

TEST_CASE("deep sea: effectively-left policy earns exactly zero") {
  DeepSea env(8, 5);
  env.reset();
  double total = 0.0;
  for (int row = 0; row < 8; ++row) total += env.step(1 - env.right_action(row, 0)).reward;
  CHECK(total == 0.0);
  CHECK(env.done());
}

TEST_CASE("deep sea: exact enumeration confirms 2^-N goal probability") {
  // All raw action sequences for N <= 12; exactly one reaches the treasure.
  for (int n : {6, 8}) {
    int successes = 0;
    const int sequences = 1 << n;
    for (int bits = 0; bits < sequences; ++bits) {
      DeepSea env(n, 23);
      env.reset();
      double total = 0.0;
      for (int t = 0; t < n; ++t) total += env.step((bits >> t) & 1).reward;
      if (total > 0.5) ++successes;
    }
    CHECK(successes == 1);
  }
}

TEST_CASE("deep sea: observation is a one-hot of (row, column)") {
  DeepSea env(5, 3);
  const auto obs = env.reset();
  REQUIRE(obs.size() == 25);
  double sum = 0.0;
  for (double v : obs) sum += v;
  CHECK(sum == 1.0);
  CHECK(obs[0] == 1.0);  // starts top-left
}

TEST_CASE("nchain: always-backward collects the myopic 0.1 per step") {
  for (int n : {3, 10}) {
    NChain env(n, 0);
    const std::vector<int> actions(2 * n, NChain::kBackward);
    CHECK(rollout_return(env, actions) == doctest::Approx(0.1 * 2 * n).epsilon(1e-12));
  }
}

TEST_CASE("nchain: value-iteration oracle matches the greedy forward rollout") {
  for (int n : {3, 5, 8}) {
    const double optimal = nchain_optimal_return(n);
    NChain env(n, 0);
    const std::vector<int> actions(2 * n, NChain::kForward);
    CHECK(rollout_return(env, actions) == doctest::Approx(optimal).epsilon(1e-12));
    CHECK(optimal == doctest::Approx(10.0 * (n + 1)).epsilon(1e-12));
  }
}

TEST_CASE("nchain: episode always terminates at exactly 2N steps") {
  NChain env(4, 0);
  env.reset();
  int steps = 0;
  while (!env.done()) {
    env.step(NChain::kBackward);
    ++steps;
  }
  CHECK(steps == 8);
  CHECK_THROWS_AS(env.step(0), std::logic_error);
}

TEST_CASE("maze: goal-adjacent start solves in one step") {
  // Two open cells side by side; everything else walled off.
  std::vector<std::uint8_t> open(16, 0);
  open[0] = 1 << SparseMaze::kRight;
  open[1] = 1 << SparseMaze::kLeft;
  auto env = SparseMaze::from_walls(4, 4, open, 0, 1);
  env.reset();
  const auto tr = env.step(SparseMaze::kRight);
  CHECK(tr.reward == 1.0);
  CHECK(tr.done);
}

TEST_CASE("maze: walled-off goal yields zero return forever") {
  std::vector<std::uint8_t> open(16, 0xF);
  open[15] = 0;
  open[14] &= static_cast<std::uint8_t>(~(1 << SparseMaze::kRight));
  open[11] &= static_cast<std::uint8_t>(~(1 << SparseMaze::kDown));
  auto env = SparseMaze::from_walls(4, 4, open, 0, 15);
  env.reset();
  Rng rng(9);
  double total = 0.0;
  while (!env.done()) total += env.step(rng.index(4)).reward;
  CHECK(total == 0.0);
}

TEST_CASE("maze: BFS oracle shortest path is achievable and rewarded") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    SparseMaze maze(6, 5, seed);
    const int dist = bfs_shortest_path(maze);
    REQUIRE(dist > 0);  // recursive backtracker always connects the grid
    CHECK(dist <= maze.spec().max_steps);

    // Re-derive the BFS path and walk it step by step.
    const int cells = maze.width() * maze.height();
    std::vector<int> parent(cells, -1), parent_dir(cells, -1);
    std::queue<int> q;
    parent[maze.start_cell()] = maze.start_cell();
    q.push(maze.start_cell());
    while (!q.empty()) {
      const int cell = q.front();
      q.pop();
      for (int d = 0; d < 4; ++d) {
        if (!maze.edge_open(cell, d)) continue;
        const int nb = maze_neighbour(maze, cell, d);
        if (nb >= 0 && parent[nb] < 0) {
          parent[nb] = cell;
          parent_dir[nb] = d;
          q.push(nb);
        }
      }
    }
    std::deque<int> path;
    for (int cell = maze.goal_cell(); cell != maze.start_cell(); cell = parent[cell])
      path.push_front(parent_dir[cell]);
    CHECK(static_cast<int>(path.size()) == dist);

    maze.reset();
    double total = 0.0;
    int steps = 0;
    for (int d : path) {
      total += maze.step(d).reward;
      ++steps;
    }
    CHECK(maze.done());
    CHECK(total == 1.0);
    CHECK(steps == dist);
  }
}

TEST_CASE("seed determinism: reset and 1000-step replay are bit-identical") {
  for (const char* name : {"deep_sea:8", "nchain:6", "maze:5x4"}) {
    auto a = make_env(name, 99);
    auto b = make_env(name, 99);
    CHECK(a->reset() == b->reset());

    Rng rng(7);
    const int n_actions = discrete_actions(a->spec());
    for (int step = 0; step < 1000; ++step) {
      if (a->done()) {
        CHECK(b->done());
        CHECK(a->reset() == b->reset());
      }
      const int action = rng.index(n_actions);
      const auto ta = a->step(action);
      const auto tb = b->step(action);
      CHECK(ta.reward == tb.reward);
      CHECK(ta.next_state == tb.next_state);
      CHECK(ta.done == tb.done);
    }
  }
}

TEST_CASE("episode length never exceeds the horizon; rewards bounded by 10") {
  Rng rng(31);
  for (const char* name : {"deep_sea:6", "nchain:5", "maze:4x4"}) {
    auto env = make_env(name, 11);
    const int n_actions = discrete_actions(env->spec());
    for (int episode = 0; episode < 5; ++episode) {
      env->reset();
      int len = 0;
      while (!env->done()) {
        const auto tr = env->step(rng.index(n_actions));
        CHECK(std::fabs(tr.reward) <= 10.0);
        ++len;
      }
      CHECK(len <= env->spec().max_steps);
    }
  }
}

TEST_CASE("out-of-range action is a contract error") {
  auto env = make_env("deep_sea:4", 1);
  env->reset();
  CHECK_THROWS_AS(env->step(2), std::invalid_argument);
  CHECK_THROWS_AS(env->step(-1), std::invalid_argument);
}

TEST_CASE("vec env: instances step like independent sequential environments") {
  const int count = 3;
  VecEnv vec("deep_sea:5", count, 77);
  std::vector<std::unique_ptr<Env>> solo;
  for (int i = 0; i < count; ++i) solo.push_back(make_env("deep_sea:5", derive_seed(77, i)));

  Rng rng(13);
  std::vector<std::vector<int>> actions(count);
  for (int i = 0; i < count; ++i) {
    vec.at(i).reset();
    solo[i]->reset();
    for (int t = 0; t < 5; ++t) actions[i].push_back(rng.index(2));
  }
  // Interleaved vectorized stepping vs each instance stepped in isolation.
  for (int t = 0; t < 5; ++t) {
    for (int i = 0; i < count; ++i) {
      const auto tv = vec.at(i).step(actions[i][t]);
      const auto ts = solo[i]->step(actions[i][t]);
      CHECK(tv.reward == ts.reward);
      CHECK(tv.next_state == ts.next_state);
    }
  }
}

TEST_CASE("make_env rejects malformed names") {
  CHECK_THROWS_AS((void)make_env("deep_sea", 0), std::invalid_argument);
  CHECK_THROWS_AS((void)make_env("pong:8", 0), std::invalid_argument);
  CHECK_THROWS_AS((void)make_env("maze:8", 0), std::invalid_argument);
}
