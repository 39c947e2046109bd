#pragma once

#include <cstdint>
#include <vector>

namespace bop::ensemble {

// One contiguous span of an episode collected under a single active head;
// episodes shorter than the roll-out truncation produce exactly one segment.
struct Segment {
  int active_head = 0;
  bool terminal = false;  // ended with env done (vs roll-out truncation)
  std::vector<std::vector<double>> states;   // T x obs_dim
  std::vector<int> actions;                  // T
  std::vector<double> rewards;               // T
  std::vector<std::vector<double>> latents;  // T x L, the shared z_t
  std::vector<std::vector<double>> logp;     // K x T, log pi_i(a_t|s_t)
  std::vector<std::vector<double>> values;   // K x (T+1), g_t^i plus bootstrap g_T^i

  std::size_t length() const { return states.size(); }
};

struct TrajectoryBatch {
  int num_heads = 0;
  std::vector<Segment> segments;

  std::size_t total_steps() const {
    std::size_t n = 0;
    for (const auto& s : segments) n += s.length();
    return n;
  }

  // Throws std::logic_error if any segment is missing per-head rows.
  void check_invariants() const;
};

// Per-segment estimation products, all K x T.
struct AdvantageTable {
  std::vector<std::vector<double>> advantage;            // pre-augmentation A_t^i
  std::vector<std::vector<double>> bellman_target;       // x_t^i = A_t^i + g_t^i
  std::vector<std::vector<double>> curiosity_kl;         // raw KL values
  std::vector<std::vector<double>> bonus;                // min(beta*KL, clip)
  std::vector<std::vector<double>> augmented_advantage;  // recomputed with r + bonus
};

}  // namespace bop::ensemble
