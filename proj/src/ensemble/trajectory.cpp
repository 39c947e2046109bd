#include "bop/ensemble/trajectory.hpp"

#include <stdexcept>

namespace bop::ensemble {

void TrajectoryBatch::check_invariants() const {
  for (const auto& seg : segments) {
    const std::size_t T = seg.length();
    if (seg.actions.size() != T || seg.rewards.size() != T || seg.latents.size() != T)
      throw std::logic_error("TrajectoryBatch: ragged segment");
    if (seg.logp.size() != static_cast<std::size_t>(num_heads) ||
        seg.values.size() != static_cast<std::size_t>(num_heads))
      throw std::logic_error("TrajectoryBatch: per-head tables must cover all heads");
    for (const auto& row : seg.logp) {
      if (row.size() != T) throw std::logic_error("TrajectoryBatch: log-prob row length mismatch");
    }
    for (const auto& row : seg.values) {
      if (row.size() != T + 1)
        throw std::logic_error("TrajectoryBatch: value rows must include the bootstrap sample");
    }
    if (seg.active_head < 0 || seg.active_head >= num_heads)
      throw std::logic_error("TrajectoryBatch: active head out of range");
  }
}

}  // namespace bop::ensemble
