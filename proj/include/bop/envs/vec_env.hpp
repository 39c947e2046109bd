#pragma once

#include <memory>
#include <string>
#include <vector>

#include "bop/common/rng.hpp"
#include "bop/envs/env.hpp"

namespace bop::envs {

// A set of independent environment instances with derived per-instance seeds.
// Instances never share state; stepping one cannot affect another.
class VecEnv {
 public:
  VecEnv(const std::string& name, int count, std::uint64_t seed) {
    if (count < 1) throw std::invalid_argument("VecEnv: count must be >= 1");
    envs_.reserve(count);
    for (int i = 0; i < count; ++i) {
      envs_.push_back(make_env(name, derive_seed(seed, static_cast<std::uint64_t>(i))));
    }
  }

  int size() const { return static_cast<int>(envs_.size()); }
  Env& at(int i) { return *envs_[i]; }
  const Env& at(int i) const { return *envs_[i]; }
  const EnvSpec& spec() const { return envs_.front()->spec(); }

 private:
  std::vector<std::unique_ptr<Env>> envs_;
};

}  // namespace bop::envs
