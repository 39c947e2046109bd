#pragma once

#include <cstdint>
#include <vector>

#include "bop/diff/tensor.hpp"

namespace bop::diff {

struct LinearSchedule {
  double start = 0.0;
  double end = 0.0;
  // progress in [0, 1]; clamps beyond the endpoint.
  double value(double progress) const {
    if (progress < 0.0) progress = 0.0;
    if (progress > 1.0) progress = 1.0;
    return start + (end - start) * progress;
  }
};

// Adam over a fixed parameter list. Missing gradients are treated as zero.
class Adam {
 public:
  Adam() = default;
  Adam(const std::vector<Tensor>& params, LinearSchedule lr_schedule, double beta1 = 0.9,
       double beta2 = 0.999, double eps = 1e-8);

  // One update using the gradients currently stored on `params`; `progress`
  // selects the point on the linear learning-rate schedule.
  void step(std::vector<Tensor>& params, double progress);

  std::uint64_t step_count() const { return step_count_; }
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }
  std::vector<std::vector<double>>& first_moments() { return m_; }
  std::vector<std::vector<double>>& second_moments() { return v_; }
  void set_step_count(std::uint64_t n) { step_count_ = n; }
  const LinearSchedule& schedule() const { return lr_; }

 private:
  LinearSchedule lr_;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  std::uint64_t step_count_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace bop::diff
