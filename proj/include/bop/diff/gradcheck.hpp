#pragma once

#include <functional>
#include <string>
#include <vector>

#include "bop/diff/tensor.hpp"

namespace bop::diff {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t parameters_checked = 0;
  // Location of the worst disagreement, for diagnostics.
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  double autodiff_value = 0.0;
  double numeric_value = 0.0;
};

// Compares reverse-mode gradients of a deterministic scalar-valued closure
// against central finite differences over every entry of `params`.
// Relative error uses max(|a|, |b|, 1) as denominator.
GradCheckReport gradient_check(const std::function<Tensor()>& f, std::vector<Tensor>& params,
                               double h = 1e-5);

}  // namespace bop::diff
