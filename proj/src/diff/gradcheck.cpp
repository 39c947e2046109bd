#include "bop/diff/gradcheck.hpp"

#include <cmath>
#include <stdexcept>

namespace bop::diff {

GradCheckReport gradient_check(const std::function<Tensor()>& f, std::vector<Tensor>& params,
                               double h) {
  for (auto& p : params) p.zero_grad();
  Tensor loss = f();
  if (loss.size() != 1) throw std::invalid_argument("gradient_check: loss must be scalar");
  loss.backward();

  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (auto& p : params) {
    if (p.has_grad()) {
      analytic.push_back(p.grad());
    } else {
      analytic.emplace_back(p.size(), 0.0);
    }
  }

  GradCheckReport report;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& values = params[pi].data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + h;
      const double up = f().item();
      values[i] = saved - h;
      const double down = f().item();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[pi][i];
      const double denom = std::max({std::fabs(a), std::fabs(numeric), 1.0});
      const double rel = std::fabs(a - numeric) / denom;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_param = pi;
        report.worst_index = i;
        report.autodiff_value = a;
        report.numeric_value = numeric;
      }
      ++report.parameters_checked;
    }
  }
  for (auto& p : params) p.zero_grad();
  return report;
}

}  // namespace bop::diff
