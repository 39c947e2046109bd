#include "bop/diff/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace bop::diff {

Adam::Adam(const std::vector<Tensor>& params, LinearSchedule lr_schedule, double beta1,
           double beta2, double eps)
    : lr_(lr_schedule), beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const auto& p : params) {
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

void Adam::step(std::vector<Tensor>& params, double progress) {
  if (params.size() != m_.size()) throw std::invalid_argument("Adam::step: parameter list mismatch");
  ++step_count_;
  const double lr = lr_.value(progress);
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = params[pi];
    if (m_[pi].size() != p.size()) throw std::invalid_argument("Adam::step: moment shape mismatch");
    const bool has = p.has_grad();
    auto& val = p.data();
    for (std::size_t i = 0; i < val.size(); ++i) {
      const double g = has ? p.grad()[i] : 0.0;
      m_[pi][i] = beta1_ * m_[pi][i] + (1.0 - beta1_) * g;
      v_[pi][i] = beta2_ * v_[pi][i] + (1.0 - beta2_) * g * g;
      const double mhat = m_[pi][i] / bc1;
      const double vhat = v_[pi][i] / bc2;
      val[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

}  // namespace bop::diff
