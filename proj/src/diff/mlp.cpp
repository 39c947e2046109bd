#include "bop/diff/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace bop::diff {

Mlp Mlp::make(std::vector<std::size_t> widths, Activation act, Rng& rng) {
  if (widths.size() < 2) throw std::invalid_argument("Mlp: need at least input and output width");
  for (auto w : widths)
    if (w == 0) throw std::invalid_argument("Mlp: widths must be positive");
  Mlp mlp;
  mlp.widths_ = std::move(widths);
  mlp.act_ = act;
  for (std::size_t l = 0; l + 1 < mlp.widths_.size(); ++l) {
    const std::size_t fan_in = mlp.widths_[l];
    const std::size_t fan_out = mlp.widths_[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::vector<double> w(fan_in * fan_out);
    for (auto& v : w) v = rng.uniform(-bound, bound);
    mlp.params_.push_back(Tensor::from_vector({fan_in, fan_out}, std::move(w), true));
    mlp.params_.push_back(
        Tensor::from_vector({fan_out}, std::vector<double>(fan_out, 0.0), true));
  }
  return mlp;
}

Tensor Mlp::forward(const Tensor& input) const {
  if (input.shape().size() != 2 || input.shape()[1] != widths_.front())
    throw std::invalid_argument("Mlp::forward: input width mismatch");
  Tensor h = input;
  const std::size_t layers = params_.size() / 2;
  for (std::size_t l = 0; l < layers; ++l) {
    h = add_bias(matmul(h, params_[2 * l]), params_[2 * l + 1]);
    if (l + 1 < layers) {
      h = (act_ == Activation::kTanh) ? tanh_t(h) : relu_t(h);
    }
  }
  return h;
}

std::vector<double> Mlp::eval(std::span<const double> input) const {
  NoGradGuard ng;
  Tensor x = Tensor::from_vector({1, input.size()},
                                 std::vector<double>(input.begin(), input.end()));
  return forward(x).data();
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

void Mlp::set_requires_grad(bool v) {
  for (auto& p : params_) p.set_requires_grad(v);
}

void Mlp::copy_parameters_from(const Mlp& other) {
  if (other.widths_ != widths_) throw std::invalid_argument("copy_parameters_from: shape mismatch");
  for (std::size_t i = 0; i < params_.size(); ++i) params_[i].data() = other.params_[i].data();
}

}  // namespace bop::diff
