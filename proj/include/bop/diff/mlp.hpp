#pragma once

#include <span>
#include <vector>

#include "bop/common/rng.hpp"
#include "bop/diff/tensor.hpp"

namespace bop::diff {

enum class Activation { kTanh, kRelu };

// Fully connected network with linear output layer. Parameters are stored
// as [W0, b0, W1, b1, ...] with W of shape {fan_in, fan_out}.
class Mlp {
 public:
  Mlp() = default;

  // widths = {input, hidden..., output}; weights ~ U(+-sqrt(6/(fan_in+fan_out))),
  // biases zero.
  static Mlp make(std::vector<std::size_t> widths, Activation act, Rng& rng);

  Tensor forward(const Tensor& input) const;

  // Convenience single-row evaluation, no graph construction.
  std::vector<double> eval(std::span<const double> input) const;

  std::vector<Tensor>& parameters() { return params_; }
  const std::vector<Tensor>& parameters() const { return params_; }
  std::size_t parameter_count() const;

  std::size_t input_width() const { return widths_.front(); }
  std::size_t output_width() const { return widths_.back(); }
  const std::vector<std::size_t>& widths() const { return widths_; }
  Activation activation() const { return act_; }

  void set_requires_grad(bool v);

  // Copies parameter values from another MLP of identical architecture.
  void copy_parameters_from(const Mlp& other);

 private:
  std::vector<std::size_t> widths_;
  Activation act_ = Activation::kTanh;
  std::vector<Tensor> params_;
};

}  // namespace bop::diff
