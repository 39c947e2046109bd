#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace bop::diff {

// Cumulative count of scalar multiply-adds performed by dense-layer kernels
// (matmul forward and backward). Monotone within a process; the trainer reads
// deltas around pipeline sections to attribute cost per component.
std::uint64_t mac_count();
void add_macs(std::uint64_t n);

bool grad_enabled();

// Disables graph construction in scope. Values are still computed (and MACs
// still counted); results are constants.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

using Shape = std::vector<std::size_t>;

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated on first accumulation
  bool requires_grad = false;
  bool leaf = true;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;

  std::size_t size() const { return value.size(); }
  void ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
  }
};

// Handle to a node of the implicitly built reverse-mode tape.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double v);
  static Tensor scalar(double v);
  static Tensor from_vector(Shape shape, std::vector<double> data, bool requires_grad = false);

  bool valid() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t size() const { return node_->size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::vector<double>& data() { return node_->value; }
  const std::vector<double>& data() const { return node_->value; }
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool v);

  bool has_grad() const { return !node_->grad.empty(); }
  const std::vector<double>& grad() const { return node_->grad; }
  void zero_grad() { node_->grad.clear(); }

  // Constant leaf sharing a copy of the values; never propagates gradient.
  Tensor detach() const;

  // Reverse pass from a scalar; accumulates into every reachable leaf
  // with requires_grad set.
  void backward() const;

  std::shared_ptr<Node> node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Temporarily clears requires_grad on a set of leaf tensors; restores on exit.
class ScopedFreeze {
 public:
  explicit ScopedFreeze(const std::vector<Tensor>& params);
  ~ScopedFreeze();
  ScopedFreeze(const ScopedFreeze&) = delete;
  ScopedFreeze& operator=(const ScopedFreeze&) = delete;

 private:
  std::vector<Tensor> params_;
  std::vector<bool> saved_;
};

// Elementwise / structural ops. Tensors are row-major; 2-D shapes are
// {rows, cols}. All ops are pure functions of (parent values, constants).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor min_t(const Tensor& a, const Tensor& b);  // ties route gradient to a
Tensor neg(const Tensor& a);
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add_bias(const Tensor& x, const Tensor& bias);  // bias broadcast over rows

Tensor tanh_t(const Tensor& a);
Tensor relu_t(const Tensor& a);
Tensor sigmoid_t(const Tensor& a);
Tensor exp_t(const Tensor& a);
Tensor log_t(const Tensor& a);
Tensor softplus_t(const Tensor& a);
Tensor square_t(const Tensor& a);
Tensor clamp_t(const Tensor& a, double lo, double hi);

Tensor sum_t(const Tensor& a);
Tensor mean_t(const Tensor& a);
Tensor sum_rows(const Tensor& a);  // {m,n} -> {m}

Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_cols(const Tensor& a, std::size_t c0, std::size_t c1);
Tensor gather_cols(const Tensor& a, const std::vector<int>& idx);  // {m,n},{m} -> {m}
Tensor log_softmax_rows(const Tensor& a);

}  // namespace bop::diff
