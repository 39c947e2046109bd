#include "bop/diff/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace bop::diff {

namespace {

thread_local std::uint64_t g_macs = 0;
thread_local bool g_grad_enabled = true;

std::size_t shape_size(const Shape& s) {
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

std::shared_ptr<Node> make_node(Shape shape) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value.resize(shape_size(n->shape));
  return n;
}

bool track(std::initializer_list<const Tensor*> parents) {
  if (!g_grad_enabled) return false;
  for (const Tensor* p : parents) {
    if (p->requires_grad()) return true;
  }
  return false;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

}  // namespace

std::uint64_t mac_count() { return g_macs; }
void add_macs(std::uint64_t n) { g_macs += n; }

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

Tensor Tensor::zeros(Shape shape) { return Tensor(make_node(std::move(shape))); }

Tensor Tensor::full(Shape shape, double v) {
  auto n = make_node(std::move(shape));
  std::fill(n->value.begin(), n->value.end(), v);
  return Tensor(std::move(n));
}

Tensor Tensor::scalar(double v) { return full({1}, v); }

Tensor Tensor::from_vector(Shape shape, std::vector<double> data, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  if (shape_size(n->shape) != data.size())
    throw std::invalid_argument("from_vector: data length does not match shape");
  n->value = std::move(data);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

std::size_t Tensor::rows() const {
  return node_->shape.empty() ? 1 : node_->shape[0];
}

std::size_t Tensor::cols() const {
  if (node_->shape.size() < 2) return 1;
  return node_->shape[1];
}

double Tensor::item() const {
  if (size() != 1) throw std::logic_error("item: tensor is not a scalar");
  return node_->value[0];
}

void Tensor::set_requires_grad(bool v) {
  if (!node_->leaf) throw std::logic_error("set_requires_grad: not a leaf");
  node_->requires_grad = v;
}

Tensor Tensor::detach() const {
  auto n = std::make_shared<Node>();
  n->shape = node_->shape;
  n->value = node_->value;
  return Tensor(std::move(n));
}

void Tensor::backward() const {
  if (size() != 1) throw std::logic_error("backward: loss must be scalar");
  if (!node_->requires_grad) return;

  // Post-order DFS for a topological order, then seed and sweep in reverse.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, idx] = stack.back();
    if (idx < n->parents.size()) {
      Node* p = n->parents[idx].get();
      ++idx;
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  node_->ensure_grad();
  node_->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backprop && !n->grad.empty()) n->backprop(*n);
  }
}

ScopedFreeze::ScopedFreeze(const std::vector<Tensor>& params) : params_(params) {
  saved_.reserve(params_.size());
  for (auto& p : params_) {
    saved_.push_back(p.requires_grad());
    p.set_requires_grad(false);
  }
}

ScopedFreeze::~ScopedFreeze() {
  for (std::size_t i = 0; i < params_.size(); ++i) params_[i].set_requires_grad(saved_[i]);
}

namespace {

Tensor binary_elementwise(const Tensor& a, const Tensor& b, const char* name,
                          double (*fwd)(double, double),
                          void (*bwd)(Node& self, Node& an, Node& bn)) {
  check_same_shape(a, b, name);
  auto out = make_node(a.shape());
  const auto& av = a.data();
  const auto& bv = b.data();
  for (std::size_t i = 0; i < out->value.size(); ++i) out->value[i] = fwd(av[i], bv[i]);
  if (track({&a, &b})) {
    out->requires_grad = true;
    out->leaf = false;
    out->parents = {a.node(), b.node()};
    auto an = a.node();
    auto bn = b.node();
    out->backprop = [an, bn, bwd](Node& self) { bwd(self, *an, *bn); };
  }
  return Tensor(std::move(out));
}

Tensor unary_map(const Tensor& a, const char* /*name*/, double (*fwd)(double),
                 double (*dfdx_from_xy)(double x, double y)) {
  auto out = make_node(a.shape());
  const auto& av = a.data();
  for (std::size_t i = 0; i < out->value.size(); ++i) out->value[i] = fwd(av[i]);
  if (track({&a})) {
    out->requires_grad = true;
    out->leaf = false;
    out->parents = {a.node()};
    auto an = a.node();
    out->backprop = [an, dfdx_from_xy](Node& self) {
      if (!an->requires_grad) return;
      an->ensure_grad();
      for (std::size_t i = 0; i < self.value.size(); ++i) {
        an->grad[i] += self.grad[i] * dfdx_from_xy(an->value[i], self.value[i]);
      }
    };
  }
  return Tensor(std::move(out));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_elementwise(
      a, b, "add", [](double x, double y) { return x + y; },
      [](Node& self, Node& an, Node& bn) {
        if (an.requires_grad) {
          an.ensure_grad();
          for (std::size_t i = 0; i < self.grad.size(); ++i) an.grad[i] += self.grad[i];
        }
        if (bn.requires_grad) {
          bn.ensure_grad();
          for (std::size_t i = 0; i < self.grad.size(); ++i) bn.grad[i] += self.grad[i];
        }
      });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_elementwise(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](Node& self, Node& an, Node& bn) {
        if (an.requires_grad) {
          an.ensure_grad();
          for (std::size_t i = 0; i < self.grad.size(); ++i) an.grad[i] += self.grad[i];
        }
        if (bn.requires_grad) {
          bn.ensure_grad();
          for (std::size_t i = 0; i < self.grad.size(); ++i) bn.grad[i] -= self.grad[i];
        }
      });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_elementwise(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](Node& self, Node& an, Node& bn) {
        if (an.requires_grad) {
          an.ensure_grad();
          for (std::size_t i = 0; i < self.grad.size(); ++i)
            an.grad[i] += self.grad[i] * bn.value[i];
        }
        if (bn.requires_grad) {
          bn.ensure_grad();
          for (std::size_t i = 0; i < self.grad.size(); ++i)
            bn.grad[i] += self.grad[i] * an.value[i];
        }
      });
}

Tensor min_t(const Tensor& a, const Tensor& b) {
  return binary_elementwise(
      a, b, "min_t", [](double x, double y) { return x <= y ? x : y; },
      [](Node& self, Node& an, Node& bn) {
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
          if (an.value[i] <= bn.value[i]) {
            if (an.requires_grad) {
              an.ensure_grad();
              an.grad[i] += self.grad[i];
            }
          } else if (bn.requires_grad) {
            bn.ensure_grad();
            bn.grad[i] += self.grad[i];
          }
        }
      });
}

Tensor neg(const Tensor& a) {
  return unary_map(
      a, "neg", [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Tensor scale(const Tensor& a, double c) {
  auto out = make_node(a.shape());
  const auto& av = a.data();
  for (std::size_t i = 0; i < out->value.size(); ++i) out->value[i] = av[i] * c;
  if (track({&a})) {
    out->requires_grad = true;
    out->leaf = false;
    out->parents = {a.node()};
    auto an = a.node();
    out->backprop = [an, c](Node& self) {
      if (!an->requires_grad) return;
      an->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i] * c;
    };
  }
  return Tensor(std::move(out));
}

Tensor add_scalar(const Tensor& a, double c) {
  auto out = make_node(a.shape());
  const auto& av = a.data();
  for (std::size_t i = 0; i < out->value.size(); ++i) out->value[i] = av[i] + c;
  if (track({&a})) {
    out->requires_grad = true;
    out->leaf = false;
    out->parents = {a.node()};
    auto an = a.node();
    out->backprop = [an](Node& self) {
      if (!an->requires_grad) return;
      an->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
    };
  }
  return Tensor(std::move(out));
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.shape()[1] != b.shape()[0])
    throw std::invalid_argument("matmul: incompatible shapes");
  const std::size_t m = a.shape()[0];
  const std::size_t k = a.shape()[1];
  const std::size_t n = b.shape()[1];
  auto out = make_node({m, n});
  const double* ap = a.data().data();
  const double* bp = b.data().data();
  double* op = out->value.data();
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = op + i * n;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double av = ap[i * k + kk];
      const double* brow = bp + kk * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  add_macs(static_cast<std::uint64_t>(m) * k * n);
  if (track({&a, &b})) {
    out->requires_grad = true;
    out->leaf = false;
    out->parents = {a.node(), b.node()};
    auto an = a.node();
    auto bn = b.node();
    out->backprop = [an, bn, m, k, n](Node& self) {
      const double* g = self.grad.data();
      if (an->requires_grad) {
        an->ensure_grad();
        // dA = dC * B^T
        double* da = an->grad.data();
        const double* bp2 = bn->value.data();
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < n; ++j) {
            const double gv = g[i * n + j];
            const double* brow = bp2 + j;
            double* darow = da + i * k;
            for (std::size_t kk = 0; kk < k; ++kk) darow[kk] += gv * brow[kk * n];
          }
        }
        add_macs(static_cast<std::uint64_t>(m) * k * n);
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        // dB = A^T * dC
        double* db = bn->grad.data();
        const double* ap2 = an->value.data();
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = ap2[i * k + kk];
            const double* grow = g + i * n;
            double* dbrow = db + kk * n;
            for (std::size_t j = 0; j < n; ++j) dbrow[j] += av * grow[j];
          }
        }
        add_macs(static_cast<std::uint64_t>(m) * k * n);
      }
    };
  }
  return Tensor(std::move(out));
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  if (x.shape().size() != 2 || bias.size() != x.shape()[1])
    throw std::invalid_argument("add_bias: incompatible shapes");
  const std::size_t m = x.shape()[0];
  const std::size_t n = x.shape()[1];
  auto out = make_node(x.shape());
  const auto& xv = x.data();
  const auto& bv = bias.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out->value[i * n + j] = xv[i * n + j] + bv[j];
  if (track({&x, &bias})) {
    out->requires_grad = true;
    out->leaf = false;
    out->parents = {x.node(), bias.node()};
    auto xn = x.node();
    auto bn = bias.node();
    out->backprop = [xn, bn, m, n](Node& self) {
      if (xn->requires_grad) {
        xn->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) xn->grad[i] += self.grad[i];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) bn->grad[j] += self.grad[i * n + j];
      }
    };
  }
  return Tensor(std::move(out));
}

Tensor tanh_t(const Tensor& a) {
  return unary_map(
      a, "tanh", [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor relu_t(const Tensor& a) {
  return unary_map(
      a, "relu", [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid_t(const Tensor& a) {
  return unary_map(
      a, "sigmoid", [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor exp_t(const Tensor& a) {
  return unary_map(
      a, "exp", [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log_t(const Tensor& a) {
  return unary_map(
      a, "log", [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Tensor softplus_t(const Tensor& a) {
  // log(1 + e^x), computed on the stable branch.
  return unary_map(
      a, "softplus",
      [](double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); },
      [](double x, double) { return 1.0 / (1.0 + std::exp(-x)); });
}

Tensor square_t(const Tensor& a) {
  return unary_map(
      a, "square", [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor clamp_t(const Tensor& a, double lo, double hi) {
  auto out = make_node(a.shape());
  const auto& av = a.data();
  for (std::size_t i = 0; i < out->value.size(); ++i) out->value[i] = std::clamp(av[i], lo, hi);
  if (track({&a})) {
    out->requires_grad = true;
    out->leaf = false;
    out->parents = {a.node()};
    auto an = a.node();
    out->backprop = [an, lo, hi](Node& self) {
      if (!an->requires_grad) return;
      an->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        const double x = an->value[i];
        if (x >= lo && x <= hi) an->grad[i] += self.grad[i];
      }
    };
  }
  return Tensor(std::move(out));
}

Tensor sum_t(const Tensor& a) {
  auto out = make_node({1});
  double s = 0.0;
  for (double v : a.data()) s += v;
  out->value[0] = s;
  if (track({&a})) {
    out->requires_grad = true;
    out->leaf = false;
    out->parents = {a.node()};
    auto an = a.node();
    out->backprop = [an](Node& self) {
      if (!an->requires_grad) return;
      an->ensure_grad();
      for (std::size_t i = 0; i < an->grad.size(); ++i) an->grad[i] += self.grad[0];
    };
  }
  return Tensor(std::move(out));
}

Tensor mean_t(const Tensor& a) { return scale(sum_t(a), 1.0 / static_cast<double>(a.size())); }

Tensor sum_rows(const Tensor& a) {
  if (a.shape().size() != 2) throw std::invalid_argument("sum_rows: expects 2-D tensor");
  const std::size_t m = a.shape()[0];
  const std::size_t n = a.shape()[1];
  auto out = make_node({m});
  const auto& av = a.data();
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += av[i * n + j];
    out->value[i] = s;
  }
  if (track({&a})) {
    out->requires_grad = true;
    out->leaf = false;
    out->parents = {a.node()};
    auto an = a.node();
    out->backprop = [an, m, n](Node& self) {
      if (!an->requires_grad) return;
      an->ensure_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) an->grad[i * n + j] += self.grad[i];
    };
  }
  return Tensor(std::move(out));
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no parts");
  const std::size_t m = parts[0].shape()[0];
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.shape().size() != 2 || p.shape()[0] != m)
      throw std::invalid_argument("concat_cols: row mismatch");
    total += p.shape()[1];
  }
  auto out = make_node({m, total});
  std::size_t off = 0;
  for (const auto& p : parts) {
    const std::size_t n = p.shape()[1];
    const auto& pv = p.data();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) out->value[i * total + off + j] = pv[i * n + j];
    off += n;
  }
  bool any = false;
  if (g_grad_enabled) {
    for (const auto& p : parts)
      if (p.requires_grad()) any = true;
  }
  if (any) {
    out->requires_grad = true;
    out->leaf = false;
    std::vector<std::shared_ptr<Node>> ps;
    std::vector<std::size_t> widths;
    for (const auto& p : parts) {
      ps.push_back(p.node());
      widths.push_back(p.shape()[1]);
    }
    out->parents = ps;
    out->backprop = [ps, widths, m, total](Node& self) {
      std::size_t off2 = 0;
      for (std::size_t pi = 0; pi < ps.size(); ++pi) {
        const std::size_t n = widths[pi];
        if (ps[pi]->requires_grad) {
          ps[pi]->ensure_grad();
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j)
              ps[pi]->grad[i * n + j] += self.grad[i * total + off2 + j];
        }
        off2 += n;
      }
    };
  }
  return Tensor(std::move(out));
}

Tensor slice_cols(const Tensor& a, std::size_t c0, std::size_t c1) {
  if (a.shape().size() != 2 || c1 > a.shape()[1] || c0 >= c1)
    throw std::invalid_argument("slice_cols: bad range");
  const std::size_t m = a.shape()[0];
  const std::size_t n = a.shape()[1];
  const std::size_t w = c1 - c0;
  auto out = make_node({m, w});
  const auto& av = a.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < w; ++j) out->value[i * w + j] = av[i * n + c0 + j];
  if (track({&a})) {
    out->requires_grad = true;
    out->leaf = false;
    out->parents = {a.node()};
    auto an = a.node();
    out->backprop = [an, m, n, w, c0](Node& self) {
      if (!an->requires_grad) return;
      an->ensure_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < w; ++j) an->grad[i * n + c0 + j] += self.grad[i * w + j];
    };
  }
  return Tensor(std::move(out));
}

Tensor gather_cols(const Tensor& a, const std::vector<int>& idx) {
  if (a.shape().size() != 2 || idx.size() != a.shape()[0])
    throw std::invalid_argument("gather_cols: bad arguments");
  const std::size_t m = a.shape()[0];
  const std::size_t n = a.shape()[1];
  for (int j : idx)
    if (j < 0 || static_cast<std::size_t>(j) >= n)
      throw std::invalid_argument("gather_cols: index out of range");
  auto out = make_node({m});
  const auto& av = a.data();
  for (std::size_t i = 0; i < m; ++i) out->value[i] = av[i * n + idx[i]];
  if (track({&a})) {
    out->requires_grad = true;
    out->leaf = false;
    out->parents = {a.node()};
    auto an = a.node();
    auto ix = idx;
    out->backprop = [an, ix, m, n](Node& self) {
      if (!an->requires_grad) return;
      an->ensure_grad();
      for (std::size_t i = 0; i < m; ++i) an->grad[i * n + ix[i]] += self.grad[i];
    };
  }
  return Tensor(std::move(out));
}

Tensor log_softmax_rows(const Tensor& a) {
  if (a.shape().size() != 2) throw std::invalid_argument("log_softmax_rows: expects 2-D tensor");
  const std::size_t m = a.shape()[0];
  const std::size_t n = a.shape()[1];
  auto out = make_node(a.shape());
  const auto& av = a.data();
  for (std::size_t i = 0; i < m; ++i) {
    double mx = av[i * n];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, av[i * n + j]);
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += std::exp(av[i * n + j] - mx);
    const double lse = mx + std::log(s);
    for (std::size_t j = 0; j < n; ++j) out->value[i * n + j] = av[i * n + j] - lse;
  }
  if (track({&a})) {
    out->requires_grad = true;
    out->leaf = false;
    out->parents = {a.node()};
    auto an = a.node();
    out->backprop = [an, m, n](Node& self) {
      if (!an->requires_grad) return;
      an->ensure_grad();
      for (std::size_t i = 0; i < m; ++i) {
        double gsum = 0.0;
        for (std::size_t j = 0; j < n; ++j) gsum += self.grad[i * n + j];
        for (std::size_t j = 0; j < n; ++j) {
          const double p = std::exp(self.value[i * n + j]);
          an->grad[i * n + j] += self.grad[i * n + j] - p * gsum;
        }
      }
    };
  }
  return Tensor(std::move(out));
}

}  // namespace bop::diff
