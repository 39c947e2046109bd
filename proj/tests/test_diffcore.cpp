#include <doctest.h>

#include <cmath>
#include <sstream>

#include "bop/common/rng.hpp"
#include "bop/diff/adam.hpp"
#include "bop/diff/gradcheck.hpp"
#include "bop/diff/mlp.hpp"
#include "bop/diff/serialize.hpp"
#include "bop/diff/tensor.hpp"

using namespace bop;

namespace {

// Independent dense forward pass: plain nested loops over the raw weights.
std::vector<double> naive_mlp_forward(const diff::Mlp& mlp, const std::vector<double>& input) {
  std::vector<double> h = input;
  const auto& params = mlp.parameters();
  const std::size_t layers = params.size() / 2;
  for (std::size_t l = 0; l < layers; ++l) {
    const auto& w = params[2 * l];
    const auto& b = params[2 * l + 1];
    const std::size_t in = w.shape()[0];
    const std::size_t out = w.shape()[1];
    std::vector<double> next(out, 0.0);
    for (std::size_t j = 0; j < out; ++j) {
      double acc = b.data()[j];
      for (std::size_t i = 0; i < in; ++i) acc += h[i] * w.data()[i * out + j];
      next[j] = acc;
    }
    if (l + 1 < layers) {
      for (auto& v : next)
        v = mlp.activation() == diff::Activation::kTanh ? std::tanh(v) : std::max(0.0, v);
    }
    h = std::move(next);
  }
  return h;
}

}  // namespace

TEST_CASE("forward: identity-initialized linear layer reproduces its input") {
  Rng rng(1);
  auto mlp = diff::Mlp::make({3, 3}, diff::Activation::kTanh, rng);
  auto& w = mlp.parameters()[0].data();
  std::fill(w.begin(), w.end(), 0.0);
  for (int i = 0; i < 3; ++i) w[i * 3 + i] = 1.0;
  const auto out = mlp.eval(std::vector<double>{1.0, 2.0, 3.0});
  CHECK(out[0] == 1.0);
  CHECK(out[1] == 2.0);
  CHECK(out[2] == 3.0);
}

TEST_CASE("forward: zero weights yield the bias for any input") {
  Rng rng(2);
  auto mlp = diff::Mlp::make({4, 2}, diff::Activation::kRelu, rng);
  std::fill(mlp.parameters()[0].data().begin(), mlp.parameters()[0].data().end(), 0.0);
  mlp.parameters()[1].data() = {0.25, -1.5};
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<double> input(4);
    for (auto& v : input) v = rng.uniform(-5.0, 5.0);
    const auto out = mlp.eval(input);
    CHECK(out[0] == 0.25);
    CHECK(out[1] == -1.5);
  }
}

TEST_CASE("forward: random two-layer net matches the naive matmul oracle") {
  Rng rng(3);
  auto mlp = diff::Mlp::make({5, 7, 2}, diff::Activation::kTanh, rng);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> input(5);
    for (auto& v : input) v = rng.uniform(-2.0, 2.0);
    const auto fast = mlp.eval(input);
    const auto slow = naive_mlp_forward(mlp, input);
    for (std::size_t i = 0; i < fast.size(); ++i) CHECK(std::fabs(fast[i] - slow[i]) < 1e-12);
  }
}

TEST_CASE("forward is pure: bit-identical output on repeated evaluation") {
  Rng rng(4);
  auto mlp = diff::Mlp::make({6, 8, 8, 3}, diff::Activation::kTanh, rng);
  std::vector<double> input(6);
  for (auto& v : input) v = rng.uniform(-1.0, 1.0);
  const auto a = mlp.eval(input);
  const auto b = mlp.eval(input);
  CHECK(a == b);
}

TEST_CASE("forward: input width mismatch raises a dimension error") {
  Rng rng(5);
  auto mlp = diff::Mlp::make({3, 2}, diff::Activation::kTanh, rng);
  CHECK_THROWS_AS((void)mlp.eval(std::vector<double>{1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("backward: grad of sum(w*x) w.r.t. w equals x") {
  auto w = diff::Tensor::from_vector({4}, {0.5, -1.0, 2.0, 0.0}, true);
  auto x = diff::Tensor::from_vector({4}, {1.0, 2.0, 3.0, 4.0});
  diff::sum_t(diff::mul(w, x)).backward();
  REQUIRE(w.has_grad());
  for (int i = 0; i < 4; ++i) CHECK(w.grad()[i] == x.data()[i]);
}

TEST_CASE("backward: grad of ||x||^2 equals 2x") {
  auto x = diff::Tensor::from_vector({3}, {1.5, -2.0, 0.25}, true);
  diff::sum_t(diff::square_t(x)).backward();
  for (int i = 0; i < 3; ++i) CHECK(x.grad()[i] == 2.0 * x.data()[i]);
}

TEST_CASE("backward: non-scalar loss is a contract error") {
  auto x = diff::Tensor::from_vector({2}, {1.0, 2.0}, true);
  auto y = diff::square_t(x);
  CHECK_THROWS_AS(y.backward(), std::logic_error);
}

TEST_CASE("backward: random MLPs match central finite differences") {
  // >= 10 random nets, relative error <= 1e-4 at h = 1e-5. ReLU nets resample
  // inputs until every pre-activation is at least 1e-2 from the kink.
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(100 + seed);
    const auto act = (seed % 2 == 0) ? diff::Activation::kTanh : diff::Activation::kRelu;
    auto mlp = diff::Mlp::make({4, 6, 6, 2}, act, rng);
    std::vector<double> input(8);
    auto resample = [&]() {
      for (auto& v : input) v = rng.uniform(-1.5, 1.5);
    };
    resample();
    if (act == diff::Activation::kRelu) {
      auto away_from_kinks = [&]() {
        const auto& p = mlp.parameters();
        for (std::size_t r = 0; r < 2; ++r) {
          auto x0 = diff::Tensor::from_vector(
              {1, 4}, {input[4 * r], input[4 * r + 1], input[4 * r + 2], input[4 * r + 3]});
          auto h1 = diff::add_bias(diff::matmul(x0, p[0]), p[1]);
          for (double v : h1.data())
            if (std::fabs(v) < 1e-2) return false;
          auto h2 = diff::add_bias(diff::matmul(diff::relu_t(h1), p[2]), p[3]);
          for (double v : h2.data())
            if (std::fabs(v) < 1e-2) return false;
        }
        return true;
      };
      int attempts = 0;
      while (!away_from_kinks() && attempts++ < 200) resample();
      REQUIRE(attempts < 200);
    }
    auto f = [&]() {
      auto x = diff::Tensor::from_vector({2, 4}, std::vector<double>(input));
      return diff::mean_t(diff::square_t(mlp.forward(x)));
    };
    const auto report = diff::gradient_check(f, mlp.parameters());
    CHECK(report.max_rel_error <= 1e-4);
  }
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  std::vector<diff::Tensor> params{diff::Tensor::from_vector({3}, {1.0, -2.0, 3.0}, true)};
  diff::Adam opt(params, {0.1, 0.1});
  const auto before = params[0].data();
  opt.step(params, 0.0);  // no grads present
  CHECK(params[0].data() == before);
}

TEST_CASE("adam: constant gradient moves parameters opposite its sign") {
  std::vector<diff::Tensor> params{diff::Tensor::from_vector({2}, {0.0, 0.0}, true)};
  diff::Adam opt(params, {0.05, 0.05});
  for (int step = 0; step < 25; ++step) {
    auto loss = diff::sum_t(diff::mul(params[0], diff::Tensor::from_vector({2}, {2.0, -3.0})));
    params[0].zero_grad();
    loss.backward();
    opt.step(params, 0.0);
  }
  CHECK(params[0].data()[0] < 0.0);  // gradient +2 pushes down
  CHECK(params[0].data()[1] > 0.0);  // gradient -3 pushes up
}

TEST_CASE("adam: first step matches the hand-computed update") {
  const double lr = 0.1, g = 0.5, p0 = 1.0;
  std::vector<diff::Tensor> params{diff::Tensor::from_vector({1}, {p0}, true)};
  diff::Adam opt(params, {lr, lr});
  auto loss = diff::sum_t(diff::mul(params[0], diff::Tensor::from_vector({1}, {g})));
  loss.backward();
  opt.step(params, 0.0);
  // m = 0.1 g, v = 0.001 g^2; bias correction gives mhat = g, vhat = g^2.
  const double expected = p0 - lr * g / (std::sqrt(g * g) + 1e-8);
  CHECK(std::fabs(params[0].data()[0] - expected) < 1e-12);
}

TEST_CASE("adam: learning rate follows the linear decay descriptor") {
  diff::LinearSchedule sched{2.5e-4, 0.0};
  CHECK(sched.value(0.0) == 2.5e-4);
  CHECK(sched.value(0.5) == doctest::Approx(1.25e-4));
  CHECK(sched.value(1.0) == 0.0);
  CHECK(sched.value(2.0) == 0.0);  // clamps past the endpoint
}

TEST_CASE("gradient_check: quadratic bowl is exact to 1e-8") {
  std::vector<diff::Tensor> params{diff::Tensor::from_vector({3}, {1.0, -0.5, 2.0}, true)};
  auto f = [&]() { return diff::sum_t(diff::square_t(params[0])); };
  const auto report = diff::gradient_check(f, params);
  CHECK(report.max_rel_error < 1e-8);
}

TEST_CASE("gradient_check: tanh and relu MLP losses stay under 1e-4") {
  Rng rng(42);
  for (auto act : {diff::Activation::kTanh, diff::Activation::kRelu}) {
    auto mlp = diff::Mlp::make({3, 5, 5, 1}, act, rng);
    std::vector<double> input{0.7, -0.9, 1.3};
    auto f = [&]() {
      auto x = diff::Tensor::from_vector({1, 3}, std::vector<double>(input));
      return diff::sum_t(mlp.forward(x));
    };
    const auto report = diff::gradient_check(f, mlp.parameters());
    CHECK(report.max_rel_error < 1e-4);
  }
}

TEST_CASE("reparameterized sample: d/dmu = 1 and d/dsigma = eps exactly") {
  auto mu = diff::Tensor::from_vector({1}, {0.3}, true);
  auto sigma = diff::Tensor::from_vector({1}, {0.8}, true);
  const double eps = -1.37;
  auto sample = diff::add(mu, diff::mul(sigma, diff::Tensor::from_vector({1}, {eps})));
  diff::sum_t(sample).backward();
  CHECK(mu.grad()[0] == 1.0);
  CHECK(sigma.grad()[0] == eps);
}

TEST_CASE("no-grad guard suppresses graph construction") {
  auto w = diff::Tensor::from_vector({2}, {1.0, 2.0}, true);
  {
    diff::NoGradGuard ng;
    auto y = diff::sum_t(diff::square_t(w));
    CHECK_FALSE(y.requires_grad());
  }
  auto y = diff::sum_t(diff::square_t(w));
  CHECK(y.requires_grad());
}

TEST_CASE("clamp: gradient passes inside the interval only") {
  auto x = diff::Tensor::from_vector({3}, {-2.0, 0.5, 2.0}, true);
  diff::sum_t(diff::clamp_t(x, -1.0, 1.0)).backward();
  CHECK(x.grad()[0] == 0.0);
  CHECK(x.grad()[1] == 1.0);
  CHECK(x.grad()[2] == 0.0);
}

TEST_CASE("weight blob: round-trip preserves shapes and bits") {
  Rng rng(6);
  auto mlp = diff::Mlp::make({4, 6, 2}, diff::Activation::kTanh, rng);
  std::ostringstream os(std::ios::binary);
  diff::write_tensors(os, mlp.parameters());
  const std::string blob = os.str();
  CHECK(blob.substr(0, 4) == "BOPW");

  std::istringstream is(blob, std::ios::binary);
  const auto loaded = diff::read_tensors(is);
  REQUIRE(loaded.size() == mlp.parameters().size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded[i].shape() == mlp.parameters()[i].shape());
    CHECK(loaded[i].data() == mlp.parameters()[i].data());
  }

  std::string corrupted = blob;
  corrupted[1] = 'X';
  std::istringstream bad(corrupted, std::ios::binary);
  CHECK_THROWS_AS((void)diff::read_tensors(bad), std::runtime_error);
}

TEST_CASE("mac counter: matmul forward and backward are counted") {
  const auto before = diff::mac_count();
  auto a = diff::Tensor::from_vector({2, 3}, {1, 2, 3, 4, 5, 6}, true);
  auto b = diff::Tensor::from_vector({3, 4}, std::vector<double>(12, 1.0), true);
  auto c = diff::matmul(a, b);
  CHECK(diff::mac_count() - before == 2 * 3 * 4);
  diff::sum_t(c).backward();
  CHECK(diff::mac_count() - before == 3 * (2 * 3 * 4));
}
