#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <vector>

#include "ganlab/rng.hpp"
#include "ganlab/tensor.hpp"

using namespace ganlab;

namespace {

// Central finite differences with step 1e-5, frozen as the gradient oracle.
// The relative error denominator is floored at 1e-6 so that near-zero
// derivatives compare absolutely instead of amplifying rounding noise.
double max_rel_error(const std::vector<Tensor*>& params,
                     const std::function<Tensor()>& loss_fn) {
  Tensor loss = loss_fn();
  for (Tensor* p : params) p->zero_grad();
  backward(loss);
  const double h = 1e-5;
  double worst = 0.0;
  for (Tensor* p : params) {
    const auto grad = p->grad();
    for (std::size_t i = 0; i < p->size(); ++i) {
      const double keep = p->data()[i];
      p->data()[i] = keep + h;
      const double up = loss_fn().value();
      p->data()[i] = keep - h;
      const double dn = loss_fn().value();
      p->data()[i] = keep;
      const double fd = (up - dn) / (2.0 * h);
      worst = std::max(worst, std::abs(grad[i] - fd) /
                                  std::max(std::abs(fd), 1e-6));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("scalar chain rule on x squared", "[tensor]") {
  Tensor x = Tensor::scalar(3.0, true);
  Tensor loss = mul(x, x);
  backward(loss);
  REQUIRE(x.grad()[0] == Catch::Approx(6.0).margin(1e-12));
}

TEST_CASE("sigmoid gradient at zero is a quarter", "[tensor]") {
  Tensor x = Tensor::scalar(0.0, true);
  Tensor loss = sigmoid(x);
  REQUIRE(loss.value() == Catch::Approx(0.5).margin(1e-15));
  backward(loss);
  REQUIRE(x.grad()[0] == Catch::Approx(0.25).margin(1e-12));
}

TEST_CASE("softmax of a known row", "[tensor]") {
  Tensor z({1, 3}, {1.0, 2.0, 3.0});
  Tensor s = softmax_rows(z);
  REQUIRE(s.at(0, 0) == Catch::Approx(0.09003057).margin(1e-8));
  REQUIRE(s.at(0, 1) == Catch::Approx(0.24472847).margin(1e-8));
  REQUIRE(s.at(0, 2) == Catch::Approx(0.66524096).margin(1e-8));
  double sum = s.at(0, 0) + s.at(0, 1) + s.at(0, 2);
  REQUIRE(sum == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("softmax is stable under large logits", "[tensor]") {
  Tensor z({1, 2}, {1000.0, 1001.0});
  Tensor s = softmax_rows(z);
  REQUIRE(std::isfinite(s.at(0, 0)));
  REQUIRE(s.at(0, 1) > s.at(0, 0));
  REQUIRE(s.at(0, 0) + s.at(0, 1) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("stable sigmoid saturates without overflow", "[tensor]") {
  REQUIRE(stable_sigmoid(1000.0) == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(stable_sigmoid(-1000.0) == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(std::isfinite(stable_sigmoid(-1000.0)));
}

TEST_CASE("gradients of a two-layer perceptron match finite differences",
          "[tensor]") {
  SeededRng rng(21);
  Tensor x({5, 3}, rng.normal_vector(15));
  Tensor w1 = Tensor::randn({7, 3}, rng, 0.0, 0.6);
  Tensor b1 = Tensor::randn({7}, rng, 0.0, 0.1);
  Tensor w2 = Tensor::randn({1, 7}, rng, 0.0, 0.6);
  auto loss_fn = [&] {
    return mean_all(sigmoid(linear(tanh_act(linear(x, w1, b1)), w2)));
  };
  REQUIRE(max_rel_error({&w1, &b1, &w2}, loss_fn) < 1e-4);
}

TEST_CASE("gradients across the op set match finite differences", "[tensor]") {
  SeededRng rng(22);
  Tensor a = Tensor::randn({4, 4}, rng, 0.0, 0.8);
  Tensor b = Tensor::randn({4, 4}, rng, 0.0, 0.8);
  // add/sub/mul/scale/one_minus/sum composed with smooth nonlinearities;
  // sigmoid keeps every intermediate inside (0,1) so log stays unfloored.
  auto loss_fn = [&] {
    Tensor s = sigmoid(sub(mul(a, b), scale(add(a, b), 0.3)));
    return sum_all(log_floored(one_minus(scale(s, 0.5))));
  };
  REQUIRE(max_rel_error({&a, &b}, loss_fn) < 1e-4);
}

TEST_CASE("leaky relu uses the configured slope", "[tensor]") {
  Tensor x({1, 2}, {-2.0, 3.0}, true);
  Tensor y = leaky_relu(x, 0.2);
  REQUIRE(y.at(0, 0) == Catch::Approx(-0.4).margin(1e-15));
  REQUIRE(y.at(0, 1) == Catch::Approx(3.0).margin(1e-15));
  backward(sum_all(y));
  REQUIRE(x.grad()[0] == Catch::Approx(0.2).margin(1e-15));
  REQUIRE(x.grad()[1] == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("log flooring clamps value and zeroes the gradient", "[tensor]") {
  Tensor x({2}, {1e-12, 0.5}, true);
  std::size_t hits = 0;
  Tensor y = log_floored(x, kLogFloor, &hits);
  REQUIRE(hits == 1);
  REQUIRE(y.data()[0] == Catch::Approx(std::log(kLogFloor)).margin(1e-12));
  backward(sum_all(y));
  REQUIRE(x.grad()[0] == 0.0);  // clamped entry contributes no gradient
  REQUIRE(x.grad()[1] == Catch::Approx(2.0).margin(1e-12));
}

TEST_CASE("linear validates shapes and broadcasts bias over rows",
          "[tensor]") {
  Tensor x({2, 3}, {1, 0, 0, 0, 1, 0});
  Tensor w({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor b({2}, {10, 20});
  Tensor y = linear(x, w, b);
  REQUIRE(y.at(0, 0) == Catch::Approx(11.0));
  REQUIRE(y.at(0, 1) == Catch::Approx(24.0));
  REQUIRE(y.at(1, 0) == Catch::Approx(12.0));
  REQUIRE(y.at(1, 1) == Catch::Approx(25.0));

  Tensor bad({3, 2}, {1, 2, 3, 4, 5, 6});
  REQUIRE_THROWS_AS(linear(x, bad), std::invalid_argument);
}

TEST_CASE("backward rejects non-scalar losses", "[tensor]") {
  Tensor x({2}, {1.0, 2.0}, true);
  Tensor y = mul(x, x);
  REQUIRE_THROWS_AS(backward(y), std::invalid_argument);
}

TEST_CASE("tape is consumed by backward", "[tensor]") {
  Tensor x = Tensor::scalar(2.0, true);
  Tensor y = mul(x, x);
  Tensor loss = sum_all(y);
  backward(loss);
  // interior node y was consumed; building on it must fail loudly
  REQUIRE_THROWS_AS(mul(y, y), std::runtime_error);
  // but the leaf is reusable on a fresh tape
  x.zero_grad();
  Tensor again = mul(x, x);
  backward(again);
  REQUIRE(x.grad()[0] == Catch::Approx(4.0));
}

TEST_CASE("detached tensors leave the tape", "[tensor]") {
  Tensor x = Tensor::scalar(3.0, true);
  Tensor y = mul(x, x).detach();
  REQUIRE_FALSE(y.requires_grad());
  REQUIRE(y.value() == Catch::Approx(9.0));
  // gradient cannot flow through a detached value
  Tensor z = Tensor::scalar(2.0, true);
  Tensor loss = mul(y, z);
  backward(loss);
  REQUIRE(z.grad()[0] == Catch::Approx(9.0));
  REQUIRE_FALSE(x.has_grad());
}

TEST_CASE("shape and data length must agree", "[tensor]") {
  REQUIRE_THROWS_AS(Tensor({2, 2}, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("operations on finite inputs stay finite", "[tensor]") {
  SeededRng rng(23);
  Tensor a = Tensor::randn({8, 8}, rng, 0.0, 3.0);
  Tensor out = softmax_rows(leaky_relu(tanh_act(a)));
  REQUIRE(out.all_finite());
}

TEST_CASE("seeded rng reproduces across instances and derives streams",
          "[tensor]") {
  SeededRng a(99), b(99);
  for (int i = 0; i < 200; ++i) REQUIRE(a.next_u64() == b.next_u64());

  SeededRng c(99);
  SeededRng d1 = c.derive("x");
  SeededRng d2 = SeededRng(99).derive("x");
  REQUIRE(d1.next_u64() == d2.next_u64());
  // distinct labels give distinct streams
  REQUIRE(SeededRng(99).derive("x").next_u64() !=
          SeededRng(99).derive("y").next_u64());
}
