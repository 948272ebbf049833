#include <cmath>

#include "doctest.h"
#include "sce/rng.hpp"
#include "sce/tensor.hpp"
#include "test_util.hpp"

using namespace sce;
using sce::testing::max_abs_diff;
using sce::testing::random_tensor;

namespace {

// Independent normal CDF oracle: Simpson quadrature of the density, no erf.
double normal_cdf_quadrature(double x) {
  const int steps = 20000;  // even
  const double lo = -12.0;
  const double h = (x - lo) / steps;
  auto pdf = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI); };
  double acc = pdf(lo) + pdf(x);
  for (int i = 1; i < steps; ++i) acc += pdf(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

}  // namespace

TEST_CASE("matmul identity, hand oracle, zero case") {
  const Tensor identity = Tensor::mat({{1, 0}, {0, 1}});
  const Tensor col = Tensor::mat({{3}, {4}});
  const Tensor out = matmul(identity, col);
  CHECK(out.at(0, 0) == 3.0);
  CHECK(out.at(1, 0) == 4.0);

  const Tensor prod = matmul(Tensor::mat({{1, 2}, {3, 4}}), Tensor::mat({{5}, {6}}));
  CHECK(prod.at(0, 0) == 17.0);  // 1*5 + 2*6
  CHECK(prod.at(1, 0) == 39.0);  // 3*5 + 4*6

  const Tensor z = matmul(Tensor({2, 3}), Tensor::mat({{1}, {2}, {3}}));
  for (double v : z.data) CHECK(v == 0.0);

  CHECK_THROWS_AS(matmul(Tensor({2, 3}), Tensor({2, 3})), std::invalid_argument);
}

TEST_CASE("matmul is bit-deterministic") {
  Rng rng(7);
  const Tensor a = random_tensor({13, 9}, rng);
  const Tensor b = random_tensor({9, 11}, rng);
  const Tensor first = matmul(a, b);
  for (int rep = 0; rep < 5; ++rep) CHECK(sce::testing::bit_equal(first, matmul(a, b)));
}

TEST_CASE("softmax closed forms and stability") {
  const Tensor sym = softmax(Tensor::vec({0.0, 0.0}));
  CHECK(sym[0] == doctest::Approx(0.5).epsilon(1e-15));

  const Tensor closed = softmax(Tensor::vec({0.0, std::log(3.0)}));
  CHECK(closed[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(closed[1] == doctest::Approx(0.75).epsilon(1e-12));

  const Tensor shifted = softmax(Tensor::vec({1000.0, 1000.0}));
  CHECK(shifted.all_finite());
  CHECK(shifted[0] == doctest::Approx(0.5).epsilon(1e-15));

  CHECK_THROWS_AS(softmax(Tensor::vec({})), std::domain_error);
}

TEST_CASE("softmax sums to one for random lengths 1..64") {
  Rng rng(3);
  for (std::size_t n = 1; n <= 64; ++n) {
    const Tensor y = softmax(random_tensor({n}, rng, 5.0));
    double sum = 0.0;
    for (double v : y.data) {
      CHECK(v > 0.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("layer_norm constant, unit-variance, and bias pass-through cases") {
  const Tensor ones_gain = Tensor::vec({1, 1});
  const Tensor zero_bias = Tensor::vec({0, 0});
  const Tensor constant = layer_norm(Tensor::vec({1, 1}), ones_gain, zero_bias);
  CHECK(constant[0] == doctest::Approx(0.0));
  CHECK(constant[1] == doctest::Approx(0.0));

  // mean 1, population std 1 at eps -> 0
  const Tensor unit = layer_norm(Tensor::vec({0, 2}), ones_gain, zero_bias, 1e-14);
  CHECK(unit[0] == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(unit[1] == doctest::Approx(1.0).epsilon(1e-6));

  const Tensor biased =
      layer_norm(Tensor::vec({3, 3}), ones_gain, Tensor::vec({5, 5}));
  CHECK(biased[0] == doctest::Approx(5.0));
  CHECK(biased[1] == doctest::Approx(5.0));
}

TEST_CASE("gelu exact-erf values") {
  CHECK(gelu(Tensor::vec({0.0}))[0] == 0.0);
  CHECK(std::abs(gelu(Tensor::vec({10.0}))[0] - 10.0) < 1e-9);

  const double phi_one = normal_cdf_quadrature(1.0);
  CHECK(gelu(Tensor::vec({1.0}))[0] == doctest::Approx(1.0 * phi_one).epsilon(1e-9));
}

TEST_CASE("cross_entropy closed forms and floor flag") {
  Tensor onehot = Tensor::vec({0, 1, 0});
  CHECK(cross_entropy(onehot, onehot) == doctest::Approx(0.0));

  const Tensor uniform4 = Tensor::vec({0.25, 0.25, 0.25, 0.25});
  Tensor gold4 = Tensor::vec({0, 0, 1, 0});
  CHECK(cross_entropy(uniform4, gold4) == doctest::Approx(std::log(4.0)).epsilon(1e-12));

  CHECK(cross_entropy(Tensor::vec({0.75, 0.25}), Tensor::vec({1, 0})) ==
        doctest::Approx(std::log(4.0 / 3.0)).epsilon(1e-12));

  bool floored = false;
  const double loss = cross_entropy(Tensor::vec({0.0, 1.0}), Tensor::vec({1, 0}), &floored);
  CHECK(floored);
  CHECK(loss > 600.0);  // -log(1e-300)
}

TEST_CASE("finite_diff_grad known derivatives") {
  const Tensor w = Tensor::vec({3.0});
  const auto square = [](const Tensor& x) { return x[0] * x[0]; };
  CHECK(finite_diff_grad(square, w)[0] == doctest::Approx(6.0).epsilon(1e-6));

  const auto constant = [](const Tensor&) { return 2.5; };
  const Tensor zero = finite_diff_grad(constant, Tensor::vec({1, 2, 3}));
  for (double v : zero.data) CHECK(v == doctest::Approx(0.0));

  const auto sum = [](const Tensor& x) {
    double acc = 0.0;
    for (double v : x.data) acc += v;
    return acc;
  };
  const Tensor ones = finite_diff_grad(sum, Tensor::vec({-1, 0, 4}));
  for (double v : ones.data) CHECK(v == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("analytic backward rules match finite differences") {
  Rng rng(11);
  const double kTol = 1e-6;

  // relative error with a floor absorbing the oracle's own truncation noise
  const auto rel_max = [](const Tensor& a, const Tensor& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i)
      worst = std::max(worst, std::abs(a.data[i] - b.data[i]) /
                                  std::max(1e-3, std::abs(a.data[i]) + std::abs(b.data[i])));
    return worst;
  };

  SUBCASE("matmul") {
    const Tensor a = random_tensor({4, 3}, rng);
    const Tensor b = random_tensor({3, 5}, rng);
    const Tensor c = random_tensor({4, 5}, rng);
    const auto loss_a = [&](const Tensor& probe) {
      const Tensor y = matmul(probe, b);
      double acc = 0.0;
      for (std::size_t i = 0; i < y.numel(); ++i) acc += c.data[i] * y.data[i];
      return acc;
    };
    const auto loss_b = [&](const Tensor& probe) {
      const Tensor y = matmul(a, probe);
      double acc = 0.0;
      for (std::size_t i = 0; i < y.numel(); ++i) acc += c.data[i] * y.data[i];
      return acc;
    };
    Tensor da(a.shape), db(b.shape);
    matmul_backward(a, b, c, da, db);
    CHECK(rel_max(da, finite_diff_grad(loss_a, a)) < kTol);
    CHECK(rel_max(db, finite_diff_grad(loss_b, b)) < kTol);
  }

  SUBCASE("softmax") {
    const Tensor x = random_tensor({9}, rng);
    const Tensor c = random_tensor({9}, rng);
    const auto loss = [&](const Tensor& probe) {
      const Tensor y = softmax(probe);
      double acc = 0.0;
      for (std::size_t i = 0; i < y.numel(); ++i) acc += c[i] * y[i];
      return acc;
    };
    const Tensor analytic = softmax_backward(softmax(x), c);
    CHECK(rel_max(analytic, finite_diff_grad(loss, x)) < kTol);
  }

  SUBCASE("layer_norm") {
    const Tensor v = random_tensor({12}, rng);
    const Tensor gain = random_tensor({12}, rng);
    const Tensor bias = random_tensor({12}, rng);
    const Tensor c = random_tensor({12}, rng);
    const double eps = 1e-5;
    const auto weighted = [&](const Tensor& y) {
      double acc = 0.0;
      for (std::size_t i = 0; i < y.numel(); ++i) acc += c[i] * y[i];
      return acc;
    };
    Tensor dv({12}), dgain({12}), dbias({12});
    layer_norm_backward(v, gain, eps, c, dv, dgain, dbias);
    CHECK(rel_max(dv, finite_diff_grad(
                               [&](const Tensor& p) {
                                 return weighted(layer_norm(p, gain, bias, eps));
                               },
                               v)) < kTol);
    CHECK(rel_max(dgain, finite_diff_grad(
                                  [&](const Tensor& p) {
                                    return weighted(layer_norm(v, p, bias, eps));
                                  },
                                  gain)) < kTol);
    CHECK(rel_max(dbias, finite_diff_grad(
                                  [&](const Tensor& p) {
                                    return weighted(layer_norm(v, gain, p, eps));
                                  },
                                  bias)) < kTol);
  }

  SUBCASE("gelu") {
    const Tensor v = random_tensor({16}, rng);
    const Tensor c = random_tensor({16}, rng);
    const auto loss = [&](const Tensor& probe) {
      const Tensor y = gelu(probe);
      double acc = 0.0;
      for (std::size_t i = 0; i < y.numel(); ++i) acc += c.data[i] * y.data[i];
      return acc;
    };
    CHECK(rel_max(gelu_backward(v, c), finite_diff_grad(loss, v)) < kTol);
  }

  SUBCASE("cross_entropy") {
    Tensor p_hat = softmax(random_tensor({6}, rng));
    Tensor p = softmax(random_tensor({6}, rng));
    const auto loss = [&](const Tensor& probe) { return cross_entropy(probe, p); };
    CHECK(rel_max(cross_entropy_backward(p_hat, p), finite_diff_grad(loss, p_hat)) <
          kTol);
  }
}

TEST_CASE("ops keep finite inputs finite") {
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.below(32);
    const Tensor v = random_tensor({n}, rng, 50.0);
    CHECK(softmax(v).all_finite());
    CHECK(gelu(v).all_finite());
    const Tensor gain = random_tensor({n}, rng);
    const Tensor bias = random_tensor({n}, rng);
    CHECK(layer_norm(v, gain, bias).all_finite());
    const std::size_t r = 1 + rng.below(8), k = 1 + rng.below(8), c = 1 + rng.below(8);
    CHECK(matmul(random_tensor({r, k}, rng, 10.0), random_tensor({k, c}, rng, 10.0))
              .all_finite());
  }
  // layer_norm of a constant vector: variance 0, eps keeps it finite
  CHECK(layer_norm(Tensor::vec({3, 3, 3}), Tensor::vec({1, 1, 1}), Tensor::vec({0, 0, 0}))
            .all_finite());
}
