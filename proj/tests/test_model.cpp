#include <doctest.h>

#include <random>

#include "semiae/errors.hpp"
#include "semiae/model.hpp"
#include "support/oracles.hpp"
#include "support/properties.hpp"

using namespace semiae;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

// Zero weights, output bias b: the network outputs b for any input.
SemiAEParams constant_output(int input_dim, const Eigen::VectorXd& b) {
  SemiAEParams params = SemiAEParams::zeros(input_dim, 2, static_cast<int>(b.size()), Activation::kSigmoid,
                                            Activation::kIdentity);
  params.p1 = b;
  return params;
}

}  // namespace

TEST_CASE("concat_input and subset") {
  CHECK(concat_input(vec({1, 0, 5}), vec({0.2, 0.8})) == vec({1, 0, 5, 0.2, 0.8}));
  CHECK(concat_input(vec({1, 0, 5}), Eigen::VectorXd(0)) == vec({1, 0, 5}));
  Eigen::MatrixXd x(2, 4);
  x << 1, 2, 3, 4, 5, 6, 7, 8;
  Eigen::MatrixXd head(2, 3);
  head << 1, 2, 3, 5, 6, 7;
  CHECK(subset(x, 3) == head);
  CHECK_THROWS_AS(subset(x, 5), DimensionError);
  CHECK_THROWS_AS(concat_rows(x, Eigen::MatrixXd::Zero(3, 1)), DimensionError);
}

TEST_CASE("forward with zero weights returns the output bias") {
  const auto params = constant_output(4, vec({3, -1, 2}));
  const auto [h, out] = forward(params, vec({9, 8, 7, 6}));
  CHECK(out == vec({3, -1, 2}));
  CHECK(h == vec({0.5, 0.5}));
}

TEST_CASE("forward on a hand-evaluated 2x3x2 network") {
  SemiAEParams params = SemiAEParams::zeros(2, 3, 2, Activation::kIdentity, Activation::kIdentity);
  params.Q << 1, 0, 2,
              0, 1, -1;
  params.p = vec({0, 1, 0});
  params.Q1 << 1, 0,
               0, 1,
               2, -1;
  params.p1 = vec({1, -1});
  // x Q + p = [1, 2, 0] + [0, 1, 0] = [1, 3, 0]; h Q1 + p1 = [1, 3] + [1, -1].
  const auto [h, out] = forward(params, vec({1, 2}));
  CHECK(h == vec({1, 3, 0}));
  CHECK(out == vec({2, 2}));

  params.g = Activation::kRelu;
  params.p = vec({0, 1, -5});
  // Third hidden unit is clipped from -5 to 0.
  const auto relu = forward(params, vec({1, 2}));
  CHECK(relu.first == vec({1, 3, 0}));
  CHECK(relu.second == vec({2, 2}));
}

TEST_CASE("forward rejects mismatched inputs") {
  const auto params = constant_output(3, vec({1, 1}));
  CHECK_THROWS_AS(forward(params, vec({1, 2})), DimensionError);
  CHECK_THROWS_AS(forward(params, Eigen::MatrixXd(Eigen::MatrixXd::Zero(2, 4))), DimensionError);
  CHECK_THROWS_AS(SemiAEParams::zeros(2, 3, 3, Activation::kIdentity, Activation::kIdentity).validate(),
                  DimensionError);
}

TEST_CASE("subset_loss examples") {
  const Eigen::MatrixXd x = Eigen::MatrixXd::Zero(1, 3);
  SUBCASE("perfect reconstruction") {
    const auto params = constant_output(3, vec({4, 2}));
    Eigen::MatrixXd t(1, 2);
    t << 4, 2;
    CHECK(subset_loss(params, x, t, 0.0) == 0.0);
  }
  SUBCASE("error [1, 1] with one row gives 2") {
    const auto params = constant_output(3, vec({1, 1}));
    CHECK(subset_loss(params, x, Eigen::MatrixXd::Zero(1, 2), 0.0) == 2.0);
  }
  SUBCASE("zero weights carry no regularization") {
    const auto params = constant_output(3, vec({1, 1}));
    CHECK(subset_loss(params, x, Eigen::MatrixXd::Zero(1, 2), 10.0) == 2.0);
  }
  SUBCASE("regularizer is (reg/2)(|Q|^2 + |Q1|^2)") {
    auto params = constant_output(3, vec({0, 0}));
    params.Q(0, 0) = 2.0;
    params.Q1(1, 1) = 1.0;
    // Q row 0 meets a zero input, so the data term is 0 + sigmoid(0)*1 at output 1.
    const double data = 0.25;
    CHECK(subset_loss(params, x, Eigen::MatrixXd::Zero(1, 2), 0.2) == doctest::Approx(data + 0.1 * 5.0));
  }
}

TEST_CASE("masked_loss examples") {
  const auto params = constant_output(3, vec({4, 9, 3}));
  const Eigen::MatrixXd x = Eigen::MatrixXd::Zero(1, 3);
  Eigen::MatrixXd t(1, 3);
  t << 5, 0, 3;
  MaskMatrix mask(1, 3);
  mask << true, false, true;
  CHECK(masked_loss(params, x, t, mask, 0.0) == 1.0);

  auto moved = params;
  moved.p1[1] = -100.0;
  CHECK(masked_loss(moved, x, t, mask, 0.0) == 1.0);

  std::mt19937_64 rng(5);
  const auto random = oracle::random_params(5, 3, 4, Activation::kTanh, Activation::kSigmoid, rng);
  const Eigen::MatrixXd bx = Eigen::MatrixXd::Random(6, 5);
  const Eigen::MatrixXd bt = Eigen::MatrixXd::Random(6, 4);
  CHECK(masked_loss(random, bx, bt, MaskMatrix::Constant(6, 4, true), 0.3) ==
        doctest::Approx(subset_loss(random, bx, bt, 0.3)).epsilon(1e-14));
  CHECK_THROWS_AS(masked_loss(random, bx, bt, MaskMatrix::Constant(6, 3, true), 0.3), DimensionError);
}

TEST_CASE("loss_and_gradients reports the same loss as the loss functions") {
  std::mt19937_64 rng(11);
  const auto params = oracle::random_params(6, 4, 4, Activation::kSigmoid, Activation::kIdentity, rng);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 6);
  const Eigen::MatrixXd t = Eigen::MatrixXd::Random(5, 4);
  MaskMatrix mask = MaskMatrix::Constant(5, 4, false);
  mask(0, 1) = mask(3, 3) = mask(4, 0) = true;
  const Eigen::MatrixXd weights = mask.cast<double>();
  CHECK(loss_and_gradients(params, x, t, nullptr, 0.2).first ==
        doctest::Approx(subset_loss(params, x, t, 0.2)).epsilon(1e-14));
  CHECK(loss_and_gradients(params, x, t, &weights, 0.2).first ==
        doctest::Approx(masked_loss(params, x, t, mask, 0.2)).epsilon(1e-14));
}

TEST_CASE("backward at a stationary point") {
  SUBCASE("zero error and no regularization gives zero gradients") {
    auto params = constant_output(3, vec({1, 2}));
    Eigen::MatrixXd t(2, 2);
    t << 1, 2, 1, 2;
    const auto grads = backward(params, Eigen::MatrixXd::Random(2, 3), t, nullptr, 0.0);
    CHECK(grads.dQ.isZero());
    CHECK(grads.dQ1.isZero());
    CHECK(grads.dp.isZero());
    CHECK(grads.dp1.isZero());
  }
  SUBCASE("zero error leaves only the weight decay") {
    SemiAEParams params = SemiAEParams::zeros(3, 2, 2, Activation::kSigmoid, Activation::kIdentity);
    params.Q.setConstant(0.5);  // inputs are zero, so Q does not reach the output
    params.p1 = vec({1, 1});
    params.Q1.setZero();
    Eigen::MatrixXd t = Eigen::MatrixXd::Ones(2, 2);
    const auto grads = backward(params, Eigen::MatrixXd::Zero(2, 3), t, nullptr, 0.3);
    CHECK(grads.dQ.isApprox(0.3 * params.Q));
    CHECK(grads.dQ1.isZero());
    CHECK(grads.dp.isZero());
    CHECK(grads.dp1.isZero());
  }
}

TEST_CASE("mask-false columns receive only weight decay") {
  std::mt19937_64 rng(3);
  const auto params = oracle::random_params(5, 3, 4, Activation::kSigmoid, Activation::kIdentity, rng);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 5);
  const Eigen::MatrixXd t = Eigen::MatrixXd::Random(4, 4);
  MaskMatrix mask = MaskMatrix::Constant(4, 4, true);
  mask.col(2).setConstant(false);
  const auto grads = backward(params, x, t, &mask, 0.25);
  CHECK(grads.dQ1.col(2).isApprox(0.25 * params.Q1.col(2)));
  CHECK(grads.dp1[2] == 0.0);
}

TEST_CASE("analytic gradients match finite differences on 4x3x2 instances") {
  std::mt19937_64 rng(17);
  for (int k = 0; k < 10; ++k) {
    const auto params = oracle::random_params(4, 3, 2, Activation::kSigmoid, Activation::kIdentity, rng);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 4);
    const Eigen::MatrixXd t = Eigen::MatrixXd::Random(3, 2);
    const auto analytic = backward(params, x, t, nullptr, 0.1);
    const auto numeric = oracle::finite_difference(
        params, [&](const SemiAEParams& probe) { return subset_loss(probe, x, t, 0.1); });
    CHECK(oracle::max_relative_error(analytic, numeric) <= 1e-4);
  }
}

TEST_CASE("gradient suite over every activation pair") {
  const auto report = property::finite_difference_gradients(3, 101);
  INFO(report.first_failure);
  CHECK(report.instances == 48);
  CHECK(report.passed());
}

TEST_CASE("degenerate Semi-AE equals the classical autoencoder") {
  const auto report = property::degenerate_equivalence(20, 202);
  INFO(report.first_failure);
  CHECK(report.passed());
}

TEST_CASE("masked loss matches brute force on every 3x3 mask") {
  const auto report = property::masked_loss_exhaustive(2, 303);
  INFO(report.first_failure);
  CHECK(report.instances == 1024);
  CHECK(report.passed());
}

TEST_CASE("glorot initialization") {
  std::mt19937_64 a(9);
  std::mt19937_64 b(9);
  const auto p = SemiAEParams::glorot(30, 10, 20, Activation::kSigmoid, Activation::kIdentity, a);
  const auto q = SemiAEParams::glorot(30, 10, 20, Activation::kSigmoid, Activation::kIdentity, b);
  CHECK(p == q);
  CHECK(p.Q.cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 40.0));
  CHECK(p.Q1.cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 30.0));
  CHECK(p.p.isZero());
  CHECK(p.p1.isZero());
  CHECK(p.Q.cwiseAbs().minCoeff() > 0.0);
}

TEST_CASE("parameters survive a JSON round trip bit for bit") {
  std::mt19937_64 rng(21);
  const auto params = oracle::random_params(7, 3, 5, Activation::kTanh, Activation::kRelu, rng, 1e3);
  const auto text = params_to_json(params).dump();
  const auto back = params_from_json(nlohmann::json::parse(text));
  CHECK(back == params);
  CHECK(back.g == Activation::kTanh);
  CHECK(back.f == Activation::kRelu);

  auto broken = params_to_json(params);
  broken["Q1"].erase(broken["Q1"].begin());
  CHECK_THROWS_AS(params_from_json(broken), DimensionError);
}

TEST_CASE("activations") {
  CHECK(activate(Activation::kSigmoid, 0.0) == 0.5);
  CHECK(activate(Activation::kSigmoid, -800.0) >= 0.0);
  CHECK(activate(Activation::kSigmoid, 800.0) == 1.0);
  CHECK(activate(Activation::kRelu, -2.0) == 0.0);
  CHECK(activation_derivative(Activation::kTanh, 0.0) == 1.0);
  CHECK(activation_derivative(Activation::kSigmoid, 0.0) == 0.25);
  CHECK(parse_activation("tanh") == Activation::kTanh);
  try {
    parse_activation("softmax");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("sigmoid") != std::string::npos);
  }
}
