#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "kolmex/gaussian_kernel.hpp"

using namespace kolmex;

namespace {

Eigen::MatrixXd proto_a0(double a) {
  Eigen::MatrixXd a0(1, 1);
  a0 << a;
  return a0;
}

}  // namespace

TEST_CASE("Gauss-Hermite rule integrates normal moments exactly") {
  auto rule = gauss_hermite(8);
  double m0 = 0, m2 = 0, m4 = 0, m1 = 0;
  for (int i = 0; i < 8; ++i) {
    const double z = rule.nodes[i], w = rule.weights[i];
    m0 += w;
    m1 += w * z;
    m2 += w * z * z;
    m4 += w * z * z * z * z;
  }
  CHECK(m0 == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(m1 == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(m2 == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(m4 == doctest::Approx(3.0).epsilon(1e-13));
}

TEST_CASE("prototype covariance and peak density") {
  auto geom = BlockStructure::asian_prototype();
  const double a = 0.09, theta = 0.25;
  GaussianKernel K(geom, proto_a0(a), 0.0, theta);
  Eigen::MatrixXd C(2, 2);
  C << a * theta, a * theta * theta / 2.0,  //
      a * theta * theta / 2.0, a * theta * theta * theta / 3.0;
  CHECK((K.covariance() - C).norm() < 1e-15);
  Eigen::VectorXd x(2);
  x << 1.0, 0.3;
  const double det = a * a * std::pow(theta, 4) / 12.0;
  CHECK(K.density(x, K.mean(x)) ==
        doctest::Approx(1.0 / (2.0 * std::numbers::pi * std::sqrt(det)))
            .epsilon(1e-12));
  CHECK((K.factor() * K.factor().transpose() - K.covariance()).norm() < 1e-15);
  CHECK_FALSE(K.ill_conditioned());
}

TEST_CASE("construction guards") {
  auto geom = BlockStructure::asian_prototype();
  CHECK_THROWS(GaussianKernel(geom, proto_a0(0.09), 1.0, 1.0));  // T <= t
  GaussianKernel tiny(geom, proto_a0(0.09), 0.0, 1e-7);
  CHECK(tiny.ill_conditioned());
}

TEST_CASE("gradient symmetry: grad_x Gamma = -e^{theta B*} grad_y Gamma") {
  auto geom = BlockStructure::asian_prototype();
  GaussianKernel K(geom, proto_a0(0.16), 0.1, 0.6);
  const double theta = 0.5;
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd x(2), y(2);
    x << 1.0 + u(rng), u(rng);
    y = K.mean(x) + Eigen::VectorXd::NullaryExpr(2, [&](int) { return 0.2 * u(rng); });
    Eigen::VectorXd grad_x(2), grad_y(2);
    for (int i = 0; i < 2; ++i)
      grad_x[i] = K.derivative(MultiIndex::unit(2, i), x, y);
    const double h = 1e-6;
    for (int i = 0; i < 2; ++i) {
      Eigen::VectorXd yp = y, ym = y;
      yp[i] += h;
      ym[i] -= h;
      grad_y[i] = (K.density(x, yp) - K.density(x, ym)) / (2.0 * h);
    }
    const Eigen::VectorXd rhs = -geom.matrix_exp(theta).transpose() * grad_y;
    CHECK((grad_x - rhs).norm() < 1e-8 * std::max(1.0, grad_x.norm()));
  }
}

TEST_CASE("polynomial identity: y Gamma = M(theta, x) Gamma") {
  auto geom = BlockStructure::asian_prototype();
  const double theta = 0.4;
  GaussianKernel K(geom, proto_a0(0.09), 0.0, theta);
  const Eigen::MatrixXd shift =
      K.covariance() * geom.matrix_exp(-theta).transpose();  // C e^{-theta B*}
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd x(2), y(2);
    x << 1.0 + u(rng), u(rng);
    y = K.mean(x) + Eigen::VectorXd::NullaryExpr(2, [&](int) { return 0.3 * u(rng); });
    const double g = K.density(x, y);
    Eigen::VectorXd grad(2);
    for (int l = 0; l < 2; ++l) grad[l] = K.derivative(MultiIndex::unit(2, l), x, y);
    for (int j = 0; j < 2; ++j) {
      const double rhs = K.mean(x)[j] * g + shift.row(j).dot(grad);
      CHECK(y[j] * g == doctest::Approx(rhs).epsilon(1e-10));
    }
  }
}

TEST_CASE("higher kernel derivatives match nested finite differences") {
  auto geom = BlockStructure::asian_prototype();
  GaussianKernel K(geom, proto_a0(0.09), 0.0, 0.5);
  Eigen::VectorXd x(2), y(2);
  x << 1.1, 0.2;
  y << 1.05, 0.75;
  auto f = [&](double x1, double x2) {
    Eigen::VectorXd xx(2);
    xx << x1, x2;
    return K.density(xx, y);
  };
  const double h = 1e-4;
  const double d11 =
      (f(x[0] + h, x[1]) - 2.0 * f(x[0], x[1]) + f(x[0] - h, x[1])) / (h * h);
  const double d12 = (f(x[0] + h, x[1] + h) - f(x[0] + h, x[1] - h) -
                      f(x[0] - h, x[1] + h) + f(x[0] - h, x[1] - h)) /
                     (4.0 * h * h);
  CHECK(K.derivative(MultiIndex{2, 0}, x, y) == doctest::Approx(d11).epsilon(1e-6));
  CHECK(K.derivative(MultiIndex{1, 1}, x, y) == doctest::Approx(d12).epsilon(1e-5));
  CHECK(K.derivative(MultiIndex{0, 0}, x, y) == doctest::Approx(f(x[0], x[1])));
}

TEST_CASE("Gamma solves the frozen-coefficient Kolmogorov equation") {
  auto geom = BlockStructure::asian_prototype();
  const double a = 0.09, T = 1.0;
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (int trial = 0; trial < 10; ++trial) {
    const double t = 0.3 + 0.2 * u(rng);
    Eigen::VectorXd x(2), y(2);
    x << 1.0 + u(rng), u(rng);
    GaussianKernel K(geom, proto_a0(a), t, T);
    y = K.mean(x) + Eigen::VectorXd::NullaryExpr(2, [&](int) { return 0.3 * u(rng); });
    const double h = 1e-6;
    const double dt = (GaussianKernel(geom, proto_a0(a), t + h, T).density(x, y) -
                       GaussianKernel(geom, proto_a0(a), t - h, T).density(x, y)) /
                      (2.0 * h);
    const double residual = 0.5 * a * K.derivative(MultiIndex{2, 0}, x, y) +
                            x[0] * K.derivative(MultiIndex{0, 1}, x, y) + dt;
    CHECK(std::abs(residual) < 1e-5 * std::max(1.0, std::abs(dt)));
  }
}

TEST_CASE("Chapman-Kolmogorov semigroup property by quadrature") {
  auto geom = BlockStructure::asian_prototype();
  const double a = 0.09;
  GaussianKernel K1(geom, proto_a0(a), 0.0, 0.3);   // t -> s
  GaussianKernel K2(geom, proto_a0(a), 0.3, 0.75);  // s -> T
  GaussianKernel K(geom, proto_a0(a), 0.0, 0.75);   // t -> T
  Eigen::VectorXd x(2), y(2);
  x << 1.0, 0.1;
  y << 1.1, 0.5;
  auto rule = gauss_hermite(64);
  double conv = 0.0;
  for (int i = 0; i < 64; ++i)
    for (int j = 0; j < 64; ++j) {
      Eigen::VectorXd eta(2);
      eta << rule.nodes[i], rule.nodes[j];
      const Eigen::VectorXd xi = K1.mean(x) + K1.factor() * eta;
      conv += rule.weights[i] * rule.weights[j] * K2.density(xi, y);
    }
  CHECK(conv == doctest::Approx(K.density(x, y)).epsilon(1e-7));
}

TEST_CASE("heat kernel dilation homogeneity") {
  for (int d : {2, 3}) {
    auto geom = BlockStructure::chain(d);
    const double lambda = 1.7, t0 = 0.3;
    GaussianKernel K1(geom, Eigen::MatrixXd::Identity(1, 1), 0.0, t0);
    GaussianKernel K2(geom, Eigen::MatrixXd::Identity(1, 1), 0.0, lambda * lambda * t0);
    Eigen::VectorXd y(d);
    for (int j = 0; j < d; ++j) y[j] = 0.1 * (j + 1);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(d);
    const double lhs = K2.density(zero, geom.dilate_spatial(lambda, y));
    const double rhs =
        std::pow(lambda, -geom.homogeneous_dim()) * K1.density(zero, y);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("leading term of the constant payoff") {
  auto geom = BlockStructure::asian_prototype();
  PayoffSpec one;
  one.phi = [](const Eigen::VectorXd&) { return 1.0; };
  one.name = "one";
  LeadingTerm L(geom, proto_a0(0.09), one, 0.0, 0.25);
  Eigen::VectorXd x(2);
  x << 1.0, 0.0;
  CHECK_FALSE(L.closed_form());
  CHECK(L.value(x) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(L.derivative(MultiIndex{1, 0}, x) == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(L.derivative(MultiIndex{0, 1}, x) == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(L.derivative(MultiIndex{2, 1}, x) == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(L.quadrature_converged());
}

TEST_CASE("fixed-strike closed form matches the hand Bachelier formula") {
  auto geom = BlockStructure::asian_prototype();
  const double a = 0.09, T = 0.25, K = 1.0;
  auto payoff = fixed_strike_call(T, K);
  LeadingTerm L(geom, proto_a0(a), payoff, 0.0, T);
  CHECK(L.closed_form());
  const double theta = T;
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  auto Phi = [](double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); };
  auto pdf = [](double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  };
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd x(2);
    x << 1.0 + u(rng), u(rng);
    const double mu = x[1] + theta * x[0];
    const double v = a * theta * theta * theta / 3.0;
    const double zeta = (mu - K * T) / std::sqrt(v);
    const double hand =
        ((mu - K * T) * Phi(zeta) + std::sqrt(v) * pdf(zeta)) / T;
    CHECK(L.value(x) == doctest::Approx(hand).epsilon(1e-13));
    // Delta at N=0: d_{x1} u0 = theta Phi(zeta) / T
    CHECK(L.derivative(MultiIndex{1, 0}, x) ==
          doctest::Approx(theta * Phi(zeta) / T).epsilon(1e-13));
  }
}

TEST_CASE("closed form and quadrature agree on the kinked payoff") {
  auto geom = BlockStructure::asian_prototype();
  const double a = 0.09, T = 0.25, K = 1.0;
  auto payoff = fixed_strike_call(T, K);
  LeadingTerm closed(geom, proto_a0(a), payoff, 0.0, T);
  PayoffSpec blind = payoff;  // same function, kink descriptor withheld
  blind.kink.reset();
  LeadingTerm quad(geom, proto_a0(a), blind, 0.0, T, 512);
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd x(2);
    x << 1.0 + u(rng), u(rng);
    CHECK(quad.value(x) ==
          doctest::Approx(closed.value(x)).epsilon(1e-7).scale(1.0));
  }
}

TEST_CASE("scaling of high derivatives of the leading term") {
  // |d1^3 u0| stays O(1) and |d1^4 u0| grows like theta^{-1/2} as theta -> 0,
  // comparing at states with a fixed normalized distance to the kink.
  auto geom = BlockStructure::asian_prototype();
  const double a = 0.09, T = 0.25;
  Eigen::VectorXd x(2);
  x << 1.0, 0.0;
  std::vector<double> thetas{1.0 / 4, 1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64};
  std::vector<double> l3, l4, lt;
  for (double theta : thetas) {
    const double v = a * theta * theta * theta / (3.0 * T * T);
    // strike chosen so the normalized log-moneyness zeta = 1 for every theta
    const double K = (x[1] + theta * x[0]) / T - std::sqrt(v);
    auto payoff = fixed_strike_call(T, K);
    LeadingTerm L(geom, proto_a0(a), payoff, T - theta, T);
    l3.push_back(std::log(std::abs(L.derivative(MultiIndex{3, 0}, x))));
    l4.push_back(std::log(std::abs(L.derivative(MultiIndex{4, 0}, x))));
    lt.push_back(std::log(theta));
  }
  auto slope = [&](const std::vector<double>& ly) {
    const int n = static_cast<int>(ly.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
      sx += lt[i];
      sy += ly[i];
      sxx += lt[i] * lt[i];
      sxy += lt[i] * ly[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
  };
  CHECK(std::abs(slope(l3) - 0.0) < 0.15);
  CHECK(std::abs(slope(l4) - (-0.5)) < 0.15);
}
