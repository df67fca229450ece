#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "kolmex/geometry.hpp"

using namespace kolmex;

TEST_CASE("multi-index arithmetic and combinatorics") {
  MultiIndex a{2, 1, 3};
  MultiIndex b{1, 0, 2};
  CHECK(a.order() == 6);
  CHECK((a + b) == MultiIndex{3, 1, 5});
  CHECK((a - b) == MultiIndex{1, 1, 1});
  CHECK(b.leq(a));
  CHECK_FALSE(a.leq(b));
  CHECK(a.factorial() == doctest::Approx(2.0 * 1.0 * 6.0));
  CHECK(binom_prod(a, b) == doctest::Approx(2.0 * 1.0 * 3.0));
  CHECK(falling_prod(a, b) == doctest::Approx(2.0 * 1.0 * 6.0));
  Eigen::VectorXd x(3);
  x << 2.0, 5.0, -1.0;
  CHECK(a.monomial(x) == doctest::Approx(4.0 * 5.0 * -1.0));
}

TEST_CASE("B-length uses the dilation exponents") {
  auto geom = BlockStructure::asian_prototype();
  // sigma = (1, 3) for the prototype
  CHECK(MultiIndex{1, 0}.blength(geom.sigma()) == 1);
  CHECK(MultiIndex{0, 1}.blength(geom.sigma()) == 3);
  CHECK(MultiIndex{2, 1}.blength(geom.sigma()) == 5);
}

TEST_CASE("prototype block structure") {
  auto geom = BlockStructure::asian_prototype();
  CHECK(geom.dim() == 2);
  CHECK(geom.p0() == 1);
  CHECK(geom.steps() == 1);
  Eigen::MatrixXd B(2, 2);
  B << 0, 0, 1, 0;
  CHECK((geom.B() - B).norm() == doctest::Approx(0.0));
  CHECK(geom.B_power(2).isZero(0.0));
  CHECK(geom.homogeneous_dim() == 1 + 3);  // Q = sum sigma_j
}

TEST_CASE("chain structure of length 3") {
  auto geom = BlockStructure::chain(3);
  CHECK(geom.dim() == 3);
  CHECK(geom.steps() == 2);
  CHECK(geom.sigma() == std::vector<int>{1, 3, 5});
  CHECK(geom.B_power(3).isZero(0.0));
  CHECK_FALSE(geom.B_power(2).isZero(0.0));
}

TEST_CASE("rank-deficient block is rejected") {
  Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(1, 1);
  CHECK_THROWS(BlockStructure(1, {bad}));
}

TEST_CASE("non-nilpotent assembly is impossible by construction") {
  // blocks with increasing widths are rejected before B is formed
  Eigen::MatrixXd wide(2, 1);
  wide << 1, 1;
  Eigen::MatrixXd tall(1, 2);
  tall << 1, 0;
  CHECK_THROWS(BlockStructure(1, {wide, tall}));
}

TEST_CASE("matrix exponential matches the truncated series exactly") {
  auto geom = BlockStructure::chain(3);
  const double t = 0.7;
  Eigen::MatrixXd expected = Eigen::MatrixXd::Identity(3, 3) + t * geom.B() +
                             0.5 * t * t * geom.B() * geom.B();
  CHECK((geom.matrix_exp(t) - expected).norm() < 1e-14);
}

TEST_CASE("group law: identity, inverse, associativity") {
  auto geom = BlockStructure::chain(3);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  auto rand_pt = [&] {
    GroupPoint z;
    z.t = u(rng);
    z.x = Eigen::VectorXd::NullaryExpr(3, [&](int) { return u(rng); });
    return z;
  };
  const GroupPoint e{0.0, Eigen::VectorXd::Zero(3)};
  for (int trial = 0; trial < 50; ++trial) {
    const auto z = rand_pt(), w = rand_pt(), v = rand_pt();
    auto close = [](const GroupPoint& a, const GroupPoint& b) {
      return std::abs(a.t - b.t) < 1e-12 && (a.x - b.x).norm() < 1e-12;
    };
    CHECK(close(geom.compose(z, e), z));
    CHECK(close(geom.compose(e, z), z));
    CHECK(close(geom.compose(geom.inverse(z), z), e));
    CHECK(close(geom.compose(z, geom.inverse(z)), e));
    CHECK(close(geom.compose(geom.compose(z, w), v),
                geom.compose(z, geom.compose(w, v))));
  }
}

TEST_CASE("dilations are group automorphisms") {
  auto geom = BlockStructure::chain(2);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (double lambda : {0.3, 1.7}) {
    for (int trial = 0; trial < 20; ++trial) {
      GroupPoint z{u(rng), Eigen::VectorXd::NullaryExpr(2, [&](int) { return u(rng); })};
      GroupPoint w{u(rng), Eigen::VectorXd::NullaryExpr(2, [&](int) { return u(rng); })};
      const auto lhs = geom.dilate(lambda, geom.compose(z, w));
      const auto rhs = geom.compose(geom.dilate(lambda, z), geom.dilate(lambda, w));
      CHECK(std::abs(lhs.t - rhs.t) < 1e-12);
      CHECK((lhs.x - rhs.x).norm() < 1e-12);
    }
  }
}

TEST_CASE("homogeneous norm is 1-homogeneous under dilations") {
  auto geom = BlockStructure::chain(3);
  GroupPoint z{0.4, Eigen::VectorXd(3)};
  z.x << 1.2, -0.7, 0.3;
  for (double lambda : {0.1, 2.5}) {
    CHECK(geom.homogeneous_norm(geom.dilate(lambda, z)) ==
          doctest::Approx(lambda * geom.homogeneous_norm(z)).epsilon(1e-12));
  }
}
