#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "kolmex/time_poly.hpp"

using namespace kolmex;

TEST_CASE("arithmetic and evaluation") {
  auto p = TimePolynomial::theta_power(2, 3.0) + TimePolynomial::delta_power(0, 1, -1.0);
  // 3 Theta^2 - Delta_0 at Theta=2, Delta_0=0.5
  CHECK(p.evaluate(2.0, {0.5}) == doctest::Approx(11.5));
  auto q = p * p;
  CHECK(q.evaluate(2.0, {0.5}) == doctest::Approx(11.5 * 11.5));
  CHECK((p * 0.0).is_zero());
  CHECK((p + p * -1.0).is_zero());
}

TEST_CASE("like terms merge") {
  auto p = TimePolynomial::theta_power(1, 2.0) + TimePolynomial::theta_power(1, 3.0);
  CHECK(p.terms().size() == 1);
  CHECK(p.terms()[0].c == doctest::Approx(5.0));
}

TEST_CASE("relabel moves the pending slot") {
  auto p = TimePolynomial::delta_power(0, 2, 4.0) * TimePolynomial::theta_power(1);
  auto q = p.relabel_delta(2);
  CHECK(q.top_slot() == 2);
  CHECK(q.evaluate(3.0, {0.0, 0.0, 0.5}) == doctest::Approx(4.0 * 3.0 * 0.25));
}

TEST_CASE("innermost simplex integral has zero lower limit") {
  // int_0^Theta Delta^2 dDelta = Theta^3 / 3
  auto p = TimePolynomial::delta_power(0, 2).integrate_slot(0);
  CHECK(p.top_slot() == -1);
  CHECK(p.evaluate(2.0) == doctest::Approx(8.0 / 3.0));
}

TEST_CASE("nested simplex integral matches the iterated formula") {
  // int_0^Theta int_{Delta_0}^Theta Delta_1 dDelta_1 dDelta_0
  //   = int_0^Theta (Theta^2 - Delta_0^2)/2 dDelta_0 = Theta^3 / 3
  auto p = TimePolynomial::delta_power(1, 1).integrate_slot(1).integrate_slot(0);
  CHECK(p.top_slot() == -1);
  CHECK(p.evaluate(1.5) == doctest::Approx(std::pow(1.5, 3) / 3.0));
}

TEST_CASE("ordered simplex volume") {
  // int over 0 < Delta_0 < Delta_1 < Delta_2 < Theta of 1 = Theta^3 / 3!
  auto p = TimePolynomial::constant(1.0)
               .integrate_slot(2)
               .integrate_slot(1)
               .integrate_slot(0);
  CHECK(p.evaluate(2.0) == doctest::Approx(8.0 / 6.0));
}

TEST_CASE("integration rejects pending higher slots") {
  auto p = TimePolynomial::delta_power(1, 1);
  CHECK_THROWS(p.integrate_slot(0));
}

TEST_CASE("pruning drops small monomials only") {
  auto p = TimePolynomial::theta_power(1, 1.0) + TimePolynomial::theta_power(2, 1e-18);
  auto q = p.pruned(1e-12);
  CHECK(q.terms().size() == 1);
  CHECK(q.evaluate(1.0) == doctest::Approx(1.0));
}
