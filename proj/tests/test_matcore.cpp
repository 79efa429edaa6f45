#include <doctest.h>

#include <cmath>

#include "generators.hpp"
#include "holonomy/errors.hpp"
#include "holonomy/matcore.hpp"

using namespace holonomy;
using holonomy::testing::Gen;

namespace {

CMatrix diag2(Complex a, Complex b) {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

SampledCurve constant_curve(const CMatrix& a, double s0, double s1, int n) {
  SampledCurve c;
  for (int k = 0; k <= n; ++k) c.samples.push_back({s0 + (s1 - s0) * k / n, a});
  return c;
}

// A(s) = cos(s) sx + sin(2s) sz + s/4 sy: non-commuting at different s.
SampledCurve twisting_curve(int n) {
  SampledCurve c;
  for (int k = 0; k <= n; ++k) {
    const double s = 2.0 * k / n;
    c.samples.push_back({s, std::cos(s) * pauli(1) + std::sin(2 * s) * pauli(3) + s / 4 * pauli(2)});
  }
  return c;
}

}  // namespace

TEST_CASE("mat_exp closed forms") {
  CHECK(op_norm(mat_exp(CMatrix::Zero(2, 2), Complex(0.3, -1.7)) - CMatrix::Identity(2, 2)) < 1e-15);
  CHECK(op_norm(mat_exp(pauli(2), -kI * kPi) + CMatrix::Identity(2, 2)) < 1e-14);
  const CMatrix expect = diag2(std::exp(-kI * kPi / 3.0), std::exp(kI * kPi / 3.0));
  CHECK(op_norm(mat_exp(pauli(3), -kI * kPi / 3.0) - expect) < 1e-14);
  // Non-Hermitian input goes through the general branch.
  CMatrix n = CMatrix::Zero(2, 2);
  n(0, 1) = 1;
  CMatrix expect_n = CMatrix::Identity(2, 2);
  expect_n(0, 1) = 2.5;
  CHECK(op_norm(mat_exp(n, 2.5) - expect_n) < 1e-14);
}

TEST_CASE("mat_exp rejects non-finite input") {
  CMatrix h = CMatrix::Identity(2, 2);
  h(1, 0) = Complex(std::nan(""), 0);
  CHECK_THROWS_AS(mat_exp(h, -kI), std::domain_error);
}

TEST_CASE("property: mat_exp of a Hermitian matrix is unitary") {
  Gen g(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = g.integer(1, 8);
    const CMatrix h = g.hermitian(n);
    const double t = g.uniform(-10, 10);
    const CMatrix u = mat_exp(h, -kI * t);
    INFO("trial " << trial << " n " << n << " t " << t);
    CHECK(unitarity_defect(u) < 1e-10);
  }
}

TEST_CASE("eig_unitary examples") {
  SUBCASE("identity forms one cluster") {
    const auto e = eig_unitary(CMatrix::Identity(2, 2));
    REQUIRE(e.clusters.size() == 1);
    CHECK(e.clusters[0].size() == 2);
    for (auto z : e.eigenvalues) CHECK(std::abs(z - 1.0) < 1e-14);
  }
  SUBCASE("diagonal phases split") {
    const auto e = eig_unitary(mat_exp(pauli(3), -kI * kPi / 2.0));
    REQUIRE(e.clusters.size() == 2);
    // Sorted by phase: -pi/2 first.
    CHECK(std::abs(e.eigenvalues[0] - std::exp(-kI * kPi / 2.0)) < 1e-14);
    CHECK(std::abs(e.eigenvalues[1] - std::exp(kI * kPi / 2.0)) < 1e-14);
  }
  SUBCASE("non-unitary input is rejected") {
    CHECK_THROWS_AS(eig_unitary(2.0 * CMatrix::Identity(2, 2)), PreconditionError);
  }
  SUBCASE("clusters merge across the branch cut") {
    const CMatrix u = diag2(std::exp(kI * (kPi - 1e-10)), std::exp(kI * (-kPi + 1e-10)));
    CHECK(eig_unitary(u).clusters.size() == 1);
  }
}

TEST_CASE("property: eig_unitary returns unimodular eigenvalues and an orthonormal eigenbasis") {
  Gen g(12);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = g.integer(2, 8);
    const CMatrix u = mat_exp(g.hermitian(n), -kI * g.uniform(0.1, 3));
    const auto e = eig_unitary(u);
    INFO("trial " << trial);
    CHECK(unitarity_defect(e.vectors) < 1e-10);
    for (Index k = 0; k < n; ++k) {
      CHECK(std::abs(std::abs(e.eigenvalues[k]) - 1) < 1e-10);
      CHECK((u * e.vectors.col(k) - e.eigenvalues[k] * e.vectors.col(k)).norm() < 1e-9);
    }
  }
}

TEST_CASE("ordered_exp examples") {
  SUBCASE("zero curve") {
    const auto c = constant_curve(CMatrix::Zero(3, 3), 0, 1, 8);
    CHECK(op_norm(ordered_exp(c, Ordering::right, -kI) - CMatrix::Identity(3, 3)) < 1e-15);
  }
  SUBCASE("sigma_y / 2 over a full turn") {
    const auto c = constant_curve(pauli(2) / 2.0, 0, 2 * kPi, 64);
    CHECK(op_norm(ordered_exp(c, Ordering::right, -kI) + CMatrix::Identity(2, 2)) < 1e-13);
  }
  SUBCASE("sigma_z cos(theta) / 2 with the left ordering") {
    const double th = 0.8;
    const auto c = constant_curve(pauli(3) * std::cos(th) / 2.0, 0, 2 * kPi, 64);
    const CMatrix expect = mat_exp(pauli(3), kI * kPi * std::cos(th));
    CHECK(op_norm(ordered_exp(c, Ordering::left, kI) - expect) < 1e-13);
  }
  SUBCASE("too few samples") {
    SampledCurve c;
    c.samples.push_back({0, CMatrix::Zero(2, 2)});
    CHECK_THROWS(ordered_exp(c, Ordering::left, kI));
  }
  SUBCASE("dimension mismatch") {
    SampledCurve c;
    c.samples.push_back({0, CMatrix::Zero(2, 2)});
    c.samples.push_back({1, CMatrix::Zero(3, 3)});
    CHECK_THROWS(ordered_exp(c, Ordering::left, kI));
  }
}

TEST_CASE("property: ordered_exp left and right orderings are adjoint") {
  Gen g(13);
  for (int trial = 0; trial < 30; ++trial) {
    const Index n = g.integer(2, 5);
    SampledCurve c;
    const CMatrix a = g.hermitian(n), b = g.hermitian(n);
    for (int k = 0; k <= 40; ++k) {
      const double s = 0.05 * k;
      c.samples.push_back({s, a * std::cos(3 * s) + b * s});
    }
    const CMatrix left = ordered_exp(c, Ordering::left, kI);
    const CMatrix right = ordered_exp(c, Ordering::right, -kI);
    CHECK(op_norm(left - right.adjoint()) < 1e-12);
    CHECK(unitarity_defect(left) < 1e-12);
  }
}

TEST_CASE("ordered_exp converges at second order under step halving") {
  const CMatrix ref = ordered_exp(twisting_curve(1 << 14), Ordering::right, -kI);
  const double e1 = op_norm(ordered_exp(twisting_curve(64), Ordering::right, -kI) - ref);
  const double e2 = op_norm(ordered_exp(twisting_curve(128), Ordering::right, -kI) - ref);
  const double order = std::log2(e1 / e2);
  INFO("errors " << e1 << " " << e2);
  CHECK(order >= 1.9);
}
