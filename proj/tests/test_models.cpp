#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "generators.hpp"
#include "holonomy/errors.hpp"
#include "holonomy/models.hpp"

using namespace holonomy;
using holonomy::testing::Gen;

namespace {

const ModelSpec kBerry{};

ModelSpec half(int q, int p, FactorOrder o = FactorOrder::symmetric) {
  return {ModelKind::map_spin_half, q, p, 1.0, o};
}
ModelSpec threehalf(int q, int p, FactorOrder o = FactorOrder::symmetric) {
  return {ModelKind::map_spin_threehalf, q, p, 1.0, o};
}

ParamPoint point(double mu, double lam, double th, double ph = 0.3, double eta = 0.7, double chi = 0.2) {
  ParamPoint x;
  x[Coord::mu] = mu;
  x[Coord::lambda] = lam;
  x[Coord::theta] = th;
  x[Coord::phi] = ph;
  x[Coord::eta] = eta;
  x[Coord::chi] = chi;
  return x;
}

// Every expected eigenvalue is matched by a distinct computed one.
bool same_spectrum(std::vector<Complex> expected, std::vector<Complex> computed, double tol) {
  for (auto z : expected) {
    auto it = std::min_element(computed.begin(), computed.end(),
                               [&](Complex a, Complex b) { return std::abs(a - z) < std::abs(b - z); });
    if (it == computed.end() || std::abs(*it - z) > tol) return false;
    computed.erase(it);
  }
  return true;
}

}  // namespace

TEST_CASE("unitary_at examples") {
  CHECK(op_norm(unitary_at(half(1, 1), point(0, 0, 1.1)) - CMatrix::Identity(2, 2)) < 1e-15);
  CHECK(op_norm(unitary_at(threehalf(0, 3), point(0, 0, 1.1)) - CMatrix::Identity(4, 4)) < 1e-15);

  SUBCASE("spin-1/2 closed form with gap and axis") {
    Gen g(21);
    for (int q : {0, 1, 3})
      for (int p : {0, 1, 3}) {
        const auto m = half(q, p);
        const ParamPoint x = g.map_point(m);
        const auto sd = spectral_data(m, x);
        // l from U = exp(-i base) (cos(D/2) - i sin(D/2) l.sigma).
        const CMatrix u = unitary_at(m, x);
        const Complex e = std::exp(kI * (x[Coord::mu] * q + x[Coord::lambda] * p) / 2.0);
        const CMatrix r = e * u;
        const double c = (r.trace() / 2.0).real();
        CHECK(std::abs(c - std::cos(sd.gap / 2)) < 1e-12);
        Eigen::Vector3d l;
        for (int k = 1; k <= 3; ++k) l(k - 1) = -((pauli(k) * r).trace() / 2.0).imag() / std::sin(sd.gap / 2);
        CHECK(std::abs(l.norm() - 1) < 1e-10);
        CMatrix ls = l(0) * pauli(1) + l(1) * pauli(2) + l(2) * pauli(3);
        CHECK(op_norm(u - mat_exp(0.5 * sd.gap * ls, -kI) * std::conj(e)) < 1e-12);
      }
  }
}

TEST_CASE("property: maps are 2pi-periodic in lambda") {
  Gen g(22);
  for (int trial = 0; trial < 40; ++trial) {
    const int q = g.integer(0, 4), p = g.integer(0, 4);
    for (const auto& m : {half(q, p), threehalf(q, p), half(q, p, FactorOrder::asymmetric)}) {
      ParamPoint x = g.map_point(half(0, 0));
      const CMatrix u0 = unitary_at(m, x);
      x[Coord::lambda] += 2 * kPi;
      CHECK(op_norm(unitary_at(m, x) - u0) < 1e-12);
    }
  }
}

TEST_CASE("property: mu-periodicity for even q, S-conjugation for odd q") {
  Gen g(23);
  for (int trial = 0; trial < 40; ++trial) {
    const int q = g.integer(0, 5), p = g.integer(0, 4);
    for (const auto& m : {half(q, p), threehalf(q, p)}) {
      ParamPoint x = g.map_point(half(0, 0));
      const CMatrix u0 = unitary_at(m, x);
      x[Coord::mu] += 2 * kPi;
      const CMatrix u1 = unitary_at(m, x);
      INFO("q " << q << " p " << p << " dim " << dim(m));
      if (q % 2 == 0) {
        CHECK(op_norm(u1 - u0) < 1e-12);
      } else {
        const CMatrix s = m.kind == ModelKind::map_spin_half ? pauli(3) : tau_matrices().tau[0];
        CHECK(op_norm(u1 - s * u0 * s) < 1e-12);
      }
      // The asymmetric order is periodic for every q.
      ModelSpec a = m;
      a.order = FactorOrder::asymmetric;
      x[Coord::mu] -= 2 * kPi;
      const CMatrix a0 = unitary_at(a, x);
      x[Coord::mu] += 2 * kPi;
      CHECK(op_norm(unitary_at(a, x) - a0) < 1e-12);
    }
  }
}

TEST_CASE("spectral_data examples") {
  SUBCASE("theta = pi/2 and B_mu = pi/2 give a gap of pi") {
    for (double lam : {0.3, 1.1, 2.9}) {
      const auto sd = spectral_data(half(0, 1), point(kPi / 2, lam, kPi / 2));
      CHECK(std::abs(sd.gap - kPi) < 1e-12);
    }
  }
  SUBCASE("B_lam = 0 gives 2 acos(cos B_mu)") {
    const auto sd = spectral_data(half(1, 2), point(1.3, 0.9, 0.8));
    CHECK(std::abs(sd.gap - 2 * std::acos(std::cos(sd.Bmu))) < 1e-12);
  }
  SUBCASE("degenerate points name the condition") {
    try {
      spectral_data(half(0, 0), point(0.0, 0.0, 1.0));
      FAIL("expected DegeneracyError");
    } catch (const DegeneracyError& e) {
      CHECK(std::string(e.what()).find("lattice point") != std::string::npos);
    }
  }
  SUBCASE("B_mu and B_lam definitions") {
    const auto sd = spectral_data(half(1, 3), point(1.2, 0.7, 1.0));
    CHECK(std::abs(sd.Bmu - 0.6) < 1e-15);
    CHECK(std::abs(sd.Blam + 0.35) < 1e-15);
  }
}

TEST_CASE("property: z+- unimodular and the spectral identity") {
  Gen g(24);
  for (int trial = 0; trial < 100; ++trial) {
    const int q = g.integer(0, 4), p = g.integer(0, 4);
    if (q == 2 || p == 2) continue;
    for (const auto& m : {half(q, p), threehalf(q, p)}) {
      const ParamPoint x = g.map_point(m);
      const auto sd = spectral_data(m, x);
      CHECK(std::abs(std::abs(sd.z_plus) - 1) < 1e-12);
      CHECK(std::abs(std::abs(sd.z_minus) - 1) < 1e-12);
      std::vector<Complex> expected{sd.z_plus, sd.z_minus};
      if (dim(m) == 4) expected = {sd.z_plus, sd.z_plus, sd.z_minus, sd.z_minus};
      const auto e = eig_unitary(unitary_at(m, x));
      INFO("q " << q << " p " << p << " dim " << dim(m));
      CHECK(same_spectrum(expected, e.eigenvalues, 1e-10));
      if (dim(m) == 4) {
        // Kramers pairs.
        REQUIRE(e.clusters.size() == 2);
        CHECK(std::abs(e.eigenvalues[0] - e.eigenvalues[1]) < 1e-10);
        CHECK(std::abs(e.eigenvalues[2] - e.eigenvalues[3]) < 1e-10);
      }
    }
  }
}

TEST_CASE("property: analytic frames are orthonormal eigenframes") {
  Gen g(25);
  for (int trial = 0; trial < 60; ++trial) {
    const int qs[] = {0, 1, 3};
    const int q = qs[g.integer(0, 2)], p = qs[g.integer(0, 2)];
    std::vector<std::pair<ModelSpec, ParamPoint>> cases;
    cases.push_back({kBerry, g.berry_point()});
    for (auto o : {FactorOrder::symmetric, FactorOrder::asymmetric}) {
      cases.push_back({half(q, p, o), g.map_point(half(q, p))});
      cases.push_back({threehalf(q, p, o), g.map_point(threehalf(q, p))});
    }
    for (const auto& [m, x] : cases) {
      const Frame f = eigenvectors_at(m, x);
      const auto z = analytic_eigenvalues(m, x);
      const CMatrix u = unitary_at(m, x);
      CHECK(unitarity_defect(f.columns) < 1e-12);
      for (Index k = 0; k < dim(m); ++k) CHECK((u * f.columns.col(k) - z[k] * f.columns.col(k)).norm() < 1e-10);
      if (dim(m) == 4 && m.order == FactorOrder::symmetric) {
        // Columns are (xi+, K xi+, xi-, K xi-).
        CHECK((f.columns.col(1) - time_reversal_K(f.columns.col(0))).norm() < 1e-14);
        CHECK((f.columns.col(3) - time_reversal_K(f.columns.col(2))).norm() < 1e-14);
        CHECK(std::abs(f.columns.col(1).dot(f.columns.col(0))) < 1e-14);
      }
    }
  }
}

TEST_CASE("hamiltonian_at") {
  ParamPoint x = point(0, 0, 0.7, 1.9);
  x[Coord::B] = 1.3;
  const CMatrix n = std::sin(0.7) * std::cos(1.9) * pauli(1) + std::sin(0.7) * std::sin(1.9) * pauli(2) +
                    std::cos(0.7) * pauli(3);
  CHECK(op_norm(hamiltonian_at(kBerry, x) - 1.3 * n) < 1e-14);
  ModelSpec b = kBerry;
  b.dt = 0.4;
  CHECK(op_norm(unitary_at(b, x) - mat_exp(1.3 * n, -kI * 0.4)) < 1e-14);

  Gen g(26);
  for (const auto& m : {half(1, 3), threehalf(3, 1)}) {
    const ParamPoint y = g.map_point(m);
    const CMatrix h = hamiltonian_at(m, y);
    CHECK(is_hermitian(h, 1e-12));
    CHECK(op_norm(mat_exp(h, -kI) - unitary_at(m, y)) < 1e-12);
  }
}

TEST_CASE("Berry frame at the north pole") {
  const double ph = 0.9;
  ParamPoint x = point(0, 0, 0.0, ph);
  const CMatrix f = analytic_frame(kBerry, x, 0.0);
  CHECK(std::abs(f(0, 0) - std::exp(-kI * ph / 2.0)) < 1e-15);
  CHECK(std::abs(f(1, 0)) < 1e-15);
  x[Coord::B] = 0;
  CHECK_THROWS_AS(eigenvectors_at(kBerry, x), DegeneracyError);
}

TEST_CASE("time reversal K") {
  CVector e1 = CVector::Zero(4), e2 = CVector::Zero(4), ke1 = CVector::Zero(4), ke2 = CVector::Zero(4);
  e1(0) = 1;
  e2(2) = 1;
  ke1(1) = 1;
  ke2(3) = 1;
  CHECK((time_reversal_K(e1) - ke1).norm() < 1e-15);
  CHECK((time_reversal_K(kI * e2) + kI * ke2).norm() < 1e-15);
  Gen g(27);
  for (int trial = 0; trial < 50; ++trial) {
    const CVector v = g.complex_vector(4);
    const Complex a(g.normal(), g.normal());
    CHECK((time_reversal_K(time_reversal_K(v)) + v).norm() < 1e-14);
    CHECK((time_reversal_K(a * v) - std::conj(a) * time_reversal_K(v)).norm() < 1e-12);
    // K v is orthogonal to v.
    CHECK(std::abs(v.dot(time_reversal_K(v))) < 1e-12);
  }
  CHECK_THROWS(time_reversal_K(CVector::Zero(2)));
}

TEST_CASE("tau algebra") {
  const auto& t = tau_matrices();
  const CMatrix i4 = CMatrix::Identity(4, 4);
  CHECK(op_norm(t.tau[0] - tau_combination((Vec5() << 1, 0, 0, 0, 0).finished())) == 0.0);
  CMatrix tau0 = i4;
  tau0.bottomRightCorner(2, 2) *= -1;
  CHECK(op_norm(t.tau[0] - tau0) == 0.0);

  SUBCASE("Clifford relations") {
    for (int a = 0; a < 5; ++a) {
      CHECK(is_hermitian(t.tau[a], 0.0));
      CHECK(std::abs(t.tau[a].trace()) < 1e-15);
      for (int b = a; b < 5; ++b) {
        const CMatrix ac = t.tau[a] * t.tau[b] + t.tau[b] * t.tau[a];
        CHECK(op_norm(ac - (a == b ? 2.0 : 0.0) * i4) < 1e-14);
      }
    }
  }
  SUBCASE("g identities") {
    CHECK(op_norm(t.g[0] - (-kI) * t.tau[0] * t.tau[3]) < 1e-15);
    CHECK(op_norm(t.g[1] - kI * t.tau[1] * t.tau[3]) < 1e-15);
    CHECK(op_norm(t.g[2] - (-kI) * t.tau[3] * t.tau[4]) < 1e-15);
    CHECK(op_norm(t.g[3] - (-kI) * t.tau[1] * t.tau[2]) < 1e-15);
  }
  SUBCASE("symmetric products") {
    Gen g(28);
    for (int trial = 0; trial < 20; ++trial) {
      const double lam = g.uniform(-4, 4);
      for (int a = 0; a < 5; ++a) {
        const CMatrix e = mat_exp(t.tau[a], -kI * lam);
        for (int b = 0; b < 5; ++b) {
          const CMatrix expect =
              a == b ? CMatrix(std::cos(2 * lam) * t.tau[b] - kI * std::sin(2 * lam) * i4) : t.tau[b];
          CHECK(op_norm(e * t.tau[b] * e - expect) < 1e-13);
        }
      }
    }
  }
  SUBCASE("combinations square to the norm and exponentiate in closed form") {
    Gen g(29);
    for (int trial = 0; trial < 30; ++trial) {
      Vec5 n;
      for (int a = 0; a < 5; ++a) n(a) = g.normal();
      const CMatrix tn = tau_combination(n);
      CHECK(op_norm(tn * tn - n.squaredNorm() * i4) < 1e-12);
      const Vec5 u = n / n.norm();
      const CMatrix tu = tau_combination(u);
      CHECK(op_norm(mat_exp(tu, -kI * 0.7) - (std::cos(0.7) * i4 - kI * std::sin(0.7) * tu)) < 1e-13);
    }
  }
}

TEST_CASE("quaternionic_eigs") {
  SUBCASE("tau_0 axis gives the basis up to phases") {
    const Frame f = quaternionic_eigs((Vec5() << 1, 0, 0, 0, 0).finished());
    for (Index k = 0; k < 4; ++k) CHECK(std::abs(std::abs(f.columns(k, k)) - 1) < 1e-14);
  }
  SUBCASE("eigenvectors at random axes") {
    Gen g(30);
    for (int trial = 0; trial < 50; ++trial) {
      const Vec5 n = g.unit5();
      const Frame f = quaternionic_eigs(n);
      const CMatrix tn = tau_combination(n);
      CHECK(unitarity_defect(f.columns) < 1e-12);
      const double sign[4] = {1, 1, -1, -1};
      for (Index k = 0; k < 4; ++k) CHECK((tn * f.columns.col(k) - sign[k] * f.columns.col(k)).norm() < 1e-12);
      CHECK((f.columns.col(1) - time_reversal_K(f.columns.col(0))).norm() < 1e-12);
      CHECK((f.columns.col(3) - time_reversal_K(f.columns.col(2))).norm() < 1e-12);
    }
  }
  SUBCASE("d1 and d2 are orthonormal") {
    Gen g(31);
    for (int trial = 0; trial < 30; ++trial) {
      ParamPoint x = point(0.4, 0.9, 0.0, g.uniform(0, 6), g.uniform(0, 3), g.uniform(0, 6));
      // At zenith 0 the xi+ and xi- columns are d1 and d2.
      const CMatrix f = analytic_frame(threehalf(0, 0), x, 0.0);
      CHECK(std::abs(f.col(0).norm() - 1) < 1e-14);
      CHECK(std::abs(f.col(2).norm() - 1) < 1e-14);
      CHECK(std::abs(f.col(0).dot(f.col(2))) < 1e-14);
    }
  }
  CHECK_THROWS(quaternionic_eigs((Vec5() << 1, 1, 0, 0, 0).finished()));
}

TEST_CASE("degeneracy_predicate examples") {
  // q = p = 0: B_mu = mu, B_lam = lambda.
  const auto m = half(0, 0);
  CHECK(degeneracy_predicate(m, point(0.4 * kPi, 0.6 * kPi, 0.0)) == Degeneracy::on_line);
  CHECK(degeneracy_predicate(m, point(kPi, 2 * kPi, 1.0)) == Degeneracy::on_lattice_point);
  CHECK(degeneracy_predicate(m, point(kPi / 2, kPi / 2, kPi / 2)) == Degeneracy::clear);
  // At the south pole the line is B_lam - B_mu.
  CHECK(degeneracy_predicate(m, point(0.4 * kPi, 0.6 * kPi, kPi)) == Degeneracy::clear);
  CHECK(degeneracy_predicate(m, point(0.3 * kPi, 1.3 * kPi, kPi)) == Degeneracy::on_line);
  ParamPoint b = point(0, 0, 1.0);
  b[Coord::B] = 0;
  CHECK(degeneracy_predicate(kBerry, b) == Degeneracy::on_lattice_point);
}

TEST_CASE("property: predicate agrees with gap closure") {
  Gen g(32);
  for (int trial = 0; trial < 200; ++trial) {
    const int q = g.integer(0, 1) ? 1 : 3, p = g.integer(0, 3);
    const auto m = half(q, p);
    ParamPoint x = g.map_point(half(0, 0), 0.0);
    x[Coord::theta] = g.integer(0, 1) ? 0.0 : kPi;
    // Put the point on the relevant pole line.
    const double target = g.integer(-2, 2) * kPi;
    const double bm = Bmu(m, x);
    const double bl = x[Coord::theta] == 0.0 ? target - bm : target + bm;
    if (p == 2) continue;
    x[Coord::lambda] = 2 * bl / (2 - p);
    CHECK(degeneracy_predicate(m, x) != Degeneracy::clear);
    CHECK_THROWS_AS(spectral_data(m, x), DegeneracyError);
  }
}

TEST_CASE("property: eigenvalue anholonomy over a lambda cycle") {
  Gen g(33);
  for (int trial = 0; trial < 10; ++trial) {
    const int p = g.integer(0, 4);
    if (p == 2) continue;
    const auto m = half(g.integer(0, 1), p);
    const ParamPoint x0 = g.map_point(m);
    // Track the two eigenvalues of the bare unitary by nearest continuation.
    auto e0 = eig_unitary(unitary_at(m, x0)).eigenvalues;
    std::vector<Complex> tracked = e0;
    const int n = 2000;
    for (int k = 1; k <= n; ++k) {
      ParamPoint x = x0;
      x[Coord::lambda] += 2 * kPi * k / n;
      auto e = eig_unitary(unitary_at(m, x)).eigenvalues;
      if (std::abs(e[0] - tracked[0]) + std::abs(e[1] - tracked[1]) >
          std::abs(e[1] - tracked[0]) + std::abs(e[0] - tracked[1]))
        std::swap(e[0], e[1]);
      tracked = e;
    }
    const bool swapped = std::abs(tracked[0] - e0[1]) < 1e-8 && std::abs(tracked[1] - e0[0]) < 1e-8;
    const bool fixed = std::abs(tracked[0] - e0[0]) < 1e-8 && std::abs(tracked[1] - e0[1]) < 1e-8;
    INFO("p " << p);
    CHECK(swapped == (p % 2 == 1));
    CHECK(fixed == (p % 2 == 0));
  }
}
