#include "holonomy/matcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

#include "holonomy/errors.hpp"

namespace holonomy {

CMatrix pauli(int k) {
  CMatrix s(2, 2);
  switch (k) {
    case 0: s << 1, 0, 0, 1; break;
    case 1: s << 0, 1, 1, 0; break;
    case 2: s << 0, -kI, kI, 0; break;
    case 3: s << 1, 0, 0, -1; break;
    default: throw std::out_of_range("pauli index must be 0..3");
  }
  return s;
}

bool all_finite(const CMatrix& m) {
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) return false;
  return true;
}

bool is_hermitian(const CMatrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

double op_norm(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues()(0);
}

double unitarity_defect(const CMatrix& u) {
  return op_norm(u.adjoint() * u - CMatrix::Identity(u.cols(), u.cols()));
}

CMatrix mat_exp(const CMatrix& h, Complex scale) {
  if (h.rows() != h.cols()) throw std::invalid_argument("mat_exp: matrix not square");
  if (!all_finite(h) || !std::isfinite(scale.real()) || !std::isfinite(scale.imag()))
    throw std::domain_error("mat_exp: non-finite input");
  const Index n = h.rows();
  if (n == 0) return h;
  const double hn = h.cwiseAbs().maxCoeff();
  if (is_hermitian(h, 1e-14 * (1.0 + hn))) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (h + h.adjoint()));
    const auto& ev = es.eigenvalues();
    CVector d(n);
    for (Index i = 0; i < n; ++i) d(i) = std::exp(scale * ev(i));
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
  }
  CMatrix a = scale * h;
  return a.exp();
}

double arg(Complex z) { return std::arg(z); }

UnitaryEigen eig_unitary(const CMatrix& u, double degeneracy_tol) {
  if (u.rows() != u.cols()) throw PreconditionError("eig_unitary: matrix not square");
  if (!all_finite(u)) throw PreconditionError("eig_unitary: non-finite entries");
  const double defect = unitarity_defect(u);
  if (defect > 1e-10)
    throw PreconditionError("eig_unitary: input not unitary (defect " + std::to_string(defect) + ")");
  const Index n = u.rows();

  // A normal matrix has a diagonal Schur form, so Q is an orthonormal eigenbasis
  // even inside degenerate subspaces.
  Eigen::ComplexSchur<CMatrix> schur(u);
  const CMatrix& t = schur.matrixT();
  const CMatrix& q = schur.matrixU();

  std::vector<double> phase(n);
  for (Index i = 0; i < n; ++i) phase[i] = std::arg(t(i, i));
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return phase[a] < phase[b]; });

  // Group neighbours on the circle; the first and last run merge across the branch cut.
  std::vector<Cluster> runs;
  for (Index k = 0; k < n; ++k) {
    if (k > 0 && phase[order[k]] - phase[order[k - 1]] < degeneracy_tol)
      runs.back().push_back(order[k]);
    else
      runs.push_back({order[k]});
  }
  if (runs.size() > 1 && phase[order[0]] + 2 * kPi - phase[order[n - 1]] < degeneracy_tol) {
    Cluster merged = runs.back();
    merged.insert(merged.end(), runs.front().begin(), runs.front().end());
    runs.front() = std::move(merged);
    runs.pop_back();
  }

  UnitaryEigen out;
  out.vectors.resize(n, n);
  Index col = 0;
  for (const auto& run : runs) {
    Cluster c;
    for (Index src : run) {
      const Complex z = t(src, src);
      out.eigenvalues.push_back(z / std::abs(z));
      out.vectors.col(col) = q.col(src);
      c.push_back(col++);
    }
    out.clusters.push_back(std::move(c));
  }
  return out;
}

CMatrix ordered_exp(const SampledCurve& curve, Ordering ordering, Complex sign) {
  const auto& smp = curve.samples;
  if (smp.size() < 2) throw std::invalid_argument("ordered_exp: need at least two samples");
  const Index n = smp.front().m.rows();
  for (const auto& x : smp)
    if (x.m.rows() != n || x.m.cols() != n)
      throw std::invalid_argument("ordered_exp: sample dimension mismatch");
  CMatrix acc = CMatrix::Identity(n, n);
  for (std::size_t k = 0; k + 1 < smp.size(); ++k) {
    const double ds = smp[k + 1].s - smp[k].s;
    if (!(ds > 0)) throw std::invalid_argument("ordered_exp: samples not strictly increasing");
    const CMatrix step = mat_exp(0.5 * (smp[k].m + smp[k + 1].m), sign * ds);
    acc = ordering == Ordering::left ? CMatrix(step * acc) : CMatrix(acc * step);
  }
  return acc;
}

}  // namespace holonomy
