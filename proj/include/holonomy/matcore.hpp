#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace holonomy {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Index = Eigen::Index;
using Cluster = std::vector<Index>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr Complex kI{0.0, 1.0};

// Pauli matrices; pauli(0) is the identity.
CMatrix pauli(int k);

bool all_finite(const CMatrix& m);
bool is_hermitian(const CMatrix& m, double tol);

// Largest singular value.
double op_norm(const CMatrix& m);
// ||U^dag U - I|| in operator norm.
double unitarity_defect(const CMatrix& u);

// exp(scale * H).
CMatrix mat_exp(const CMatrix& h, Complex scale);

struct UnitaryEigen {
  std::vector<Complex> eigenvalues;   // unimodular
  CMatrix vectors;                    // orthonormal columns
  std::vector<Cluster> clusters;      // contiguous index runs
};

// Columns come out grouped by cluster, clusters ordered by eigenphase in (-pi, pi].
UnitaryEigen eig_unitary(const CMatrix& u, double degeneracy_tol = 1e-8);

enum class Ordering { left, right };

struct CurveSample {
  double s;
  CMatrix m;
};

struct SampledCurve {
  std::vector<CurveSample> samples;
  bool closed = false;
};

// Product of mat_exp(A_mid, sign * ds) over the segments of the curve.
// left: later segments multiply from the left; right: from the right.
CMatrix ordered_exp(const SampledCurve& curve, Ordering ordering, Complex sign);

// Phase of z in (-pi, pi].
double arg(Complex z);

}  // namespace holonomy
