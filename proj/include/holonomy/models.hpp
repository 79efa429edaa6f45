#pragma once

#include <array>
#include <string_view>
#include <vector>

#include "holonomy/matcore.hpp"
#include "holonomy/path.hpp"

namespace holonomy {

enum class ModelKind { berry_spin_half, map_spin_half, map_spin_threehalf };

// symmetric: V(mu/2) X(lambda) V(mu/2). asymmetric: V(mu) X(lambda), which is
// 2pi-periodic in mu for every q.
enum class FactorOrder { symmetric, asymmetric };

enum class Topology { circle, sphere_zenith, sphere_azimuth, ray };

struct ModelSpec {
  ModelKind kind = ModelKind::berry_spin_half;
  int q = 0;
  int p = 0;
  double dt = 1.0;  // Berry only: U = exp(-i H dt)
  FactorOrder order = FactorOrder::symmetric;
};

std::string_view model_name(ModelKind k);
std::optional<ModelKind> model_from_name(std::string_view name);
std::string_view factor_order_name(FactorOrder o);

Index dim(const ModelSpec& m);
const std::vector<Coord>& coordinates(ModelKind k);
Topology topology(Coord c);
bool uses(const ModelSpec& m, Coord c);
void validate(const ModelSpec& m);

// Frame: ordered orthonormal columns living at a parameter point.
struct Frame {
  CMatrix columns;
  std::vector<int> labels;  // cluster id of each column
  ParamPoint param;
};

CMatrix unitary_at(const ModelSpec& m, const ParamPoint& x);

// Berry: H = B n.sigma. Maps: the Floquet generator H_F with U = exp(-i H_F).
CMatrix hamiltonian_at(const ModelSpec& m, const ParamPoint& x);

struct SpectralData {
  Complex z_plus, z_minus;
  double gap;     // Delta in [0, 2pi]
  double zenith;  // Theta = atan2(sin, cos) in (-pi, pi]
  double Bmu, Blam;
};

double Bmu(const ModelSpec& m, const ParamPoint& x);
double Blam(const ModelSpec& m, const ParamPoint& x);

// Principal-branch zenith angle; theta itself for the Berry model.
double zenith(const ModelSpec& m, const ParamPoint& x);
// d Theta / d c.
double zenith_derivative(const ModelSpec& m, const ParamPoint& x, Coord c);

SpectralData spectral_data(const ModelSpec& m, const ParamPoint& x, double tol = 1e-9);

// Cluster layout of the analytic frame: {{0},{1}} or {{0,1},{2,3}}.
std::vector<Cluster> analytic_clusters(const ModelSpec& m);
// Eigenvalues of unitary_at in analytic column order.
std::vector<Complex> analytic_eigenvalues(const ModelSpec& m, const ParamPoint& x);

// The closed-form eigenframe with an explicit (continued) zenith angle.
CMatrix analytic_frame(const ModelSpec& m, const ParamPoint& x, double zenith_value);
Frame eigenvectors_at(const ModelSpec& m, const ParamPoint& x);

struct ConnectionSample {
  double s = 0;
  CMatrix a;
  CMatrix a_diag;
};

CMatrix block_diagonal(const CMatrix& a, const std::vector<Cluster>& clusters);

// Closed-form connection i f^dag d_c f for the analytic frame.
ConnectionSample analytic_connection(const ModelSpec& m, const ParamPoint& x, Coord direction);
ConnectionSample analytic_connection(const ModelSpec& m, const ParamPoint& x, Coord direction, double zenith_value);

enum class Degeneracy { clear, on_line, on_lattice_point };
std::string_view degeneracy_name(Degeneracy d);

Degeneracy degeneracy_predicate(const ModelSpec& m, const ParamPoint& x, double tol = 1e-9);

// Throws DegeneracyError if the loop meets a degeneracy set.
void check_loop_clear(const ModelSpec& m, const LoopPath& loop, double tol = 1e-9);

// Spin-3/2 algebra in the basis (e1, Ke1, e2, Ke2).
using Vec5 = Eigen::Matrix<double, 5, 1>;

struct TauAlgebra {
  std::array<CMatrix, 5> tau;
  std::array<CMatrix, 4> g;  // g_1..g_4 stored at 0..3
  std::array<std::string_view, 4> basis_labels{"e1", "Ke1", "e2", "Ke2"};
};

const TauAlgebra& tau_matrices();
CMatrix tau_combination(const Vec5& n);
CVector time_reversal_K(const CVector& v);
// n(theta, eta, chi, phi) of the spin-3/2 map.
Vec5 unit_five_vector(double theta, double eta, double chi, double phi);
Frame quaternionic_eigs(const Vec5& n);

}  // namespace holonomy
