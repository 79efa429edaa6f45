#pragma once

#include <vector>

#include "holonomy/framegauge.hpp"
#include "holonomy/matcore.hpp"
#include "holonomy/models.hpp"
#include "holonomy/path.hpp"

namespace holonomy {

struct Schedule {
  LoopPath path;
  std::size_t L = 0;
  std::vector<ParamPoint> points;

  // s_l = path(l / (L-1)): starts at s' and ends at the path end.
  static Schedule stroboscopic(const LoopPath& path, std::size_t L);
  // s_l = path((l + 1/2) / L): midpoints of L equal time slices.
  static Schedule midpoint(const LoopPath& path, std::size_t L);
};

// U(s_{L-1}) ... U(s_1) U(s_0).
CMatrix stroboscopic_evolve(const ModelSpec& m, const Schedule& schedule);

// Berry model: product of exp(-i H(s_l) T/L) at slice midpoints.
CMatrix hamiltonian_flow(const ModelSpec& m, const LoopPath& path, double T, std::size_t L);

struct EvolutionReport {
  CMatrix U_whole;
  CMatrix adiabatic_prediction;  // f(s') M D f(s')^dag
  double deviation = 0;          // min over a global phase of ||U_whole - prediction||
  CMatrix dynamical_factor;      // D = prod_l Z(s_l)
  CMatrix M;                     // holonomy from the integrator
  CMatrix M_extracted;           // f^dag U_whole f D^{-1}
  std::vector<int> permutation_exact;
  std::vector<int> permutation_holonomy;
  HolonomyResult holonomy;
};

EvolutionReport adiabatic_predict(const ModelSpec& m, const Schedule& schedule, const HolonomyOptions& opt = {});
// Same, reusing a holonomy already computed for schedule.path.
EvolutionReport adiabatic_predict(const ModelSpec& m, const Schedule& schedule, const HolonomyResult& hol);

// min over phi of ||a - e^{i phi} b|| in operator norm.
double phase_aligned_distance(const CMatrix& a, const CMatrix& b);

// Largest-overlap assignment of evolved start eigenvectors onto the start eigenbasis, per cluster.
std::vector<int> exchange_permutation(const CMatrix& u_whole, const CMatrix& frame, const std::vector<Cluster>& clusters);

// F = f^dag H f - A sdot in the analytic frame.
CMatrix fujikawa_F(const ModelSpec& m, const ParamPoint& x, Coord direction, double sdot);

}  // namespace holonomy
