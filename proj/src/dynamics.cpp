#include "holonomy/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "holonomy/errors.hpp"

namespace holonomy {

Schedule Schedule::stroboscopic(const LoopPath& path, std::size_t L) {
  if (L < 1) throw ValidationError("schedule needs L >= 1");
  Schedule s{path, L, {}};
  std::vector<double> ts(L);
  for (std::size_t l = 0; l < L; ++l) ts[l] = L == 1 ? 0.0 : static_cast<double>(l) / static_cast<double>(L - 1);
  s.points = path.points(ts);
  return s;
}

Schedule Schedule::midpoint(const LoopPath& path, std::size_t L) {
  if (L < 1) throw ValidationError("schedule needs L >= 1");
  Schedule s{path, L, {}};
  std::vector<double> ts(L);
  for (std::size_t l = 0; l < L; ++l) ts[l] = (static_cast<double>(l) + 0.5) / static_cast<double>(L);
  s.points = path.points(ts);
  return s;
}

CMatrix stroboscopic_evolve(const ModelSpec& m, const Schedule& schedule) {
  const Index n = dim(m);
  CMatrix u = CMatrix::Identity(n, n);
  for (const auto& x : schedule.points) u = unitary_at(m, x) * u;
  return u;
}

CMatrix hamiltonian_flow(const ModelSpec& m, const LoopPath& path, double T, std::size_t L) {
  if (m.kind != ModelKind::berry_spin_half) throw UnsupportedError("hamiltonian_flow needs a Hamiltonian model");
  if (L < 1 || !(T > 0)) throw ValidationError("hamiltonian_flow needs T > 0 and L >= 1");
  ModelSpec slice = m;
  slice.dt = T / static_cast<double>(L);
  return stroboscopic_evolve(slice, Schedule::midpoint(path, L));
}

double phase_aligned_distance(const CMatrix& a, const CMatrix& b) {
  const Complex tr = (b.adjoint() * a).trace();
  const double phi0 = std::abs(tr) > 0 ? std::arg(tr) : 0.0;
  auto f = [&](double phi) { return op_norm(a - std::exp(kI * phi) * b); };
  // Golden-section refinement around the trace phase.
  const double g = (std::sqrt(5.0) - 1) / 2;
  double lo = phi0 - 0.5, hi = phi0 + 0.5;
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 80; ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = f(x2);
    }
  }
  return std::min({f1, f2, f(phi0)});
}

std::vector<int> exchange_permutation(const CMatrix& u_whole, const CMatrix& frame,
                                      const std::vector<Cluster>& clusters) {
  const CMatrix o = frame.adjoint() * u_whole * frame;
  std::vector<int> perm(static_cast<std::size_t>(frame.cols()), -1);
  for (const auto& c : clusters) {
    double best = -1;
    const Cluster* target = nullptr;
    for (const auto& d : clusters) {
      if (d.size() != c.size()) continue;
      double w = 0;
      for (Index i : d)
        for (Index j : c) w += std::norm(o(i, j));
      if (w > best) {
        best = w;
        target = &d;
      }
    }
    for (std::size_t j = 0; j < c.size(); ++j) perm[c[j]] = static_cast<int>((*target)[j]);
  }
  return perm;
}

EvolutionReport adiabatic_predict(const ModelSpec& m, const Schedule& schedule, const HolonomyOptions& opt) {
  if (opt.gauge == Gauge::max_overlap)
    throw UnsupportedError("adiabatic_predict compares in the analytic start frame; use analytic or parallel_transport");
  return adiabatic_predict(m, schedule, holonomy_matrix(m, schedule.path, opt));
}

EvolutionReport adiabatic_predict(const ModelSpec& m, const Schedule& schedule, const HolonomyResult& hol) {
  if (schedule.points.empty()) throw ValidationError("adiabatic_predict: empty schedule");
  EvolutionReport rep;
  rep.holonomy = hol;
  rep.M = hol.M;

  // Dynamical factor along the schedule, with eigenvalue labels carried by
  // continuation from the path base.
  std::vector<ParamPoint> pts;
  pts.reserve(schedule.points.size() + 1);
  pts.push_back(schedule.path.points({0.0}).front());
  pts.insert(pts.end(), schedule.points.begin(), schedule.points.end());
  const auto frames = continue_frame(m, pts, Gauge::analytic, 0);
  const Index n = dim(m);
  CVector d = CVector::Ones(n);
  for (std::size_t l = 1; l < frames.size(); ++l) {
    const CMatrix z = frames[l].columns.adjoint() * unitary_at(m, pts[l]) * frames[l].columns;
    for (Index i = 0; i < n; ++i) {
      d(i) *= z(i, i) / std::abs(z(i, i));
      d(i) /= std::abs(d(i));
    }
  }
  rep.dynamical_factor = d.asDiagonal();
  const CMatrix& f0 = hol.start_frame;
  if (op_norm(f0 - frames.front().columns) > 1e-8)
    throw ContinuationError("start frames of holonomy and schedule disagree", 0);

  rep.U_whole = stroboscopic_evolve(m, schedule);
  rep.adiabatic_prediction = f0 * rep.M * rep.dynamical_factor * f0.adjoint();
  rep.deviation = phase_aligned_distance(rep.U_whole, rep.adiabatic_prediction);
  rep.M_extracted = f0.adjoint() * rep.U_whole * f0 * d.cwiseInverse().asDiagonal();
  rep.permutation_exact = exchange_permutation(rep.U_whole, f0, hol.clusters);
  rep.permutation_holonomy = hol.permutation;
  return rep;
}

CMatrix fujikawa_F(const ModelSpec& m, const ParamPoint& x, Coord direction, double sdot) {
  const CMatrix f = analytic_frame(m, x, zenith(m, x));
  const CMatrix h = hamiltonian_at(m, x);
  const auto a = analytic_connection(m, x, direction);
  return f.adjoint() * h * f - a.a * sdot;
}

}  // namespace holonomy
