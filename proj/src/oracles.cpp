#include "holonomy/oracles.hpp"

#include <algorithm>
#include <cmath>

#include "holonomy/errors.hpp"
#include "holonomy/framegauge.hpp"

namespace holonomy {
namespace {

constexpr double kTwoPi = 2 * kPi;

Eigen::Vector3d unit(double theta, double phi) {
  return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

double wrap(double a) { return a - kTwoPi * std::round(a / kTwoPi); }

// Van Oosterom-Strackee signed solid angle of the triangle (r, a, b).
double triangle(const Eigen::Vector3d& r, const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return 2 * std::atan2(r.dot(a.cross(b)), 1 + r.dot(a) + r.dot(b) + a.dot(b));
}

double sign_pow(long k) { return (k % 2 == 0) ? 1.0 : -1.0; }

CMatrix winding_matrix(const ModelSpec& m, double winding) {
  const CMatrix gen = m.kind == ModelKind::map_spin_threehalf ? tau_matrices().g[0] : pauli(2);
  return mat_exp(gen, -kI * (winding / 2));
}

void require_full_turn(const LoopPath& loop) {
  if (std::abs(std::abs(loop.span()) - kTwoPi) > 1e-12)
    throw UnsupportedError("closed forms are published for a single 0 -> 2pi turn only");
}

CMatrix block_diag(const CMatrix& a, const CMatrix& b) {
  CMatrix out = CMatrix::Zero(4, 4);
  out.topLeftCorner(2, 2) = a;
  out.bottomRightCorner(2, 2) = b;
  return out;
}

// Orientation: a loop that runs backwards inverts M.
CMatrix oriented(const CMatrix& m, const LoopPath& loop) { return loop.span() < 0 ? CMatrix(m.adjoint()) : m; }

}  // namespace

std::string_view formula_name(FormulaId f) {
  switch (f) {
    case FormulaId::trivial: return "trivial";
    case FormulaId::berry_solid_angle: return "berry_solid_angle";
    case FormulaId::berry_meridian: return "berry_meridian";
    case FormulaId::berry_latitude: return "berry_latitude";
    case FormulaId::map_meridian: return "map_meridian";
    case FormulaId::map_latitude: return "map_latitude";
    case FormulaId::map_lambda: return "map_lambda";
    case FormulaId::map_mu: return "map_mu";
    case FormulaId::kramers_meridian: return "kramers_meridian";
    case FormulaId::kramers_lambda: return "kramers_lambda";
    case FormulaId::kramers_mu: return "kramers_mu";
    case FormulaId::kramers_eta: return "kramers_eta";
    case FormulaId::kramers_phi: return "kramers_phi";
    case FormulaId::kramers_chi: return "kramers_chi";
  }
  return "unknown";
}

double solid_angle(const std::vector<std::pair<double, double>>& loop, EdgeKind edges) {
  if (loop.size() < 2) return 0.0;
  const std::size_t n = loop.size();
  if (edges == EdgeKind::coordinate) {
    double omega = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& a = loop[i];
      const auto& b = loop[(i + 1) % n];
      const double dphi = i + 1 < n ? b.second - a.second : wrap(b.second - a.second);
      const double dth = b.first - a.first;
      const double mean_cos =
          std::abs(dth) < 1e-12 ? std::cos(a.first) : (std::sin(b.first) - std::sin(a.first)) / dth;
      omega += dphi * (1 - mean_cos);
    }
    return omega;
  }

  std::vector<Eigen::Vector3d> v;
  for (const auto& [th, ph] : loop) {
    const auto u = unit(th, ph);
    if (v.empty() || (u - v.back()).norm() > 1e-14) v.push_back(u);
  }
  while (v.size() > 1 && (v.front() - v.back()).norm() <= 1e-14) v.pop_back();
  if (v.size() < 3) return 0.0;

  // Subdivide edges so every triangle against the reference stays well conditioned.
  std::vector<Eigen::Vector3d> pts;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto& a = v[i];
    const auto& b = v[(i + 1) % v.size()];
    const double ang = std::atan2(a.cross(b).norm(), a.dot(b));
    if (ang > kPi - 1e-9) throw std::domain_error("solid_angle: antipodal edge has no unique great circle");
    const int pieces = std::max(1, static_cast<int>(std::ceil(ang / 0.25)));
    for (int k = 0; k < pieces; ++k) {
      const double t = static_cast<double>(k) / pieces;
      if (ang < 1e-15) {
        pts.push_back(a);
        break;
      }
      pts.push_back(((std::sin((1 - t) * ang) * a + std::sin(t * ang) * b) / std::sin(ang)).normalized());
    }
  }
  const Eigen::Vector3d north(0, 0, 1);
  double omega_n = 0, omega_s = 0, turn = 0, worst_n = 4, worst_s = 4;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& a = pts[i];
    const auto& b = pts[(i + 1) % pts.size()];
    omega_n += triangle(north, a, b);
    omega_s += triangle(-north, a, b);
    worst_n = std::min(worst_n, 1 + a.z() + b.z() + a.dot(b));
    worst_s = std::min(worst_s, 1 - a.z() - b.z() + a.dot(b));
    turn += wrap(std::atan2(b.y(), b.x()) - std::atan2(a.y(), a.x()));
  }
  if (worst_n >= worst_s) return omega_n;
  // Areas about the two poles differ by 4 pi times the winding about the z axis.
  return omega_s + 2 * std::round(turn / kTwoPi) * kTwoPi;
}

long floor_guarded(double x) {
  if (!std::isfinite(x)) throw std::domain_error("floor_guarded: non-finite argument");
  if (std::abs(x - std::round(x)) < 1e-12 * std::max(1.0, std::abs(x)))
    throw DegeneracyError("branch index argument " + std::to_string(x) + " is an integer (degeneracy set)");
  return static_cast<long>(std::floor(x));
}

long index_r(double Blam, double Bmu) {
  return floor_guarded((Blam + Bmu) / kPi) - floor_guarded((Blam - Bmu) / kPi);
}

Prediction predict(const ModelSpec& m, const LoopPath& loop) {
  validate(m);
  Prediction p;
  const Index n = dim(m);
  const ParamPoint& x = loop.base();
  for (Coord c : coordinates(m.kind)) p.inputs.emplace_back(std::string(coord_name(c)), x[c]);
  if (m.kind != ModelKind::berry_spin_half) {
    p.inputs.emplace_back("q", m.q);
    p.inputs.emplace_back("p", m.p);
  }
  const CMatrix id = CMatrix::Identity(n, n);
  const CMatrix sz = pauli(3);

  if (loop.kind() == LoopKind::stationary) {
    p.M_expected = id;
    return p;
  }

  if (m.kind == ModelKind::berry_spin_half) {
    switch (loop.kind()) {
      case LoopKind::C_theta:
        require_full_turn(loop);
        p.formula = FormulaId::berry_meridian;
        p.M_expected = -id;
        return p;
      case LoopKind::C_phi: {
        require_full_turn(loop);
        p.formula = FormulaId::berry_latitude;
        p.M_expected = oriented(mat_exp(sz, -kI * kPi * (1 - std::cos(x[Coord::theta]))), loop);
        return p;
      }
      case LoopKind::polygon: {
        const double om = solid_angle(loop.vertices(), EdgeKind::geodesic);
        p.formula = FormulaId::berry_solid_angle;
        p.inputs.emplace_back("Omega", om);
        p.M_expected = mat_exp(sz, -kI * (om / 2));
        return p;
      }
      default:
        throw UnsupportedError("no published holonomy for berry_spin_half along " +
                               std::string(loop_kind_name(loop.kind())));
    }
  }

  require_full_turn(loop);
  const bool kramers = m.kind == ModelKind::map_spin_threehalf;
  const double bm = Bmu(m, x), bl = Blam(m, x);
  switch (loop.kind()) {
    case LoopKind::C_theta: {
      const long r = index_r(bl, bm);
      p.inputs.emplace_back("r", static_cast<double>(r));
      p.formula = kramers ? FormulaId::kramers_meridian : FormulaId::map_meridian;
      p.M_expected = sign_pow(1 + r) * id;
      return p;
    }
    case LoopKind::C_lambda: {
      const long k = floor_guarded(x[Coord::mu] * (2 - m.q) / kTwoPi);
      p.inputs.emplace_back("k", static_cast<double>(k));
      p.formula = kramers ? FormulaId::kramers_lambda : FormulaId::map_lambda;
      p.M_expected = oriented(winding_matrix(m, sign_pow(k) * kPi * (2 - m.p)), loop);
      return p;
    }
    case LoopKind::C_mu: {
      if (m.order != FactorOrder::asymmetric)
        throw UnsupportedError(
            "the published M(C_mu) holds for the periodic ordering V(mu)X(lambda); set factor_order=asymmetric");
      const long k = floor_guarded(x[Coord::lambda] * (2 - m.p) / kTwoPi);
      p.inputs.emplace_back("k", static_cast<double>(k));
      p.formula = kramers ? FormulaId::kramers_mu : FormulaId::map_mu;
      p.M_expected = oriented(winding_matrix(m, sign_pow(k) * kPi * (2 - m.q)), loop);
      // For odd q the swap's off-diagonal phases are not fixed by the published start frame.
      if (m.q % 2 != 0) p.comparison = Comparison::gauge_class;
      return p;
    }
    default: break;
  }

  const double th = zenith(m, x);
  if (!kramers) {
    if (loop.kind() == LoopKind::C_phi) {
      p.formula = FormulaId::map_latitude;
      p.M_expected = oriented(mat_exp(sz, -kI * kPi * (1 - std::cos(th))), loop);
      return p;
    }
    throw UnsupportedError("no published holonomy for map_spin_half along " + std::string(loop_kind_name(loop.kind())));
  }

  const CMatrix sx = pauli(1), sy = pauli(2);
  const double eta = x[Coord::eta];
  const double cT = std::cos(th), sT = std::sin(th);
  switch (loop.kind()) {
    case LoopKind::C_eta: {
      const double om = kTwoPi * (1 - cT);
      p.formula = FormulaId::kramers_eta;
      p.inputs.emplace_back("Omega_eta", om);
      p.M_expected = oriented(block_diag(mat_exp(sy, kI * (om / 2)), mat_exp(sy, -kI * (om / 2))), loop);
      return p;
    }
    case LoopKind::C_phi: {
      const double b1 = std::sqrt(1 - std::pow(sT * std::cos(eta), 2));
      const double e1 = std::arg(Complex(cT * std::cos(eta), std::sin(eta)) / b1);
      const double om = kTwoPi * (1 - b1);
      p.formula = FormulaId::kramers_phi;
      p.inputs.emplace_back("beta_1", b1);
      p.inputs.emplace_back("eta_1", e1);
      p.M_expected = oriented(block_diag(mat_exp(sz * std::cos(e1) + sx * std::sin(e1), -kI * (om / 2)),
                                         mat_exp(sz * std::cos(e1) - sx * std::sin(e1), kI * (om / 2))),
                              loop);
      return p;
    }
    case LoopKind::C_chi: {
      // eta_2 in the reading that agrees with the integrator: arg(cos eta + i cos Theta sin eta).
      const double b2 = std::sqrt(1 - std::pow(sT * std::sin(eta), 2));
      const double e2 = std::arg(Complex(std::cos(eta), cT * std::sin(eta)));
      const double om = kTwoPi * (1 - b2);
      p.formula = FormulaId::kramers_chi;
      p.inputs.emplace_back("beta_2", b2);
      p.inputs.emplace_back("eta_2", e2);
      p.M_expected = oriented(block_diag(mat_exp(sz * std::cos(e2) + sx * std::sin(e2), -kI * (om / 2)),
                                         mat_exp(sz * std::cos(e2) - sx * std::sin(e2), -kI * (om / 2))),
                              loop);
      return p;
    }
    default:
      throw UnsupportedError("no published holonomy for map_spin_threehalf along " +
                             std::string(loop_kind_name(loop.kind())));
  }
}

double theta_winding(const ModelSpec& m, const LoopPath& loop) {
  const ParamPoint& x = loop.base();
  const double dir = loop.span() < 0 ? -1.0 : 1.0;
  if (m.kind == ModelKind::berry_spin_half) {
    switch (loop.kind()) {
      case LoopKind::C_theta: return loop.span();
      case LoopKind::C_phi:
      case LoopKind::stationary: return 0.0;
      default: throw UnsupportedError("theta_winding: unsupported loop for berry_spin_half");
    }
  }
  require_full_turn(loop);
  switch (loop.kind()) {
    case LoopKind::C_theta: {
      const long r = index_r(Blam(m, x), Bmu(m, x));
      return r % 2 == 0 ? dir * kTwoPi * sign_pow(r / 2) : 0.0;
    }
    case LoopKind::C_lambda:
      return dir * sign_pow(floor_guarded(x[Coord::mu] * (2 - m.q) / kTwoPi)) * kPi * (2 - m.p);
    case LoopKind::C_mu:
      return dir * sign_pow(floor_guarded(x[Coord::lambda] * (2 - m.p) / kTwoPi)) * kPi * (2 - m.q);
    case LoopKind::C_phi:
    case LoopKind::C_eta:
    case LoopKind::C_chi: return 0.0;
    default: throw UnsupportedError("theta_winding: unsupported loop");
  }
}

double prediction_distance(const CMatrix& M, const Prediction& p, const std::vector<Cluster>& clusters) {
  const CMatrix& P = p.M_expected;
  if (M.rows() != P.rows() || M.cols() != P.cols()) throw std::invalid_argument("prediction_distance: size mismatch");
  if (p.comparison == Comparison::exact) return op_norm(M - P);

  // Walk each cycle of the predicted block permutation, fixing the start-frame
  // gauge of each cluster so the links match; the closing link carries the
  // gauge-invariant content.
  const auto pat = extract_pattern(P, clusters);
  auto cluster_of = [&](Index i) {
    for (std::size_t c = 0; c < clusters.size(); ++c)
      if (std::find(clusters[c].begin(), clusters[c].end(), i) != clusters[c].end()) return c;
    return clusters.size();
  };
  auto block = [](const CMatrix& a, const Cluster& r, const Cluster& c) {
    CMatrix out(static_cast<Index>(r.size()), static_cast<Index>(c.size()));
    for (std::size_t i = 0; i < r.size(); ++i)
      for (std::size_t j = 0; j < c.size(); ++j) out(static_cast<Index>(i), static_cast<Index>(j)) = a(r[i], c[j]);
    return out;
  };
  auto nearest_unitary = [](const CMatrix& a) {
    Eigen::JacobiSVD<CMatrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return CMatrix(svd.matrixU() * svd.matrixV().adjoint());
  };

  std::vector<CMatrix> g(clusters.size());
  for (std::size_t c0 = 0; c0 < clusters.size(); ++c0) {
    if (g[c0].size() != 0) continue;
    const auto sz = static_cast<Index>(clusters[c0].size());
    g[c0] = CMatrix::Identity(sz, sz);
    std::size_t c = c0;
    while (true) {
      const std::size_t d = cluster_of(pat.permutation[clusters[c].front()]);
      if (d == c0 || d >= clusters.size() || g[d].size() != 0) break;
      const CMatrix mdc = block(M, clusters[d], clusters[c]);
      const CMatrix pdc = block(P, clusters[d], clusters[c]);
      g[d] = nearest_unitary(mdc * g[c] * pdc.adjoint());
      c = d;
    }
  }
  CMatrix G = CMatrix::Zero(M.rows(), M.cols());
  for (std::size_t c = 0; c < clusters.size(); ++c)
    for (std::size_t i = 0; i < clusters[c].size(); ++i)
      for (std::size_t j = 0; j < clusters[c].size(); ++j)
        G(clusters[c][i], clusters[c][j]) = g[c](static_cast<Index>(i), static_cast<Index>(j));
  return op_norm(G.adjoint() * M * G - P);
}

}  // namespace holonomy
