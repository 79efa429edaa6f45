#include "holonomy/models.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "holonomy/errors.hpp"

namespace holonomy {
namespace {

constexpr double kTwoPi = 2 * kPi;

bool is_map(const ModelSpec& m) { return m.kind != ModelKind::berry_spin_half; }

double frac_residual(double x) { return std::abs(x - std::round(x)); }

CMatrix block2(const CMatrix& a, const CMatrix& b, const CMatrix& c, const CMatrix& d) {
  CMatrix out(4, 4);
  out << a, b, c, d;
  return out;
}

// sigma_z for spin-1/2, tau_0 for spin-3/2: the fixed axis m of the V factor.
CMatrix axis_m(const ModelSpec& m) {
  return m.kind == ModelKind::map_spin_threehalf ? tau_matrices().tau[0] : pauli(3);
}

// n.sigma or tau(n) for the X factor at a point.
CMatrix axis_n(const ModelSpec& m, const ParamPoint& x) {
  const double th = x[Coord::theta], ph = x[Coord::phi];
  if (m.kind == ModelKind::map_spin_threehalf)
    return tau_combination(unit_five_vector(th, x[Coord::eta], x[Coord::chi], ph));
  return std::cos(ph) * std::sin(th) * pauli(1) + std::sin(ph) * std::sin(th) * pauli(2) +
         std::cos(th) * pauli(3);
}

// exp(-i a (c/2 + (2-c)/2 S)) for an involution S.
CMatrix kick(double a, int c, const CMatrix& s) {
  const Index n = s.rows();
  const double b = a * (2 - c) / 2.0;
  return std::exp(-kI * (a * c / 2.0)) *
         (std::cos(b) * CMatrix::Identity(n, n) - kI * std::sin(b) * s);
}

CMatrix factor_v(const ModelSpec& m, double a) { return kick(a, m.q, axis_m(m)); }

// i V(mu/2)^dag d_mu V(mu/2).
CMatrix v_generator(const ModelSpec& m) {
  const Index n = dim(m);
  return 0.5 * (m.q / 2.0 * CMatrix::Identity(n, n) + (2 - m.q) / 2.0 * axis_m(m));
}

// Frame of the symmetric map with zenith Th (Berry: theta).
CMatrix symmetric_frame(const ModelSpec& m, const ParamPoint& x, double th) {
  const double ph = x[Coord::phi];
  const double c = std::cos(th / 2), s = std::sin(th / 2);
  if (m.kind != ModelKind::map_spin_threehalf) {
    const Complex em = std::exp(-kI * (ph / 2)), ep = std::exp(kI * (ph / 2));
    CMatrix f(2, 2);
    f << em * c, -em * s, ep * s, ep * c;
    return f;
  }
  const double al = (ph + x[Coord::chi]) / 2, be = (ph - x[Coord::chi]) / 2;
  const double ce = std::cos(x[Coord::eta] / 2), se = std::sin(x[Coord::eta] / 2);
  CVector d1(4), d2(4);
  d1 << std::exp(-kI * al) * ce, -std::exp(kI * al) * se, 0, 0;
  d2 << 0, 0, std::exp(kI * be) * ce, std::exp(-kI * be) * se;
  const CVector xp = d1 * c + d2 * s;
  const CVector xm = -d1 * s + d2 * c;
  CMatrix f(4, 4);
  f.col(0) = xp;
  f.col(1) = time_reversal_K(xp);
  f.col(2) = xm;
  f.col(3) = time_reversal_K(xm);
  return f;
}

std::vector<double> quasienergies(const ModelSpec& m, const ParamPoint& x) {
  if (m.kind == ModelKind::berry_spin_half) {
    const double e = x[Coord::B];
    return {e, -e};
  }
  const auto sd = spectral_data(m, x);
  const double base = (x[Coord::mu] * m.q + x[Coord::lambda] * m.p) / 2;
  const double ep = base + sd.gap / 2, em = base - sd.gap / 2;
  if (m.kind == ModelKind::map_spin_half) return {ep, em};
  return {ep, ep, em, em};
}

std::string describe(const ModelSpec& m, const ParamPoint& x) {
  std::string s = std::string(model_name(m.kind)) + " at";
  for (Coord c : coordinates(m.kind)) s += " " + std::string(coord_name(c)) + "=" + std::to_string(x[c]);
  return s;
}

}  // namespace

std::string_view model_name(ModelKind k) {
  switch (k) {
    case ModelKind::berry_spin_half: return "berry_spin_half";
    case ModelKind::map_spin_half: return "map_spin_half";
    case ModelKind::map_spin_threehalf: return "map_spin_threehalf";
  }
  return "unknown";
}

std::optional<ModelKind> model_from_name(std::string_view name) {
  for (auto k : {ModelKind::berry_spin_half, ModelKind::map_spin_half, ModelKind::map_spin_threehalf})
    if (model_name(k) == name) return k;
  if (name == "berry") return ModelKind::berry_spin_half;
  return std::nullopt;
}

std::string_view factor_order_name(FactorOrder o) {
  return o == FactorOrder::symmetric ? "symmetric" : "asymmetric";
}

Index dim(const ModelSpec& m) { return m.kind == ModelKind::map_spin_threehalf ? 4 : 2; }

const std::vector<Coord>& coordinates(ModelKind k) {
  static const std::vector<Coord> berry{Coord::theta, Coord::phi, Coord::B};
  static const std::vector<Coord> half{Coord::mu, Coord::lambda, Coord::theta, Coord::phi};
  static const std::vector<Coord> three{Coord::mu, Coord::lambda, Coord::theta, Coord::eta, Coord::chi, Coord::phi};
  switch (k) {
    case ModelKind::berry_spin_half: return berry;
    case ModelKind::map_spin_half: return half;
    default: return three;
  }
}

Topology topology(Coord c) {
  switch (c) {
    case Coord::theta: return Topology::sphere_zenith;
    case Coord::phi: return Topology::sphere_azimuth;
    case Coord::B: return Topology::ray;
    default: return Topology::circle;
  }
}

bool uses(const ModelSpec& m, Coord c) {
  const auto& cs = coordinates(m.kind);
  return std::find(cs.begin(), cs.end(), c) != cs.end();
}

void validate(const ModelSpec& m) {
  if (m.kind == ModelKind::berry_spin_half) {
    if (!(m.dt > 0) || !std::isfinite(m.dt)) throw ValidationError("berry_spin_half needs dt > 0");
    if (m.order != FactorOrder::symmetric) throw ValidationError("factor_order applies to map models only");
  }
}

CMatrix unitary_at(const ModelSpec& m, const ParamPoint& x) {
  if (m.kind == ModelKind::berry_spin_half) return kick(x[Coord::B] * m.dt, 0, axis_n(m, x));
  const CMatrix xl = kick(x[Coord::lambda], m.p, axis_n(m, x));
  if (m.order == FactorOrder::asymmetric) return factor_v(m, x[Coord::mu]) * xl;
  const CMatrix v = factor_v(m, x[Coord::mu] / 2);
  return v * xl * v;
}

CMatrix hamiltonian_at(const ModelSpec& m, const ParamPoint& x) {
  if (m.kind == ModelKind::berry_spin_half) return x[Coord::B] * axis_n(m, x);
  const CMatrix f = analytic_frame(m, x, zenith(m, x));
  const auto e = quasienergies(m, x);
  CVector d(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) d(i) = e[i];
  return f * d.asDiagonal() * f.adjoint();
}

double Bmu(const ModelSpec& m, const ParamPoint& x) { return (2 - m.q) * x[Coord::mu] / 2; }
double Blam(const ModelSpec& m, const ParamPoint& x) { return (2 - m.p) * x[Coord::lambda] / 2; }

double zenith(const ModelSpec& m, const ParamPoint& x) {
  if (!is_map(m)) return x[Coord::theta];
  const double bm = Bmu(m, x), bl = Blam(m, x), th = x[Coord::theta];
  const double y = std::sin(th) * std::sin(bl);
  const double c = std::sin(bm) * std::cos(bl) + std::cos(th) * std::cos(bm) * std::sin(bl);
  return std::atan2(y, c);
}

double zenith_derivative(const ModelSpec& m, const ParamPoint& x, Coord dir) {
  if (!is_map(m)) return dir == Coord::theta ? 1.0 : 0.0;
  const double bm = Bmu(m, x), bl = Blam(m, x), th = x[Coord::theta];
  const double y = std::sin(th) * std::sin(bl);
  const double c = std::sin(bm) * std::cos(bl) + std::cos(th) * std::cos(bm) * std::sin(bl);
  double dy = 0, dc = 0;
  switch (dir) {
    case Coord::theta:
      dy = std::cos(th) * std::sin(bl);
      dc = -std::sin(th) * std::cos(bm) * std::sin(bl);
      break;
    case Coord::lambda: {
      const double k = (2 - m.p) / 2.0;
      dy = k * std::sin(th) * std::cos(bl);
      dc = k * (-std::sin(bm) * std::sin(bl) + std::cos(th) * std::cos(bm) * std::cos(bl));
      break;
    }
    case Coord::mu: {
      const double k = (2 - m.q) / 2.0;
      dc = k * (std::cos(bm) * std::cos(bl) - std::cos(th) * std::sin(bm) * std::sin(bl));
      break;
    }
    default: return 0.0;
  }
  const double r2 = y * y + c * c;
  if (r2 < 1e-300) throw DegeneracyError("zenith derivative undefined at a degeneracy point: " + describe(m, x));
  return (c * dy - y * dc) / r2;
}

SpectralData spectral_data(const ModelSpec& m, const ParamPoint& x, double tol) {
  SpectralData sd{};
  if (!is_map(m)) {
    const double e = x[Coord::B] * m.dt;
    sd.z_plus = std::exp(-kI * e);
    sd.z_minus = std::exp(kI * e);
    sd.gap = 2 * std::abs(e);
    sd.zenith = x[Coord::theta];
    return sd;
  }
  const auto deg = degeneracy_predicate(m, x, tol);
  if (deg == Degeneracy::on_lattice_point)
    throw DegeneracyError("spectral_data: B_mu/pi and B_lam/pi are both integers (lattice point), " + describe(m, x));
  if (deg == Degeneracy::on_line)
    throw DegeneracyError("spectral_data: sin(theta)=0 with (B_lam +/- B_mu)/pi integer (degeneracy line), " +
                          describe(m, x));
  sd.Bmu = Bmu(m, x);
  sd.Blam = Blam(m, x);
  const double th = x[Coord::theta];
  const double a = std::cos(sd.Bmu) * std::cos(sd.Blam) - std::cos(th) * std::sin(sd.Bmu) * std::sin(sd.Blam);
  sd.gap = 2 * std::acos(std::clamp(a, -1.0, 1.0));
  sd.zenith = zenith(m, x);
  const double base = (x[Coord::mu] * m.q + x[Coord::lambda] * m.p) / 2;
  sd.z_plus = std::exp(-kI * (base + sd.gap / 2));
  sd.z_minus = std::exp(-kI * (base - sd.gap / 2));
  return sd;
}

std::vector<Cluster> analytic_clusters(const ModelSpec& m) {
  if (m.kind == ModelKind::map_spin_threehalf) return {{0, 1}, {2, 3}};
  return {{0}, {1}};
}

std::vector<Complex> analytic_eigenvalues(const ModelSpec& m, const ParamPoint& x) {
  std::vector<Complex> z;
  const double scale = m.kind == ModelKind::berry_spin_half ? m.dt : 1.0;
  for (double e : quasienergies(m, x)) z.push_back(std::exp(-kI * (e * scale)));
  return z;
}

CMatrix analytic_frame(const ModelSpec& m, const ParamPoint& x, double zenith_value) {
  CMatrix f = symmetric_frame(m, x, zenith_value);
  if (is_map(m) && m.order == FactorOrder::asymmetric) f = factor_v(m, x[Coord::mu] / 2) * f;
  return f;
}

Frame eigenvectors_at(const ModelSpec& m, const ParamPoint& x) {
  if (is_map(m)) (void)spectral_data(m, x);
  else if (degeneracy_predicate(m, x) != Degeneracy::clear)
    throw DegeneracyError("eigenvectors_at: degenerate point, " + describe(m, x));
  Frame fr;
  fr.columns = analytic_frame(m, x, zenith(m, x));
  fr.param = x;
  const auto cl = analytic_clusters(m);
  fr.labels.assign(dim(m), 0);
  for (std::size_t k = 0; k < cl.size(); ++k)
    for (Index i : cl[k]) fr.labels[i] = static_cast<int>(k);
  return fr;
}

CMatrix block_diagonal(const CMatrix& a, const std::vector<Cluster>& clusters) {
  CMatrix d = CMatrix::Zero(a.rows(), a.cols());
  for (const auto& c : clusters)
    for (Index i : c)
      for (Index j : c) d(i, j) = a(i, j);
  return d;
}

ConnectionSample analytic_connection(const ModelSpec& m, const ParamPoint& x, Coord dir) {
  return analytic_connection(m, x, dir, zenith(m, x));
}

ConnectionSample analytic_connection(const ModelSpec& m, const ParamPoint& x, Coord dir, double th) {
  if (!uses(m, dir))
    throw UnsupportedError("analytic_connection: " + std::string(model_name(m.kind)) + " has no coordinate " +
                           std::string(coord_name(dir)));
  const Index n = dim(m);
  CMatrix a = CMatrix::Zero(n, n);
  const double cT = std::cos(th), sT = std::sin(th);
  const CMatrix sx = pauli(1), sy = pauli(2), sz = pauli(3), z2 = CMatrix::Zero(2, 2);

  if (m.kind != ModelKind::map_spin_threehalf) {
    if (dir == Coord::phi) a = 0.5 * (sz * cT - sx * sT);
    else if (dir != Coord::B) a = 0.5 * sy * zenith_derivative(m, x, dir);
  } else {
    const double ce = std::cos(x[Coord::eta]), se = std::sin(x[Coord::eta]);
    switch (dir) {
      case Coord::eta: a = 0.5 * block2(-sy * cT, sy * sT, sy * sT, sy * cT); break;
      case Coord::phi:
        a = 0.5 * block2(sz * cT, -sz * sT, -sz * sT, -sz * cT) * ce + 0.5 * block2(sx, z2, z2, sx) * se;
        break;
      case Coord::chi:
        a = 0.5 * block2(sz, z2, z2, sz) * ce + 0.5 * block2(sx * cT, -sx * sT, -sx * sT, -sx * cT) * se;
        break;
      default: a = 0.5 * tau_matrices().g[0] * zenith_derivative(m, x, dir); break;
    }
  }
  if (is_map(m) && m.order == FactorOrder::asymmetric && dir == Coord::mu) {
    const CMatrix f = symmetric_frame(m, x, th);
    a += f.adjoint() * v_generator(m) * f;
  }
  ConnectionSample out;
  out.s = x[dir];
  out.a = a;
  out.a_diag = block_diagonal(a, analytic_clusters(m));
  return out;
}

std::string_view degeneracy_name(Degeneracy d) {
  switch (d) {
    case Degeneracy::clear: return "clear";
    case Degeneracy::on_line: return "on_line";
    case Degeneracy::on_lattice_point: return "on_lattice_point";
  }
  return "unknown";
}

Degeneracy degeneracy_predicate(const ModelSpec& m, const ParamPoint& x, double tol) {
  if (!is_map(m)) {
    // H degenerates at B = 0; the stroboscopic unitary also when 2 B dt is a multiple of 2 pi.
    const double e = x[Coord::B] * m.dt;
    if (std::abs(x[Coord::B]) < tol || frac_residual(e / kPi) < tol) return Degeneracy::on_lattice_point;
    return Degeneracy::clear;
  }
  const double bm = Bmu(m, x) / kPi, bl = Blam(m, x) / kPi;
  if (frac_residual(bm) < tol && frac_residual(bl) < tol) return Degeneracy::on_lattice_point;
  const double th = x[Coord::theta];
  if (std::abs(std::sin(th)) < tol) {
    const double r = std::cos(th) > 0 ? bl + bm : bl - bm;
    if (frac_residual(r) < tol) return Degeneracy::on_line;
  }
  return Degeneracy::clear;
}

void check_loop_clear(const ModelSpec& m, const LoopPath& loop, double tol) {
  const ParamPoint& x = loop.base();
  auto fail = [&](const std::string& why) {
    throw DegeneracyError("loop " + std::string(loop_kind_name(loop.kind())) + " touches a degeneracy set: " + why +
                          "; base " + describe(m, x));
  };
  auto point_check = [&](const ParamPoint& y) {
    const auto d = degeneracy_predicate(m, y, tol);
    if (d != Degeneracy::clear) fail(std::string(degeneracy_name(d)));
  };
  if (!is_map(m)) {
    // No bundled loop varies B.
    if (loop.coordinate() == Coord::B) {
      for (const auto& y : loop.uniform(4096, false)) point_check(y);
    } else {
      point_check(x);
    }
    return;
  }
  const double bm = Bmu(m, x), bl = Blam(m, x), th = x[Coord::theta];
  const auto c = loop.coordinate();
  const bool full_turn = std::abs(loop.span()) >= kTwoPi - 1e-12;
  if (c == Coord::lambda && m.p != 2 && full_turn) {
    if (std::abs(std::sin(th) * std::sin(bm)) < tol) fail("sin(theta) sin(B_mu) = 0 while B_lam sweeps");
    return;
  }
  if (c == Coord::mu && m.q != 2 && full_turn) {
    if (std::abs(std::sin(th) * std::sin(bl)) < tol) fail("sin(theta) sin(B_lam) = 0 while B_mu sweeps");
    return;
  }
  if (c == Coord::theta && full_turn) {
    if (frac_residual((bl + bm) / kPi) < tol) fail("(B_lam + B_mu)/pi is an integer");
    if (frac_residual((bl - bm) / kPi) < tol) fail("(B_lam - B_mu)/pi is an integer");
    return;
  }
  if (c == Coord::phi || c == Coord::eta || c == Coord::chi || loop.kind() == LoopKind::stationary) {
    point_check(x);
    return;
  }
  // General path: sample the gap.
  for (const auto& y : loop.uniform(4096, false)) point_check(y);
}

const TauAlgebra& tau_matrices() {
  static const TauAlgebra alg = [] {
    TauAlgebra t;
    const CMatrix i2 = CMatrix::Identity(2, 2), z2 = CMatrix::Zero(2, 2);
    const CMatrix sx = pauli(1), sy = pauli(2), sz = pauli(3);
    t.tau[0] = block2(i2, z2, z2, -i2);
    t.tau[1] = block2(z2, kI * sy, -kI * sy, z2);
    t.tau[2] = block2(z2, -kI * sx, kI * sx, z2);
    t.tau[3] = block2(z2, i2, i2, z2);
    t.tau[4] = block2(z2, -kI * sz, kI * sz, z2);
    t.g[0] = block2(z2, -kI * i2, kI * i2, z2);
    t.g[1] = block2(-sy, z2, z2, sy);
    t.g[2] = block2(sz, z2, z2, -sz);
    t.g[3] = block2(sz, z2, z2, sz);
    return t;
  }();
  return alg;
}

CMatrix tau_combination(const Vec5& n) {
  const auto& t = tau_matrices().tau;
  CMatrix out = CMatrix::Zero(4, 4);
  for (int a = 0; a < 5; ++a) out += n(a) * t[a];
  return out;
}

CVector time_reversal_K(const CVector& v) {
  if (v.size() != 4) throw std::invalid_argument("time_reversal_K: expects a 4-vector");
  CVector out(4);
  out << -std::conj(v(1)), std::conj(v(0)), -std::conj(v(3)), std::conj(v(2));
  return out;
}

Vec5 unit_five_vector(double th, double eta, double chi, double phi) {
  Vec5 n;
  n << std::cos(th), std::cos(chi) * std::sin(eta) * std::sin(th), std::sin(chi) * std::sin(eta) * std::sin(th),
      std::cos(phi) * std::cos(eta) * std::sin(th), std::sin(phi) * std::cos(eta) * std::sin(th);
  return n;
}

Frame quaternionic_eigs(const Vec5& n) {
  if (std::abs(n.norm() - 1) > 1e-10) throw std::invalid_argument("quaternionic_eigs: n must be a unit vector");
  // Polar angles of n, then f = exp(-i g4 chi/2) exp(-i g3 phi/2) exp(-i g2 eta/2) exp(-i g1 theta/2),
  // the product form of the quaternionic reduction (j acting as K).
  const double rho12 = std::hypot(n(1), n(2)), rho34 = std::hypot(n(3), n(4));
  const double th = std::atan2(std::hypot(rho12, rho34), n(0));
  const double eta = std::atan2(rho12, rho34);
  const double chi = std::atan2(n(2), n(1));
  const double phi = std::atan2(n(4), n(3));
  const auto& g = tau_matrices().g;
  Frame fr;
  fr.columns = mat_exp(g[3], -kI * (chi / 2)) * mat_exp(g[2], -kI * (phi / 2)) * mat_exp(g[1], -kI * (eta / 2)) *
               mat_exp(g[0], -kI * (th / 2));
  fr.labels = {0, 0, 1, 1};
  fr.param[Coord::theta] = th;
  fr.param[Coord::eta] = eta;
  fr.param[Coord::chi] = chi;
  fr.param[Coord::phi] = phi;
  return fr;
}

}  // namespace holonomy
