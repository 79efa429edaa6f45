#include "holonomy/path.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "holonomy/errors.hpp"

namespace holonomy {
namespace {

constexpr double kTwoPi = 2 * 3.14159265358979323846;

constexpr std::array<std::string_view, kCoordCount> kCoordNames{"theta", "phi", "B", "mu", "lambda", "eta", "chi"};

struct LoopName {
  LoopKind kind;
  std::string_view name;
};
constexpr std::array<LoopName, 8> kLoopNames{{{LoopKind::C_theta, "C_theta"},
                                              {LoopKind::C_phi, "C_phi"},
                                              {LoopKind::C_lambda, "C_lambda"},
                                              {LoopKind::C_mu, "C_mu"},
                                              {LoopKind::C_eta, "C_eta"},
                                              {LoopKind::C_chi, "C_chi"},
                                              {LoopKind::polygon, "polygon"},
                                              {LoopKind::stationary, "stationary"}}};

Eigen::Vector3d unit(double theta, double phi) {
  return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

double angle_between(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

}  // namespace

std::string_view coord_name(Coord c) { return kCoordNames[static_cast<std::size_t>(c)]; }

std::optional<Coord> coord_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kCoordNames.size(); ++i)
    if (kCoordNames[i] == name) return static_cast<Coord>(i);
  if (name == "lam") return Coord::lambda;
  return std::nullopt;
}

std::string_view loop_kind_name(LoopKind k) {
  for (const auto& e : kLoopNames)
    if (e.kind == k) return e.name;
  return "unknown";
}

std::optional<LoopKind> loop_kind_from_name(std::string_view name) {
  for (const auto& e : kLoopNames)
    if (e.name == name) return e.kind;
  return std::nullopt;
}

std::optional<Coord> loop_coordinate(LoopKind k) {
  switch (k) {
    case LoopKind::C_theta: return Coord::theta;
    case LoopKind::C_phi: return Coord::phi;
    case LoopKind::C_lambda: return Coord::lambda;
    case LoopKind::C_mu: return Coord::mu;
    case LoopKind::C_eta: return Coord::eta;
    case LoopKind::C_chi: return Coord::chi;
    default: return std::nullopt;
  }
}

LoopPath LoopPath::coordinate_loop(const ParamPoint& base, Coord c, double span) {
  if (!(span != 0) || !std::isfinite(span)) throw ValidationError("coordinate loop needs a finite nonzero span");
  LoopPath p;
  p.coord_ = c;
  p.base_ = base;
  p.span_ = span;
  p.kind_ = LoopKind::stationary;
  for (const auto& e : kLoopNames)
    if (loop_coordinate(e.kind) == c) p.kind_ = e.kind;
  return p;
}

LoopPath LoopPath::kind_loop(const ParamPoint& base, LoopKind kind) {
  if (kind == LoopKind::stationary) return stationary(base);
  const auto c = loop_coordinate(kind);
  if (!c) throw ValidationError("loop kind '" + std::string(loop_kind_name(kind)) + "' needs explicit vertices");
  return coordinate_loop(base, *c);
}

LoopPath LoopPath::polygon(const ParamPoint& base, std::vector<std::pair<double, double>> vertices) {
  if (vertices.size() < 2) throw ValidationError("polygon loop needs at least two vertices");
  LoopPath p;
  p.kind_ = LoopKind::polygon;
  p.base_ = base;
  p.base_[Coord::theta] = vertices.front().first;
  p.base_[Coord::phi] = vertices.front().second;
  p.vertices_ = std::move(vertices);
  p.cumulative_.push_back(0.0);
  const std::size_t n = p.vertices_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = p.vertices_[i];
    const auto& b = p.vertices_[(i + 1) % n];
    const auto ua = unit(a.first, a.second);
    const auto ub = unit(b.first, b.second);
    if (ua.dot(ub) < -1 + 1e-12) throw ValidationError("polygon edge joins antipodal points; great circle is ambiguous");
    p.cumulative_.push_back(p.cumulative_.back() + angle_between(ua, ub));
  }
  if (!(p.cumulative_.back() > 0)) throw ValidationError("polygon has zero perimeter");
  return p;
}

LoopPath LoopPath::stationary(const ParamPoint& base) {
  LoopPath p;
  p.kind_ = LoopKind::stationary;
  p.base_ = base;
  p.span_ = 0;
  return p;
}

bool LoopPath::closed() const {
  // Coordinate loops close when the span is a whole number of periods.
  if (coord_) {
    const double turns = span_ / kTwoPi;
    return std::abs(turns - std::round(turns)) < 1e-12;
  }
  return true;
}

double LoopPath::length() const {
  if (kind_ == LoopKind::polygon) return cumulative_.back();
  if (coord_) return std::abs(span_);
  return 1.0;
}

ParamPoint LoopPath::at(double t) const {
  ParamPoint x = base_;
  if (coord_) {
    x[*coord_] += t * span_;
    return x;
  }
  if (kind_ != LoopKind::polygon) return x;
  const double total = cumulative_.back();
  double s = std::fmod(t, 1.0);
  if (s < 0) s += 1.0;
  s *= total;
  const std::size_t n = vertices_.size();
  std::size_t e = std::upper_bound(cumulative_.begin(), cumulative_.end(), s) - cumulative_.begin();
  e = std::clamp<std::size_t>(e, 1, n) - 1;
  const auto& a = vertices_[e];
  const auto& b = vertices_[(e + 1) % n];
  const auto ua = unit(a.first, a.second);
  const auto ub = unit(b.first, b.second);
  const double omega = cumulative_[e + 1] - cumulative_[e];
  Eigen::Vector3d v = ua;
  if (omega > 1e-15) {
    const double u = (s - cumulative_[e]) / omega;
    v = (std::sin((1 - u) * omega) * ua + std::sin(u * omega) * ub) / std::sin(omega);
    v.normalize();
  }
  x[Coord::theta] = std::atan2(std::hypot(v.x(), v.y()), v.z());
  x[Coord::phi] = std::atan2(v.y(), v.x());
  return x;
}

std::vector<ParamPoint> LoopPath::points(const std::vector<double>& ts) const {
  std::vector<ParamPoint> out;
  out.reserve(ts.size());
  for (double t : ts) out.push_back(at(t));
  if (kind_ != LoopKind::polygon || out.empty()) return out;
  double prev = base_[Coord::phi];
  for (auto& x : out) {
    double& phi = x[Coord::phi];
    phi += kTwoPi * std::round((prev - phi) / kTwoPi);
    prev = phi;
  }
  return out;
}

std::vector<ParamPoint> LoopPath::uniform(std::size_t n, bool extended) const {
  if (n == 0) throw ValidationError("path sampling needs at least one segment");
  std::vector<double> ts;
  const long lo = extended ? -1 : 0;
  const long hi = static_cast<long>(n) + (extended ? 1 : 0);
  ts.reserve(hi - lo + 1);
  for (long k = lo; k <= hi; ++k) ts.push_back(static_cast<double>(k) / static_cast<double>(n));
  return points(ts);
}

}  // namespace holonomy
