#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace holonomy {

enum class Coord { theta, phi, B, mu, lambda, eta, chi };
inline constexpr std::size_t kCoordCount = 7;

std::string_view coord_name(Coord c);
std::optional<Coord> coord_from_name(std::string_view name);

// Named parameter coordinates in radians (B is a field strength). Coordinates a
// model does not use are ignored by it.
struct ParamPoint {
  std::array<double, kCoordCount> values{0, 0, 1, 0, 0, 0, 0};

  double& operator[](Coord c) { return values[static_cast<std::size_t>(c)]; }
  double operator[](Coord c) const { return values[static_cast<std::size_t>(c)]; }
};

enum class LoopKind { C_theta, C_phi, C_lambda, C_mu, C_eta, C_chi, polygon, stationary };

std::string_view loop_kind_name(LoopKind k);
std::optional<LoopKind> loop_kind_from_name(std::string_view name);
std::optional<Coord> loop_coordinate(LoopKind k);

// Closed (or open) curve in parameter space, parameterized by t in [0, 1].
// Coordinate loops advance one coordinate by `span` from the base point; polygon
// loops follow great-circle arcs between (theta, phi) vertices at uniform arc length.
class LoopPath {
 public:
  static LoopPath coordinate_loop(const ParamPoint& base, Coord c, double span = 2 * 3.14159265358979323846);
  static LoopPath kind_loop(const ParamPoint& base, LoopKind kind);
  static LoopPath polygon(const ParamPoint& base, std::vector<std::pair<double, double>> vertices);
  static LoopPath stationary(const ParamPoint& base);

  LoopKind kind() const { return kind_; }
  const ParamPoint& base() const { return base_; }
  std::optional<Coord> coordinate() const { return coord_; }
  double span() const { return span_; }
  const std::vector<std::pair<double, double>>& vertices() const { return vertices_; }
  bool closed() const;

  // Path parameter range; uniform steps in t map to uniform steps h = length()/n.
  double length() const;

  // Raw point at t; periodic coordinates are not unwrapped.
  ParamPoint at(double t) const;

  // Points at increasing t values (t may leave [0, 1] for closed loops), with
  // azimuths unwrapped to be continuous and anchored at the base vertex.
  std::vector<ParamPoint> points(const std::vector<double>& ts) const;

  // n+1 uniform samples t = k/n, optionally with one extra sample past each end.
  std::vector<ParamPoint> uniform(std::size_t n, bool extended) const;

 private:
  LoopKind kind_ = LoopKind::stationary;
  ParamPoint base_;
  std::optional<Coord> coord_;
  double span_ = 0;
  std::vector<std::pair<double, double>> vertices_;
  std::vector<double> cumulative_;  // arc length at each vertex, closing edge included
};

}  // namespace holonomy
