#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "holonomy/matcore.hpp"
#include "holonomy/models.hpp"
#include "holonomy/path.hpp"

namespace holonomy {

enum class FormulaId {
  trivial,
  berry_solid_angle,
  berry_meridian,
  berry_latitude,
  map_meridian,
  map_latitude,
  map_lambda,
  map_mu,
  kramers_meridian,
  kramers_lambda,
  kramers_mu,
  kramers_eta,
  kramers_phi,
  kramers_chi,
};

std::string_view formula_name(FormulaId f);

// exact: compare entries. gauge_class: compare up to the residual block-diagonal
// freedom G(s')^dag M G(s') of the start frame.
enum class Comparison { exact, gauge_class };

struct Prediction {
  CMatrix M_expected;
  FormulaId formula = FormulaId::trivial;
  Comparison comparison = Comparison::exact;
  std::vector<std::pair<std::string, double>> inputs;
};

enum class EdgeKind { geodesic, coordinate };

// Signed solid angle of a closed loop of (theta, phi) vertices, counter-clockwise
// about +z positive. Geodesic edges: spherical excess; coordinate edges: theta
// linear in phi between vertices.
double solid_angle(const std::vector<std::pair<double, double>>& loop, EdgeKind edges = EdgeKind::geodesic);

// floor(x), rejecting arguments within 1e-12 of an integer.
long floor_guarded(double x);

long index_r(double Blam, double Bmu);

Prediction predict(const ModelSpec& m, const LoopPath& loop);

double theta_winding(const ModelSpec& m, const LoopPath& loop);

// Distance of a computed holonomy matrix from a prediction under its comparison rule.
double prediction_distance(const CMatrix& M, const Prediction& p, const std::vector<Cluster>& clusters);

}  // namespace holonomy
