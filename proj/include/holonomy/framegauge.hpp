#pragma once

#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "holonomy/matcore.hpp"
#include "holonomy/models.hpp"
#include "holonomy/path.hpp"

namespace holonomy {

// analytic: the model's closed-form frames with the zenith angle unwrapped.
// parallel_transport: discrete parallel transport seeded with the analytic frame at s'.
// max_overlap: backend eigenvectors, matched by overlap and phase-aligned (discrete parallel transport).
enum class Gauge { analytic, parallel_transport, max_overlap };

std::string_view gauge_name(Gauge g);
std::optional<Gauge> gauge_from_name(std::string_view name);

// One frame per point. The frame at `anchor` is the seed; continuation runs
// outward from it in both directions.
std::vector<Frame> continue_frame(const ModelSpec& m, const std::vector<ParamPoint>& points, Gauge gauge,
                                  std::size_t anchor = 0);
std::vector<Frame> continue_frame(const ModelSpec& m, const LoopPath& path, std::size_t steps, Gauge gauge);

// Cluster layout carried by a frame's labels.
std::vector<Cluster> frame_clusters(const Frame& f);

// Central difference i f^dag (f(s+h) - f(s-h)) / 2h, Hermitized.
ConnectionSample connection_at(const Frame& prev, const Frame& mid, const Frame& next, double h);

CMatrix wilson_line(const SampledCurve& connection);
CMatrix geometric_factor(const SampledCurve& connection_diag);

struct HolonomyResult {
  CMatrix W, B, M;
  // permutation[m] = n: initial level m ends in level n (dominant M_nm).
  std::vector<int> permutation;
  std::vector<Complex> level_phases;
  double residual = 0;
  bool pattern_warning = false;
  std::vector<Cluster> clusters;
  std::size_t steps = 0;
  double frame_defect = 0;  // ||W - f(s')^dag f(s'')||
  CMatrix start_frame, end_frame;
};

struct PatternInfo {
  std::vector<int> permutation;
  std::vector<Complex> level_phases;
  double residual = 0;
  bool warning = false;
};

// Thresholds cluster blocks of M at operator norm 0.99.
PatternInfo extract_pattern(const CMatrix& m, const std::vector<Cluster>& clusters);

// W, B, M from frames sampled at s_{-1}, s_0, ..., s_n, s_{n+1} with spacing h.
HolonomyResult holonomy_from_frames(const std::vector<Frame>& extended, double h);

struct HolonomyOptions {
  Gauge gauge = Gauge::analytic;
  std::size_t steps = 1024;
  bool auto_refine = true;
  double refine_tol = 1e-6;
  std::size_t max_steps = std::size_t{1} << 20;
};

HolonomyResult holonomy_matrix(const ModelSpec& m, const LoopPath& loop, const HolonomyOptions& opt = {});
HolonomyResult holonomy_matrix(const ModelSpec& m, const LoopPath& loop, std::size_t steps);

// M re-expressed against another orthonormal start frame: G^dag M G with G = f_old^dag f_new.
CMatrix change_start_frame(const CMatrix& m, const CMatrix& old_frame, const CMatrix& new_frame);

struct GaugeMap {
  std::function<CMatrix(const ParamPoint&)> g;
  bool diag_times_permutation = true;
};

struct GaugedHolonomy {
  std::vector<Frame> frames;
  std::vector<ConnectionSample> connections;  // nodes s_0..s_n
  CMatrix W, B, M;
  std::vector<Cluster> clusters;
};

// f -> fG, A -> G^dag A G + i G^dag dG, W -> G(s')^dag W G(s''), B -> G(s'')^dag B G(s'), M -> G(s')^dag M G(s').
GaugedHolonomy apply_gauge(const std::vector<Frame>& extended, double h, const HolonomyResult& hol, const GaugeMap& g);

}  // namespace holonomy
