#include "holonomy/framegauge.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "holonomy/errors.hpp"

namespace holonomy {
namespace {

constexpr double kTwoPi = 2 * kPi;
constexpr double kMinOverlap = 0.5;

CMatrix take_cols(const CMatrix& m, const Cluster& c) {
  CMatrix out(m.rows(), static_cast<Index>(c.size()));
  for (std::size_t j = 0; j < c.size(); ++j) out.col(static_cast<Index>(j)) = m.col(c[j]);
  return out;
}

CMatrix take_block(const CMatrix& m, const Cluster& rows, const Cluster& cols) {
  CMatrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out(static_cast<Index>(i), static_cast<Index>(j)) = m(rows[i], cols[j]);
  return out;
}

double min_singular(const CMatrix& m) {
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues().minCoeff();
}

std::vector<int> labels_of(const std::vector<Cluster>& clusters, Index n) {
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  for (std::size_t k = 0; k < clusters.size(); ++k)
    for (Index i : clusters[k]) labels[static_cast<std::size_t>(i)] = static_cast<int>(k);
  return labels;
}

// Follow `prev` to the candidate eigenbasis `cand`: match clusters by overlap and,
// with `align`, rotate each matched block so that prev_c^dag new_c is positive
// Hermitian (discrete parallel transport). Without `align` the candidate must
// already continue `prev` column for column.
CMatrix follow(const CMatrix& prev, const std::vector<Cluster>& prev_cl, const CMatrix& cand,
               const std::vector<Cluster>& cand_cl, bool align, std::size_t step) {
  if (prev_cl.size() != cand_cl.size())
    throw DegeneracyError("eigenvalue clusters change along the path (step " + std::to_string(step) + ")");
  CMatrix out(prev.rows(), prev.cols());
  std::vector<bool> used(cand_cl.size(), false);
  for (const auto& c : prev_cl) {
    const CMatrix pc = take_cols(prev, c);
    double best = -1;
    std::size_t best_d = 0;
    for (std::size_t d = 0; d < cand_cl.size(); ++d) {
      if (cand_cl[d].size() != c.size()) continue;
      const double sc = min_singular(pc.adjoint() * take_cols(cand, cand_cl[d]));
      if (sc > best) {
        best = sc;
        best_d = d;
      }
    }
    if (best < kMinOverlap)
      throw ContinuationError("frame continuation: overlap " + std::to_string(best) + " below 0.5, matching ambiguous",
                              step);
    if (used[best_d]) throw ContinuationError("frame continuation: overlap matrix is not a near-permutation", step);
    used[best_d] = true;
    const CMatrix cd = take_cols(cand, cand_cl[best_d]);
    const CMatrix o = pc.adjoint() * cd;
    CMatrix block;
    if (align) {
      Eigen::JacobiSVD<CMatrix> svd(o, Eigen::ComputeFullU | Eigen::ComputeFullV);
      block = cd * (svd.matrixV() * svd.matrixU().adjoint());
    } else {
      if (cand_cl[best_d] != c || o.trace().real() / static_cast<double>(c.size()) < kMinOverlap)
        throw ContinuationError("analytic frame is discontinuous along the path", step);
      block = cd;
    }
    for (std::size_t j = 0; j < c.size(); ++j) out.col(c[j]) = block.col(static_cast<Index>(j));
  }
  return out;
}

}  // namespace

std::string_view gauge_name(Gauge g) {
  switch (g) {
    case Gauge::analytic: return "analytic";
    case Gauge::parallel_transport: return "parallel_transport";
    case Gauge::max_overlap: return "max_overlap";
  }
  return "unknown";
}

std::optional<Gauge> gauge_from_name(std::string_view name) {
  for (auto g : {Gauge::analytic, Gauge::parallel_transport, Gauge::max_overlap})
    if (gauge_name(g) == name) return g;
  return std::nullopt;
}

std::vector<Cluster> frame_clusters(const Frame& f) {
  std::map<int, Cluster> by_label;
  for (std::size_t i = 0; i < f.labels.size(); ++i) by_label[f.labels[i]].push_back(static_cast<Index>(i));
  std::vector<Cluster> out;
  for (auto& [label, c] : by_label) out.push_back(std::move(c));
  return out;
}

std::vector<Frame> continue_frame(const ModelSpec& m, const std::vector<ParamPoint>& points, Gauge gauge,
                                  std::size_t anchor) {
  if (points.empty()) return {};
  if (anchor >= points.size()) throw std::out_of_range("continue_frame: anchor outside the path");
  const std::size_t n = points.size();

  // Zenith angles unwrapped outward from the anchor.
  std::vector<double> th(n);
  const bool analytic_source = gauge != Gauge::max_overlap;
  if (analytic_source) {
    th[anchor] = zenith(m, points[anchor]);
    for (std::size_t k = anchor + 1; k < n; ++k) {
      const double raw = zenith(m, points[k]);
      th[k] = raw + kTwoPi * std::round((th[k - 1] - raw) / kTwoPi);
    }
    for (std::size_t k = anchor; k-- > 0;) {
      const double raw = zenith(m, points[k]);
      th[k] = raw + kTwoPi * std::round((th[k + 1] - raw) / kTwoPi);
    }
  }

  std::vector<Cluster> clusters;
  auto candidate = [&](std::size_t k, std::vector<Cluster>& cl) -> CMatrix {
    if (analytic_source) {
      cl = analytic_clusters(m);
      return analytic_frame(m, points[k], th[k]);
    }
    auto e = eig_unitary(unitary_at(m, points[k]));
    cl = std::move(e.clusters);
    return e.vectors;
  };

  std::vector<Frame> frames(n);
  frames[anchor].columns = candidate(anchor, clusters);
  const auto start_labels = labels_of(clusters, dim(m));
  for (std::size_t k = 0; k < n; ++k) {
    frames[k].labels = start_labels;
    frames[k].param = points[k];
  }

  auto step = [&](std::size_t from, std::size_t to) {
    std::vector<Cluster> cl;
    const CMatrix cand = candidate(to, cl);
    frames[to].columns = follow(frames[from].columns, clusters, cand, cl, gauge != Gauge::analytic, to);
  };
  for (std::size_t k = anchor + 1; k < n; ++k) step(k - 1, k);
  for (std::size_t k = anchor; k-- > 0;) step(k + 1, k);
  return frames;
}

std::vector<Frame> continue_frame(const ModelSpec& m, const LoopPath& path, std::size_t steps, Gauge gauge) {
  return continue_frame(m, path.uniform(steps, false), gauge, 0);
}

ConnectionSample connection_at(const Frame& prev, const Frame& mid, const Frame& next, double h) {
  if (!(h != 0)) throw std::invalid_argument("connection_at: zero spacing");
  const CMatrix a = kI * (mid.columns.adjoint() * (next.columns - prev.columns)) / (2 * h);
  ConnectionSample out;
  out.a = 0.5 * (a + a.adjoint());
  out.a_diag = block_diagonal(out.a, frame_clusters(mid));
  return out;
}

CMatrix wilson_line(const SampledCurve& connection) { return ordered_exp(connection, Ordering::right, -kI); }

CMatrix geometric_factor(const SampledCurve& connection_diag) {
  return ordered_exp(connection_diag, Ordering::left, kI);
}

PatternInfo extract_pattern(const CMatrix& m, const std::vector<Cluster>& clusters) {
  PatternInfo info;
  info.permutation.assign(static_cast<std::size_t>(m.cols()), -1);
  info.level_phases.assign(static_cast<std::size_t>(m.cols()), Complex{1, 0});
  std::vector<bool> hit(clusters.size(), false);
  double in_pattern = 0;
  for (const auto& c : clusters) {
    double best = -1;
    std::size_t best_d = 0;
    for (std::size_t d = 0; d < clusters.size(); ++d) {
      if (clusters[d].size() != c.size()) continue;
      const double nrm = op_norm(take_block(m, clusters[d], c));
      if (nrm > best) {
        best = nrm;
        best_d = d;
      }
    }
    if (best < 0.99 || hit[best_d]) info.warning = true;
    hit[best_d] = true;
    const auto& d = clusters[best_d];
    const CMatrix blk = take_block(m, d, c);
    in_pattern += blk.squaredNorm();
    for (std::size_t j = 0; j < c.size(); ++j) info.permutation[c[j]] = static_cast<int>(d[j]);
    if (c.size() == 1) {
      const Complex z = blk(0, 0);
      info.level_phases[c[0]] = std::abs(z) > 0 ? z / std::abs(z) : Complex{1, 0};
    } else {
      Eigen::ComplexEigenSolver<CMatrix> es(blk);
      for (std::size_t j = 0; j < c.size(); ++j) {
        const Complex z = es.eigenvalues()(static_cast<Index>(j));
        info.level_phases[c[j]] = std::abs(z) > 0 ? z / std::abs(z) : Complex{1, 0};
      }
    }
  }
  info.residual = std::sqrt(std::max(0.0, m.squaredNorm() - in_pattern));
  if (info.residual > 1e-2) info.warning = true;
  return info;
}

HolonomyResult holonomy_from_frames(const std::vector<Frame>& ext, double h) {
  if (ext.size() < 4) throw std::invalid_argument("holonomy_from_frames: need at least four frames");
  const std::size_t n = ext.size() - 3;  // segments
  SampledCurve a, ad;
  a.samples.reserve(n + 1);
  ad.samples.reserve(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    auto c = connection_at(ext[k], ext[k + 1], ext[k + 2], h);
    const double s = static_cast<double>(k) * h;
    a.samples.push_back({s, std::move(c.a)});
    ad.samples.push_back({s, std::move(c.a_diag)});
  }
  a.closed = ad.closed = true;

  HolonomyResult r;
  r.W = wilson_line(a);
  r.B = geometric_factor(ad);
  r.M = r.W * r.B;
  r.clusters = frame_clusters(ext[1]);
  r.steps = n;
  r.start_frame = ext[1].columns;
  r.end_frame = ext[n + 1].columns;
  r.frame_defect = op_norm(r.W - r.start_frame.adjoint() * r.end_frame);
  auto pat = extract_pattern(r.M, r.clusters);
  r.permutation = std::move(pat.permutation);
  r.level_phases = std::move(pat.level_phases);
  r.residual = pat.residual;
  r.pattern_warning = pat.warning;
  return r;
}

HolonomyResult holonomy_matrix(const ModelSpec& m, const LoopPath& loop, const HolonomyOptions& opt) {
  validate(m);
  if (opt.steps < 2) throw ValidationError("holonomy_matrix: steps must be at least 2");
  if (!loop.closed()) throw ValidationError("holonomy_matrix: loop is not closed");
  if (loop.kind() == LoopKind::polygon && m.kind != ModelKind::berry_spin_half)
    throw UnsupportedError("polygon loops are defined on the Berry sphere only");
  const auto ends = loop.points({0.0, 1.0});
  const double gap = op_norm(unitary_at(m, ends[1]) - unitary_at(m, ends[0]));
  if (gap > 1e-9) {
    std::string msg = "holonomy_matrix: the unitary does not return to itself along " +
                      std::string(loop_kind_name(loop.kind())) + " (mismatch " + std::to_string(gap) + ")";
    if (loop.kind() == LoopKind::C_mu) msg += "; the symmetric product is mu-periodic only for even q, use factor_order=asymmetric";
    throw ValidationError(msg);
  }
  check_loop_clear(m, loop);

  auto run = [&](std::size_t n) {
    const auto pts = loop.uniform(n, true);
    const auto frames = continue_frame(m, pts, opt.gauge, 1);
    return holonomy_from_frames(frames, loop.length() / static_cast<double>(n));
  };

  std::size_t n = opt.steps;
  HolonomyResult cur = run(n);
  if (!opt.auto_refine) return cur;
  while (2 * n <= opt.max_steps) {
    HolonomyResult next = run(2 * n);
    const double change = op_norm(next.M - cur.M);
    cur = std::move(next);
    n *= 2;
    if (change < opt.refine_tol) break;
  }
  return cur;
}

HolonomyResult holonomy_matrix(const ModelSpec& m, const LoopPath& loop, std::size_t steps) {
  HolonomyOptions opt;
  opt.steps = steps;
  opt.auto_refine = false;
  return holonomy_matrix(m, loop, opt);
}

CMatrix change_start_frame(const CMatrix& m, const CMatrix& old_frame, const CMatrix& new_frame) {
  const CMatrix g = old_frame.adjoint() * new_frame;
  return g.adjoint() * m * g;
}

GaugedHolonomy apply_gauge(const std::vector<Frame>& ext, double h, const HolonomyResult& hol, const GaugeMap& gmap) {
  if (ext.size() < 4) throw std::invalid_argument("apply_gauge: need at least four frames");
  const std::size_t n = ext.size() - 3;
  std::vector<CMatrix> g(ext.size());
  for (std::size_t k = 0; k < ext.size(); ++k) {
    g[k] = gmap.g(ext[k].param);
    if (g[k].rows() != ext[k].columns.cols() || unitarity_defect(g[k]) > 1e-10)
      throw PreconditionError("apply_gauge: G is not unitary at sample " + std::to_string(k));
    if (gmap.diag_times_permutation) {
      // One unimodular entry per column; unitarity then makes it a permutation.
      for (Index j = 0; j < g[k].cols(); ++j)
        if (std::abs(g[k].col(j).cwiseAbs().maxCoeff() - 1) > 1e-10)
          throw PreconditionError("apply_gauge: G is not diagonal times permutation at sample " + std::to_string(k));
    }
  }

  // Column j of fG carries the label of the column G maps onto it.
  const CMatrix& g0 = g[1];
  std::vector<int> labels(ext[1].labels.size());
  for (Index j = 0; j < g0.cols(); ++j) {
    Index src = 0;
    g0.col(j).cwiseAbs().maxCoeff(&src);
    labels[static_cast<std::size_t>(j)] = ext[1].labels[static_cast<std::size_t>(src)];
  }

  GaugedHolonomy out;
  out.frames.resize(ext.size());
  for (std::size_t k = 0; k < ext.size(); ++k) {
    out.frames[k].columns = ext[k].columns * g[k];
    out.frames[k].labels = labels;
    out.frames[k].param = ext[k].param;
  }
  out.clusters = frame_clusters(out.frames[1]);
  for (std::size_t k = 1; k <= n + 1; ++k) {
    const auto c = connection_at(ext[k - 1], ext[k], ext[k + 1], h);
    const CMatrix dg = (g[k + 1] - g[k - 1]) / (2 * h);
    CMatrix a = g[k].adjoint() * c.a * g[k] + kI * g[k].adjoint() * dg;
    ConnectionSample s;
    s.s = static_cast<double>(k - 1) * h;
    s.a = 0.5 * (a + a.adjoint());
    s.a_diag = block_diagonal(s.a, out.clusters);
    out.connections.push_back(std::move(s));
  }
  const CMatrix& gs = g[1];
  const CMatrix& ge = g[n + 1];
  out.W = gs.adjoint() * hol.W * ge;
  out.B = ge.adjoint() * hol.B * gs;
  out.M = gs.adjoint() * hol.M * gs;
  return out;
}

}  // namespace holonomy
