#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <CLI11.hpp>

#include "holonomy/dynamics.hpp"
#include "holonomy/errors.hpp"
#include "holonomy/oracles.hpp"

namespace holonomy::cli {

namespace {

std::string trim(std::string_view s) {
  std::string out;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
  return out;
}

double parse_number(const std::string& s, std::string_view context) {
  if (s.empty()) throw ValidationError("empty number in '" + std::string(context) + "'");
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ValidationError("cannot parse number in '" + std::string(context) + "'");
  }
  if (pos != s.size()) throw ValidationError("trailing characters in '" + std::string(context) + "'");
  return v;
}

// "a", "a/b", "-", "+" or "" as a coefficient.
double parse_coefficient(std::string s, std::string_view context) {
  if (!s.empty() && s.back() == '*') s.pop_back();
  if (s.empty() || s == "+") return 1.0;
  if (s == "-") return -1.0;
  const auto slash = s.find('/');
  if (slash == std::string::npos) return parse_number(s, context);
  const double den = parse_number(s.substr(slash + 1), context);
  if (den == 0) throw ValidationError("zero denominator in '" + std::string(context) + "'");
  return parse_number(s.substr(0, slash), context) / den;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class E>
E parse_enum(const std::string& s, std::initializer_list<std::pair<const char*, E>> table, std::string_view what) {
  for (const auto& [name, value] : table)
    if (s == name) return value;
  throw ValidationError("unknown " + std::string(what) + " '" + s + "'");
}

Json matrix_json(const CMatrix& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(Json::array({m(i, j).real(), m(i, j).imag()}));
    rows.push_back(std::move(row));
  }
  return rows;
}

bool is_matrix_json(const Json& v) {
  if (!v.is_array() || v.empty()) return false;
  for (const auto& row : v) {
    if (!row.is_array() || row.size() != v.front().size() || row.empty()) return false;
    for (const auto& e : row)
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) return false;
  }
  return true;
}

CMatrix matrix_from_json(const Json& v) {
  CMatrix m(static_cast<Index>(v.size()), static_cast<Index>(v.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = Complex(v[i][j][0].get<double>(), v[i][j][1].get<double>());
  return m;
}

Json field_json(const FieldValue& v) {
  return std::visit(
      [](const auto& x) -> Json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, CMatrix>) {
          return matrix_json(x);
        } else if constexpr (std::is_same_v<T, std::vector<SweepRow>>) {
          Json a = Json::array();
          for (const auto& r : x) a.push_back(Json{{"L", r.L}, {"deviation", r.deviation}});
          return a;
        } else {
          return Json(x);
        }
      },
      v);
}

FieldValue field_from_json(const std::string& key, const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return v.get<long>();
  if (v.is_number()) return v.get<double>();
  if (!v.is_array()) throw ValidationError("record field '" + key + "' has unsupported type");
  if (is_matrix_json(v)) return matrix_from_json(v);
  if (!v.empty() && v.front().is_object()) {
    std::vector<SweepRow> rows;
    for (const auto& r : v) rows.push_back({r.at("L").get<long>(), r.at("deviation").get<double>()});
    return rows;
  }
  bool all_int = true;
  for (const auto& e : v) {
    if (!e.is_number()) throw ValidationError("record field '" + key + "' has non-numeric entries");
    all_int = all_int && e.is_number_integer();
  }
  // An empty list carries no type; it reads back as an index list.
  if (all_int) return v.get<std::vector<long>>();
  return v.get<std::vector<double>>();
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out(1);
  for (char c : line) {
    if (c == ',')
      out.emplace_back();
    else
      out.back().push_back(c);
  }
  return out;
}

std::string csv_text(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

void check_unitary(const ResultRecord& r) {
  for (const auto& f : r.result) {
    const auto* m = std::get_if<CMatrix>(&f.value);
    if (m == nullptr) continue;
    if (!all_finite(*m) || m->rows() != m->cols() || unitarity_defect(*m) > 1e-6)
      throw std::runtime_error("refusing to emit non-unitary matrix '" + f.key + "'");
  }
}

std::vector<long> to_long(const std::vector<int>& v) { return {v.begin(), v.end()}; }

std::vector<double> phases(const std::vector<Complex>& z) {
  std::vector<double> out;
  for (const auto& c : z) out.push_back(std::arg(c));
  return out;
}

void add_holonomy(ResultRecord& r, const HolonomyResult& h) {
  r.result.push_back({"steps", static_cast<long>(h.steps)});
  r.result.push_back({"residual", h.residual});
  r.result.push_back({"pattern_warning", std::string(h.pattern_warning ? "yes" : "no")});
  r.result.push_back({"frame_defect", h.frame_defect});
  r.result.push_back({"permutation", to_long(h.permutation)});
  r.result.push_back({"level_phases", phases(h.level_phases)});
  r.result.push_back({"M", h.M});
  r.result.push_back({"W", h.W});
  r.result.push_back({"B", h.B});
}

HolonomyOptions options(const NumericConfig& n) {
  HolonomyOptions o;
  o.gauge = n.gauge;
  o.steps = n.steps;
  o.auto_refine = n.auto_refine;
  o.refine_tol = n.refine_tol;
  o.max_steps = n.max_steps;
  return o;
}

// Model and schedule for one evolution run with L kicks or slices.
std::pair<ModelSpec, Schedule> evolution_setup(const ExperimentConfig& c, const LoopPath& path, std::size_t L) {
  if (c.numeric.evolution == Evolution::stroboscopic) return {c.model, Schedule::stroboscopic(path, L)};
  if (c.model.kind != ModelKind::berry_spin_half) throw UnsupportedError("flow evolution needs berry_spin_half");
  ModelSpec slice = c.model;
  const double T = c.numeric.T > 0 ? c.numeric.T : static_cast<double>(L) * c.model.dt;
  slice.dt = T / static_cast<double>(L);
  return {slice, Schedule::midpoint(path, L)};
}

HolonomyResult shared_holonomy(const ExperimentConfig& c, const LoopPath& path) {
  if (c.numeric.gauge == Gauge::max_overlap)
    throw UnsupportedError("evolution jobs compare in the analytic start frame; use analytic or parallel_transport");
  return holonomy_matrix(c.model, path, options(c.numeric));
}

void run_holonomy(const ExperimentConfig& c, ResultRecord& r) {
  add_holonomy(r, holonomy_matrix(c.model, c.path(), options(c.numeric)));
}

int run_verify(const ExperimentConfig& c, ResultRecord& r, std::string& message) {
  const LoopPath path = c.path();
  const Prediction p = predict(c.model, path);
  const HolonomyResult h = holonomy_matrix(c.model, path, options(c.numeric));
  // Predictions live in the analytic start frame.
  const CMatrix m = c.numeric.gauge == Gauge::analytic
                        ? h.M
                        : change_start_frame(h.M, h.start_frame, analytic_frame(c.model, path.points({0.0}).front(),
                                                                                 zenith(c.model, path.base())));
  const double dist = prediction_distance(m, p, h.clusters);
  const bool ok = dist <= c.numeric.tolerance;
  add_holonomy(r, h);
  r.result.push_back({"formula", std::string(formula_name(p.formula))});
  r.result.push_back({"comparison", std::string(p.comparison == Comparison::exact ? "exact" : "gauge_class")});
  r.result.push_back({"distance", dist});
  r.result.push_back({"tolerance", c.numeric.tolerance});
  r.result.push_back({"verdict", std::string(ok ? "match" : "mismatch")});
  r.result.push_back({"M_expected", p.M_expected});
  if (ok) return kExitOk;
  message = "verification mismatch: distance " + format_double(dist) + " exceeds tolerance " +
            format_double(c.numeric.tolerance);
  return kExitMismatch;
}

void run_evolve(const ExperimentConfig& c, ResultRecord& r) {
  const LoopPath path = c.path();
  const HolonomyResult h = shared_holonomy(c, path);
  const auto [model, schedule] = evolution_setup(c, path, c.numeric.L);
  const EvolutionReport e = adiabatic_predict(model, schedule, h);
  add_holonomy(r, h);
  r.result.push_back({"L", static_cast<long>(c.numeric.L)});
  r.result.push_back({"deviation", e.deviation});
  r.result.push_back({"permutation_exact", to_long(e.permutation_exact)});
  r.result.push_back({"U_whole", e.U_whole});
  r.result.push_back({"adiabatic_prediction", e.adiabatic_prediction});
  r.result.push_back({"D", e.dynamical_factor});
  r.result.push_back({"M_extracted", e.M_extracted});
}

void run_sweep(const ExperimentConfig& c, ResultRecord& r) {
  const LoopPath path = c.path();
  const HolonomyResult h = shared_holonomy(c, path);
  const auto& Ls = c.numeric.L_values;
  std::vector<SweepRow> rows(Ls.size());
  std::vector<std::exception_ptr> errors(Ls.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < Ls.size(); k = next++) {
      try {
        const auto [model, schedule] = evolution_setup(c, path, Ls[k]);
        rows[k] = {static_cast<long>(Ls[k]), adiabatic_predict(model, schedule, h).deviation};
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const unsigned n = std::min<unsigned>(thread_cap(), static_cast<unsigned>(Ls.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  add_holonomy(r, h);
  r.result.push_back({"sweep", rows});
}

}  // namespace

std::string_view job_name(Job j) {
  switch (j) {
    case Job::holonomy: return "holonomy";
    case Job::evolve: return "evolve";
    case Job::verify: return "verify";
    case Job::sweep: return "sweep";
  }
  return "?";
}

double parse_angle(std::string_view text) {
  const std::string s = trim(text);
  const auto at = s.find("pi");
  if (at == std::string::npos) return parse_number(s, text);
  double v = parse_coefficient(s.substr(0, at), text) * kPi;
  const std::string tail = s.substr(at + 2);
  if (tail.empty()) return v;
  if (tail.front() != '/') throw ValidationError("cannot parse angle '" + std::string(text) + "'");
  const double den = parse_number(tail.substr(1), text);
  if (den == 0) throw ValidationError("zero denominator in '" + std::string(text) + "'");
  return v / den;
}

double angle_from_json(const Json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return parse_angle(std::string_view(v.get_ref<const std::string&>()));
  throw ValidationError("angle must be a number or a string like \"0.5pi\"");
}

ParamPoint default_point(ModelKind) {
  ParamPoint x;
  x[Coord::theta] = 0.35 * kPi;
  x[Coord::phi] = 0.1 * kPi;
  x[Coord::B] = 1.0;
  x[Coord::mu] = 0.3 * kPi;
  x[Coord::lambda] = 0.45 * kPi;
  x[Coord::eta] = 0.2 * kPi;
  x[Coord::chi] = 0.15 * kPi;
  return x;
}

LoopPath ExperimentConfig::path() const {
  if (loop == LoopKind::polygon) return LoopPath::polygon(point, vertices);
  if (loop == LoopKind::stationary) return LoopPath::stationary(point);
  return LoopPath::coordinate_loop(point, *loop_coordinate(loop), span);
}

Json ExperimentConfig::echo() const {
  Json j;
  j["job"] = std::string(job_name(job));
  Json model_j;
  model_j["name"] = std::string(model_name(model.kind));
  model_j["q"] = model.q;
  model_j["p"] = model.p;
  model_j["dt"] = model.dt;
  model_j["factor_order"] = std::string(factor_order_name(model.order));
  j["model"] = model_j;
  Json pt;
  for (Coord c : coordinates(model.kind)) pt[std::string(coord_name(c))] = point[c];
  j["point"] = pt;
  Json loop_j;
  loop_j["kind"] = std::string(loop_kind_name(loop));
  if (loop_coordinate(loop)) loop_j["span"] = span;
  if (loop == LoopKind::polygon) {
    Json vs = Json::array();
    for (const auto& [t, p] : vertices) vs.push_back(Json::array({t, p}));
    loop_j["vertices"] = vs;
  }
  j["loop"] = loop_j;
  Json num;
  num["steps"] = numeric.steps;
  num["auto_refine"] = numeric.auto_refine;
  num["refine_tol"] = numeric.refine_tol;
  num["max_steps"] = numeric.max_steps;
  num["gauge"] = std::string(gauge_name(numeric.gauge));
  num["L"] = numeric.L;
  num["L_values"] = numeric.L_values;
  num["evolution"] = numeric.evolution == Evolution::flow ? "flow" : "stroboscopic";
  num["T"] = numeric.T;
  num["tolerance"] = numeric.tolerance;
  j["numeric"] = num;
  j["output"] = Json{{"format", format == Format::csv ? "csv" : "json"}, {"path", out}};
  return j;
}

ExperimentConfig parse_config(const Json& j) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (key != "job" && key != "model" && key != "point" && key != "loop" && key != "numeric" && key != "output")
      throw ValidationError("unknown config section '" + key + "'");

  ExperimentConfig c;
  try {
    if (j.contains("job"))
      c.job = parse_enum<Job>(j["job"].get<std::string>(),
                              {{"holonomy", Job::holonomy},
                               {"evolve", Job::evolve},
                               {"verify", Job::verify},
                               {"sweep", Job::sweep}},
                              "job");

    const Json model_j = j.value("model", Json::object());
    const auto kind = model_from_name(model_j.value("name", std::string("berry_spin_half")));
    if (!kind) throw ValidationError("unknown model '" + model_j.value("name", std::string()) + "'");
    c.model.kind = *kind;
    c.model.q = model_j.value("q", 0);
    c.model.p = model_j.value("p", 0);
    c.model.dt = model_j.value("dt", 1.0);
    c.model.order = parse_enum<FactorOrder>(model_j.value("factor_order", std::string("symmetric")),
                                            {{"symmetric", FactorOrder::symmetric},
                                             {"asymmetric", FactorOrder::asymmetric}},
                                            "factor_order");
    validate(c.model);

    c.point = default_point(c.model.kind);
    const auto& coords = coordinates(c.model.kind);
    const Json point_j = j.value("point", Json::object());
    for (const auto& [key, value] : point_j.items()) {
      const auto coord = coord_from_name(key);
      if (!coord || std::find(coords.begin(), coords.end(), *coord) == coords.end())
        throw ValidationError("coordinate '" + key + "' does not exist for model " +
                              std::string(model_name(c.model.kind)));
      c.point[*coord] = angle_from_json(value);
    }

    const Json loop_j = j.value("loop", Json::object());
    const std::string loop_name = loop_j.value("kind", std::string("C_theta"));
    const auto lk = loop_kind_from_name(loop_name);
    if (!lk) throw ValidationError("unknown loop kind '" + loop_name + "'");
    c.loop = *lk;
    if (const auto lc = loop_coordinate(c.loop);
        lc && std::find(coords.begin(), coords.end(), *lc) == coords.end())
      throw ValidationError("loop " + loop_name + " varies a coordinate the model does not have");
    if (loop_j.contains("span")) c.span = angle_from_json(loop_j["span"]);
    if (c.loop == LoopKind::polygon) {
      if (!loop_j.contains("vertices")) throw ValidationError("polygon loop needs vertices");
      for (const auto& v : loop_j["vertices"]) {
        if (!v.is_array() || v.size() != 2) throw ValidationError("polygon vertices are [theta, phi] pairs");
        c.vertices.emplace_back(angle_from_json(v[0]), angle_from_json(v[1]));
      }
    }

    const Json num = j.value("numeric", Json::object());
    c.numeric.steps = num.value("steps", c.numeric.steps);
    c.numeric.auto_refine = num.value("auto_refine", c.numeric.auto_refine);
    c.numeric.refine_tol = num.value("refine_tol", c.numeric.refine_tol);
    c.numeric.max_steps = num.value("max_steps", c.numeric.max_steps);
    if (num.contains("gauge")) {
      const auto g = gauge_from_name(num["gauge"].get<std::string>());
      if (!g) throw ValidationError("unknown gauge '" + num["gauge"].get<std::string>() + "'");
      c.numeric.gauge = *g;
    }
    c.numeric.L = num.value("L", c.numeric.L);
    if (num.contains("L_values")) c.numeric.L_values = num["L_values"].get<std::vector<std::size_t>>();
    c.numeric.evolution = c.model.kind == ModelKind::berry_spin_half ? Evolution::flow : Evolution::stroboscopic;
    if (num.contains("evolution"))
      c.numeric.evolution = parse_enum<Evolution>(
          num["evolution"].get<std::string>(),
          {{"stroboscopic", Evolution::stroboscopic}, {"flow", Evolution::flow}}, "evolution");
    c.numeric.T = num.value("T", c.numeric.T);
    c.numeric.tolerance = num.value("tolerance", c.numeric.tolerance);

    const Json out = j.value("output", Json::object());
    c.format = parse_enum<Format>(out.value("format", std::string("json")),
                                  {{"json", Format::json}, {"csv", Format::csv}}, "format");
    c.out = out.value("path", c.out);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }

  const auto& n = c.numeric;
  if (n.steps < 1 || n.max_steps < n.steps) throw ValidationError("numeric.steps must be in [1, max_steps]");
  if (!(n.refine_tol > 0) || !(n.tolerance > 0)) throw ValidationError("tolerances must be positive");
  if (n.L < 1) throw ValidationError("numeric.L must be >= 1");
  if (n.L_values.empty() || std::any_of(n.L_values.begin(), n.L_values.end(), [](auto v) { return v < 1; }))
    throw ValidationError("numeric.L_values must be a non-empty list of positive integers");
  if (n.T < 0) throw ValidationError("numeric.T must be non-negative");
  if (n.evolution == Evolution::flow && c.model.kind != ModelKind::berry_spin_half)
    throw ValidationError("flow evolution needs berry_spin_half");
  if (c.loop == LoopKind::polygon && c.model.kind != ModelKind::berry_spin_half)
    throw ValidationError("polygon loops need berry_spin_half");
  if (!std::isfinite(c.span) || c.span == 0) throw ValidationError("loop span must be finite and nonzero");
  return c;
}

const Field* ResultRecord::find(std::string_view key) const {
  for (const auto& f : result)
    if (f.key == key) return &f;
  return nullptr;
}

unsigned thread_cap() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("HOLONOMY_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) n = std::min(n, static_cast<unsigned>(v));
  }
  return n;
}

RunOutcome run(const ExperimentConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  RunOutcome o;
  o.record.job = std::string(job_name(config.job));
  o.record.config = config.echo();
  switch (config.job) {
    case Job::holonomy: run_holonomy(config, o.record); break;
    case Job::verify: o.exit_code = run_verify(config, o.record, o.message); break;
    case Job::evolve: run_evolve(config, o.record); break;
    case Job::sweep: run_sweep(config, o.record); break;
  }
  o.record.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return o;
}

std::string emit(const ResultRecord& record, Format format) {
  check_unitary(record);
  if (format == Format::json) {
    Json j;
    j["job"] = record.job;
    j["config"] = record.config.is_null() ? Json::object() : record.config;
    Json res = Json::object();
    for (const auto& f : record.result) res[f.key] = field_json(f.value);
    j["result"] = res;
    j["sidecar"] = Json{{"wall_time_s", record.wall_time_s}};
    return j.dump(2) + "\n";
  }

  std::ostringstream os;
  if (const Field* s = record.find("sweep"); s != nullptr && record.job == "sweep") {
    os << "L,deviation\n";
    for (const auto& row : std::get<std::vector<SweepRow>>(s->value))
      os << row.L << ',' << format_double(row.deviation) << '\n';
    return os.str();
  }
  os << "section,key,row,col,re,im\n";
  os << "meta,job,,," << csv_text(record.job) << ",\n";
  for (const auto& f : record.result) {
    const std::string key = csv_text(f.key);
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, std::string>) {
            os << "label," << key << ",,," << csv_text(x) << ",\n";
          } else if constexpr (std::is_same_v<T, double>) {
            os << "scalar," << key << ",,," << format_double(x) << ",\n";
          } else if constexpr (std::is_same_v<T, long>) {
            os << "integer," << key << ",,," << x << ",\n";
          } else if constexpr (std::is_same_v<T, std::vector<long>>) {
            for (std::size_t k = 0; k < x.size(); ++k) os << "indices," << key << ',' << k << ",," << x[k] << ",\n";
          } else if constexpr (std::is_same_v<T, std::vector<double>>) {
            for (std::size_t k = 0; k < x.size(); ++k)
              os << "reals," << key << ',' << k << ",," << format_double(x[k]) << ",\n";
          } else if constexpr (std::is_same_v<T, CMatrix>) {
            for (Index i = 0; i < x.rows(); ++i)
              for (Index jj = 0; jj < x.cols(); ++jj)
                os << "matrix," << key << ',' << i << ',' << jj << ',' << format_double(x(i, jj).real()) << ','
                   << format_double(x(i, jj).imag()) << '\n';
          } else {
            for (std::size_t k = 0; k < x.size(); ++k)
              os << "sweep," << key << ',' << k << ",," << x[k].L << ',' << format_double(x[k].deviation) << '\n';
          }
        },
        f.value);
  }
  return os.str();
}

ResultRecord parse_record(std::string_view text, Format format) {
  ResultRecord r;
  if (format == Format::json) {
    Json j;
    try {
      j = Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("record: ") + e.what());
    }
    r.job = j.at("job").get<std::string>();
    r.config = j.value("config", Json::object());
    for (const auto& [key, value] : j.at("result").items()) r.result.push_back({key, field_from_json(key, value)});
    if (j.contains("sidecar")) r.wall_time_s = j["sidecar"].value("wall_time_s", 0.0);
    return r;
  }

  std::istringstream is{std::string(text)};
  std::string line;
  if (!std::getline(is, line)) throw ValidationError("record: empty CSV");
  if (line == "L,deviation") {
    r.job = "sweep";
    std::vector<SweepRow> rows;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      const auto cells = split_csv(line);
      if (cells.size() != 2) throw ValidationError("record: malformed sweep row '" + line + "'");
      rows.push_back({std::stol(cells[0]), parse_number(cells[1], line)});
    }
    r.result.push_back({"sweep", rows});
    return r;
  }
  if (line != "section,key,row,col,re,im") throw ValidationError("record: unknown CSV header '" + line + "'");

  // Entries of one key are contiguous; matrices grow as rows arrive.
  std::vector<std::vector<std::vector<Complex>>> pending;
  auto field_for = [&](const std::string& key, FieldValue init) -> FieldValue& {
    if (r.result.empty() || r.result.back().key != key) r.result.push_back({key, std::move(init)});
    return r.result.back().value;
  };
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto c = split_csv(line);
    if (c.size() != 6) throw ValidationError("record: malformed CSV row '" + line + "'");
    const std::string& section = c[0];
    const std::string& key = c[1];
    if (section == "meta") {
      if (key == "job") r.job = c[4];
    } else if (section == "label") {
      field_for(key, c[4]);
    } else if (section == "scalar") {
      field_for(key, parse_number(c[4], line));
    } else if (section == "integer") {
      field_for(key, std::stol(c[4]));
    } else if (section == "indices") {
      std::get<std::vector<long>>(field_for(key, std::vector<long>{})).push_back(std::stol(c[4]));
    } else if (section == "reals") {
      std::get<std::vector<double>>(field_for(key, std::vector<double>{})).push_back(parse_number(c[4], line));
    } else if (section == "sweep") {
      std::get<std::vector<SweepRow>>(field_for(key, std::vector<SweepRow>{}))
          .push_back({std::stol(c[4]), parse_number(c[5], line)});
    } else if (section == "matrix") {
      auto& m = std::get<CMatrix>(field_for(key, CMatrix()));
      const Index i = std::stol(c[2]), jj = std::stol(c[3]);
      if (i >= m.rows() || jj >= m.cols()) {
        CMatrix grown = CMatrix::Zero(std::max(m.rows(), i + 1), std::max(m.cols(), jj + 1));
        grown.topLeftCorner(m.rows(), m.cols()) = m;
        m = grown;
      }
      m(i, jj) = Complex(parse_number(c[4], line), parse_number(c[5], line));
    } else {
      throw ValidationError("record: unknown CSV section '" + section + "'");
    }
  }
  return r;
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical holonomy of adiabatic cycles in Hamiltonians and quantum maps"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  std::string config_path, model, loop, format, out_path, gauge, order, evolution;
  std::size_t steps = 0, kicks = 0;
  double tolerance = 0;
  std::vector<std::string> params;
  bool no_refine = false;

  const char* jobs[] = {"holonomy", "evolve", "verify", "sweep"};
  const char* blurbs[] = {"integrate M(C) = W(C) B(C) along a loop", "compare kicked evolution with f M D f^dag",
                          "compare M(C) with the closed-form oracle", "deviation of the adiabatic prediction over L"};
  for (int k = 0; k < 4; ++k) {
    auto* sub = app.add_subcommand(jobs[k], blurbs[k]);
    sub->add_option("--config", config_path, "JSON experiment config");
    sub->add_option("--model", model, "berry_spin_half | map_spin_half | map_spin_threehalf");
    sub->add_option("--loop", loop, "C_theta | C_phi | C_lambda | C_mu | C_eta | C_chi");
    sub->add_option("--steps", steps, "initial integrator steps");
    sub->add_option("--kicks", kicks, "number of kicks L for evolve");
    sub->add_option("--format", format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--out", out_path, "output file, '-' for stdout");
    sub->add_option("--gauge", gauge, "analytic | parallel_transport | max_overlap");
    sub->add_option("--order", order, "symmetric | asymmetric factor order of map models");
    sub->add_option("--evolution", evolution, "stroboscopic | flow");
    sub->add_option("--tolerance", tolerance, "verification tolerance");
    sub->add_option("--param,-p", params, "key=value: q, p, dt, span, T or a coordinate such as mu=0.5pi");
    sub->add_flag("--no-refine", no_refine, "disable automatic step doubling");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : kExitValidation;
  }

  ExperimentConfig config;
  try {
    Json j = Json::object();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw ValidationError("cannot open config '" + config_path + "'");
      try {
        j = Json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw ValidationError("config '" + config_path + "': " + e.what());
      }
      if (!j.is_object()) throw ValidationError("config '" + config_path + "' is not a JSON object");
    }
    for (auto* sub : app.get_subcommands()) j["job"] = sub->get_name();
    auto section = [&](const char* name) -> Json& {
      if (!j.contains(name)) j[name] = Json::object();
      return j[name];
    };
    if (!model.empty()) section("model")["name"] = model;
    if (!order.empty()) section("model")["factor_order"] = order;
    if (!loop.empty()) section("loop")["kind"] = loop;
    if (steps > 0) section("numeric")["steps"] = steps;
    if (no_refine) section("numeric")["auto_refine"] = false;
    if (kicks > 0) section("numeric")["L"] = kicks;
    if (!gauge.empty()) section("numeric")["gauge"] = gauge;
    if (!evolution.empty()) section("numeric")["evolution"] = evolution;
    if (tolerance != 0) section("numeric")["tolerance"] = tolerance;
    if (!format.empty()) section("output")["format"] = format;
    if (!out_path.empty()) section("output")["path"] = out_path;
    for (const auto& kv : params) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ValidationError("--param expects key=value, got '" + kv + "'");
      const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
      if (key == "q" || key == "p") {
        section("model")[key] = static_cast<int>(std::lround(parse_number(value, kv)));
      } else if (key == "dt") {
        section("model")[key] = parse_number(value, kv);
      } else if (key == "span") {
        section("loop")[key] = value;
      } else if (key == "T") {
        section("numeric")[key] = parse_number(value, kv);
      } else {
        section("point")[key] = value;
      }
    }
    config = parse_config(j);

    RunOutcome o = run(config);
    const std::string text = emit(o.record, config.format);
    if (config.out == "-") {
      out << text;
    } else {
      std::ofstream f(config.out, std::ios::binary);
      if (!f) throw std::runtime_error("cannot open output '" + config.out + "'");
      f << text;
      if (!f.flush()) throw std::runtime_error("write failed for '" + config.out + "'");
    }
    if (!o.message.empty()) err << o.message << '\n';
    return o.exit_code;
  } catch (const DegeneracyError& e) {
    err << "degeneracy: " << e.what() << '\n';
    return kExitDegeneracy;
  } catch (const ContinuationError& e) {
    err << "continuation failed: " << e.what() << '\n';
    return kExitDegeneracy;
  } catch (const ValidationError& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitValidation;
  } catch (const PreconditionError& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace holonomy::cli
