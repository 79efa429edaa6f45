#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "holonomy/framegauge.hpp"
#include "holonomy/models.hpp"
#include "holonomy/path.hpp"

namespace holonomy::cli {

using Json = nlohmann::ordered_json;

enum class Format { json, csv };
enum class Job { holonomy, evolve, verify, sweep };
enum class Evolution { stroboscopic, flow };

std::string_view job_name(Job j);

struct NumericConfig {
  std::size_t steps = 1024;
  bool auto_refine = true;
  double refine_tol = 1e-6;
  std::size_t max_steps = std::size_t{1} << 20;
  Gauge gauge = Gauge::analytic;
  std::size_t L = std::size_t{1} << 14;
  std::vector<std::size_t> L_values{1u << 10, 1u << 12, 1u << 14, 1u << 16};
  Evolution evolution = Evolution::stroboscopic;
  double T = 0;  // flow only; 0 means L * dt
  double tolerance = 1e-5;
};

struct ExperimentConfig {
  Job job = Job::holonomy;
  ModelSpec model;
  ParamPoint point;
  LoopKind loop = LoopKind::C_theta;
  double span = 2 * kPi;
  std::vector<std::pair<double, double>> vertices;
  NumericConfig numeric;
  Format format = Format::json;
  std::string out = "-";

  LoopPath path() const;
  // Fully resolved configuration, as echoed into records.
  Json echo() const;
};

// Radians from a number or a string such as "0.5pi", "-pi/4", "3pi/2", "1.2".
double angle_from_json(const Json& v);
double parse_angle(std::string_view s);

ExperimentConfig parse_config(const Json& j);
ParamPoint default_point(ModelKind k);

struct SweepRow {
  long L = 0;
  double deviation = 0;
};

using FieldValue =
    std::variant<std::string, double, long, std::vector<long>, std::vector<double>, CMatrix, std::vector<SweepRow>>;

struct Field {
  std::string key;
  FieldValue value;
};

struct ResultRecord {
  std::string job;
  Json config;
  std::vector<Field> result;
  double wall_time_s = 0;

  const Field* find(std::string_view key) const;
};

struct RunOutcome {
  ResultRecord record;
  int exit_code = 0;
  std::string message;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitDegeneracy = 3;
inline constexpr int kExitMismatch = 4;

// Worker count for sweeps: HOLONOMY_THREADS if set, else hardware concurrency.
unsigned thread_cap();

RunOutcome run(const ExperimentConfig& config);

// Throws if a matrix field is not unitary within 1e-6.
std::string emit(const ResultRecord& record, Format format);
ResultRecord parse_record(std::string_view text, Format format);

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace holonomy::cli
