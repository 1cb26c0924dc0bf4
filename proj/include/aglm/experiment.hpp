#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "aglm/checks.hpp"
#include "aglm/core.hpp"
#include "aglm/problems.hpp"
#include "aglm/trace.hpp"

namespace aglm::experiment {

using Json = nlohmann::ordered_json;  // keeps grid axes and summary keys in insertion order

/// A malformed or inconsistent experiment file. The CLI maps this to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class SolverKind { Lm, Pg, Dp };

const char* to_string(SolverKind kind);

/// One solver entry of the config: every parameter holds a list of candidate
/// values (a scalar in the file is a one-element list).
struct SolverGrid {
  SolverKind kind = SolverKind::Lm;
  std::vector<std::pair<std::string, std::vector<Json>>> axes;  // file order
};

struct ExperimentConfig {
  ProblemSpec problem;
  Json problem_echo;  // the problem section as resolved, for summary.json
  std::vector<SolverGrid> solvers;
  double epsilon = 1e-8;
  double budget = std::numeric_limits<double>::infinity();
  std::optional<double> f_target;
  long max_outer_iters = 10000;
  std::string output_dir = "out";
  std::uint64_t seed = 0;
  unsigned workers = 0;  // 0: hardware concurrency
  bool log_iterates = false;
};

ExperimentConfig parse_config(const Json& doc);
ExperimentConfig load_config(const std::string& path);

/// A single (solver, parameter assignment) pair. `params` holds every tunable of
/// the solver with defaults filled in.
struct GridPoint {
  SolverKind kind = SolverKind::Lm;
  int index = 0;  // position among the points of the same solver kind
  Json params;
  std::string csv_name() const;
};

/// Cartesian product of every solver's axes, in config order. The last axis varies fastest.
std::vector<GridPoint> expand_grid(const ExperimentConfig& config);

struct RunOutcome {
  GridPoint point;
  RunTrace trace;
  std::optional<double> cost_to_tolerance;
  std::string error;  // set when the run threw before producing a trace
};

/// Runs one grid point on an already built problem. Never throws for solver-side
/// failures; those are recorded in the outcome.
RunOutcome execute(const BuiltProblem& built, const ExperimentConfig& config,
                   const GridPoint& point);

/// Runs all points on a bounded pool of worker threads; results keep grid order.
std::vector<RunOutcome> execute_all(const BuiltProblem& built, const ExperimentConfig& config,
                                    const std::vector<GridPoint>& points);

inline constexpr const char* kCsvHeader =
    "k,F,delta,omega,rho,mu,inner_iters,backtracks,oracle_cost,wall_s";

/// Trace rows in the fixed CSV schema, with x_0..x_{d-1} appended when iterates are present.
void write_csv(std::ostream& out, const RunTrace& trace);

/// Cost at which a run first met the tolerance: F <= f_target when a target is set,
/// otherwise omega <= epsilon. A run that ends at the delta floor counts as converged
/// at its final row.
std::optional<double> cost_to_tolerance(const RunTrace& trace, const ExperimentConfig& config);

Json summarize(const ExperimentConfig& config, const std::vector<RunOutcome>& outcomes);

/// Runs every grid point, writes CSVs and summary.json under output_dir.
/// Returns the process exit code.
int run(const ExperimentConfig& config, std::ostream& log);

/// Problem-level and trace-level invariant checks on the configured problem.
std::vector<CheckResult> verify_checks(const ExperimentConfig& config);

/// Prints one line per check; returns 0 iff every check passed.
int verify(const ExperimentConfig& config, std::ostream& log);

/// Names and one-line descriptions of the bundled problems.
std::vector<std::pair<std::string, std::string>> problem_catalog();

}  // namespace aglm::experiment
