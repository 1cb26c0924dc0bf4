#pragma once

#include <chrono>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "aglm/core.hpp"

namespace aglm {

enum class RunStatus {
  Stationary,       // omega(x_k) <= epsilon
  DeltaFloor,       // F(x_k) within the floor of g* + h*
  TargetReached,    // F(x_k) <= requested objective target
  MaxIters,         // outer iteration cap
  BudgetExhausted,  // weighted oracle cost above budget
  SubproblemStall,  // inner solver hit its cap
};

const char* to_string(RunStatus s);

/// One row per outer iterate x_k. Row k describes x_k and the step that produced it
/// (rho, mu, inner_iters and backtracks are those spent going from x_{k-1} to x_k;
/// they are zero on row 0 except rho, which holds the initial value).
struct TraceRow {
  long k = 0;
  double objective = 0.0;
  double delta = 0.0;
  double omega = 0.0;
  double rho = 0.0;
  double mu = 0.0;
  long inner_iters = 0;
  long backtracks = 0;
  double oracle_cost = 0.0;
  double wall_seconds = 0.0;
};

struct RunTrace {
  std::vector<TraceRow> rows;
  RunStatus status = RunStatus::MaxIters;
  StationarityMeasure omega_measure = StationarityMeasure::Exact;
  long eta_clamps = 0;
  std::string message;            // error text for SubproblemStall and similar
  std::vector<Vector> iterates;   // filled when iterate recording is enabled
  Vector final_x;
  OracleLedger ledger;
};

/// Common stopping controls shared by the solvers.
struct StopRule {
  double epsilon = 1e-8;                        // stationarity target
  long max_outer_iters = 10000;
  double budget = std::numeric_limits<double>::infinity();  // weighted oracle cost
  std::optional<double> objective_target;       // stop once F(x_k) <= target
  bool record_iterates = false;
};

/// Least-squares slope of log(seq[i+1]) against log(seq[i]) over consecutive pairs.
/// Requires at least two pairs of positive values.
double fitted_order(const std::vector<double>& seq);

/// Objective values of the terminal phase: all positive F(x_k) up to and including
/// the first one at or below `threshold`, keeping the last `window` values.
std::vector<double> terminal_window(const RunTrace& trace, double threshold, std::size_t window);

/// Cost recorded on the first row with F <= target; nullopt if never reached.
std::optional<double> cost_to_objective(const RunTrace& trace, double target);

/// Cost recorded on the first row with omega <= epsilon; nullopt if never reached.
std::optional<double> cost_to_stationarity(const RunTrace& trace, double epsilon);

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace aglm
