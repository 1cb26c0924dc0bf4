#include "aglm/trace.hpp"

#include <cmath>

namespace aglm {

const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Stationary: return "Stationary";
    case RunStatus::DeltaFloor: return "DeltaFloor";
    case RunStatus::TargetReached: return "TargetReached";
    case RunStatus::MaxIters: return "MaxIters";
    case RunStatus::BudgetExhausted: return "BudgetExhausted";
    case RunStatus::SubproblemStall: return "SubproblemStall";
  }
  return "Unknown";
}

double fitted_order(const std::vector<double>& seq) {
  if (seq.size() < 3) throw ParameterDomain("fitted_order needs at least three values");
  std::vector<double> u, v;
  for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
    if (!(seq[i] > 0.0) || !(seq[i + 1] > 0.0)) throw ParameterDomain("fitted_order needs positive values");
    u.push_back(std::log(seq[i]));
    v.push_back(std::log(seq[i + 1]));
  }
  const double n = static_cast<double>(u.size());
  double mu_u = 0.0, mu_v = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    mu_u += u[i];
    mu_v += v[i];
  }
  mu_u /= n;
  mu_v /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    sxy += (u[i] - mu_u) * (v[i] - mu_v);
    sxx += (u[i] - mu_u) * (u[i] - mu_u);
  }
  if (sxx == 0.0) throw ParameterDomain("fitted_order: degenerate sequence");
  return sxy / sxx;
}

std::vector<double> terminal_window(const RunTrace& trace, double threshold, std::size_t window) {
  std::vector<double> values;
  for (const TraceRow& row : trace.rows) {
    if (!(row.objective > 0.0)) break;
    values.push_back(row.objective);
    if (row.objective <= threshold) break;
  }
  if (values.size() > window) values.erase(values.begin(), values.end() - static_cast<long>(window));
  return values;
}

std::optional<double> cost_to_objective(const RunTrace& trace, double target) {
  for (const TraceRow& row : trace.rows) {
    if (row.objective <= target) return row.oracle_cost;
  }
  return std::nullopt;
}

std::optional<double> cost_to_stationarity(const RunTrace& trace, double epsilon) {
  for (const TraceRow& row : trace.rows) {
    if (row.omega <= epsilon) return row.oracle_cost;
  }
  return std::nullopt;
}

}  // namespace aglm
