#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pslab/types.hpp"

namespace pslab {

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
};

// Least squares on (ln h, ln value); at least three points, values > 0.
SlopeFit fit_slope(const std::vector<double>& h, const std::vector<double>& values);

struct PhaseWindow {
  double x_min = -2.0, x_max = 2.0, xi_min = -2.0, xi_max = 2.0;
  std::size_t nx = 32, nxi = 32;
  PhaseGrid grid() const { return PhaseGrid(x_min, x_max, xi_min, xi_max, nx, nxi); }
};

// Scenarios: ehrenfest, tdhf-vlasov, ehrenfest-time, counterexample, composition.
struct ExperimentConfig {
  std::string scenario = "ehrenfest";
  std::vector<double> h_list{0.4, 0.2, 0.1, 0.05};
  double t_max = 1.0;
  double dt = 0.01;
  int t_samples = 4;  // outputs at t_max * k / t_samples

  std::string potential = "cosine";
  double v_amp = 1.0, v_scale = 1.0;
  std::string interaction = "zero";
  double w_amp = 1.0, w_scale = 1.0;

  double symbol_width = 2.0;     // Gaussian observable or initial state width
  PhasePoint center{0.0, 0.0};   // coherent-state centre where one is used
  double box = 12.0;             // position grid [-box, box)
  double xi_reach = 7.0;         // smallest resolved Nyquist momentum
  PhaseWindow window;            // fixed physical window for the metrics

  double alpha = 1.0;
  int quad_nodes = 200;
  std::vector<double> radii{2.0, 4.0, 8.0, 16.0, 32.0, 64.0};
  std::vector<int> orders{2, 3};

  std::map<std::string, double> thresholds;  // overrides of the scenario defaults
  int jobs = 1;
  bool record_wall_time = true;
};

// Scenario defaults; preset is "default" or "quick".
ExperimentConfig default_config(const std::string& scenario, const std::string& preset = "default");
std::vector<std::string> scenario_names();
// Default thresholds of a scenario.
std::map<std::string, double> default_thresholds(const std::string& scenario);

// JSON object merged over base; unknown keys raise config_error.
ExperimentConfig config_from_json(const std::string& text, const ExperimentConfig& base);
std::string config_to_json(const ExperimentConfig& cfg);
// FNV-1a of the canonical JSON without jobs and wall-time switches.
std::uint64_t config_hash(const ExperimentConfig& cfg);
// Throws config_error or a guard error before any heavy computation.
void validate_config(const ExperimentConfig& cfg);

struct ResultRow {
  double h = 0.0;
  double t = 0.0;
  std::string metric;
  double value = 0.0;
  double wall_time_s = 0.0;
};

struct Check {
  std::string name;
  double value = 0.0;
  std::string relation;  // "<=", ">=" or "in"
  double lo = 0.0, hi = 0.0;
  bool pass = false;
};

Check check_le(const std::string& name, double value, double bound);
Check check_ge(const std::string& name, double value, double bound);
Check check_in(const std::string& name, double value, double lo, double hi);

struct SweepResult {
  std::string scenario;
  std::vector<ResultRow> rows;
  std::vector<std::pair<std::string, SlopeFit>> fits;
  std::vector<Check> checks;
  std::map<std::string, double> guards;
  std::uint64_t config_hash = 0;

  bool passed() const;
  // value of metric at (h, t); nan when absent
  double value(double h, double t, const std::string& metric) const;
};

SweepResult run_ehrenfest(const ExperimentConfig& cfg);
SweepResult run_tdhf_vlasov(const ExperimentConfig& cfg);
SweepResult run_ehrenfest_time(const ExperimentConfig& cfg);
SweepResult run_counterexample(const ExperimentConfig& cfg);
SweepResult run_composition(const ExperimentConfig& cfg);
SweepResult run_experiment(const ExperimentConfig& cfg);

// Invariant suites at reduced sizes.
std::vector<Check> suite_symbol_calculus();
std::vector<Check> suite_smoothing();
std::vector<Check> suite_wick_pde();
std::vector<Check> suite_propagators();
SweepResult run_selftest();

std::string to_csv(const SweepResult& r);
std::string summary_json(const SweepResult& r, const ExperimentConfig& cfg);
// Writes <scenario>.csv and <scenario>_summary.json into dir (created if missing).
void write_outputs(const SweepResult& r, const ExperimentConfig& cfg, const std::string& dir);

}  // namespace pslab
