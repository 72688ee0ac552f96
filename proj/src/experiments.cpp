#include "pslab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <thread>

#include <json.hpp>

#include "pslab/classical_dynamics.hpp"
#include "pslab/fft.hpp"
#include "pslab/operator_core.hpp"
#include "pslab/phase_space.hpp"
#include "pslab/quantization.hpp"
#include "pslab/quantum_dynamics.hpp"
#include "pslab/wick_calculus.hpp"

namespace pslab {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------- fits

SlopeFit fit_slope(const std::vector<double>& h, const std::vector<double>& values) {
  if (h.size() != values.size()) fail(ErrorCode::invalid_argument, "fit_slope needs matching h and value lists");
  if (h.size() < 3) fail(ErrorCode::invalid_argument, "fit_slope needs at least three points");
  const double n = static_cast<double>(h.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    if (!(h[k] > 0.0) || !(values[k] > 0.0))
      fail(ErrorCode::invalid_argument, "fit_slope needs positive h and values");
    mx += std::log(h[k]);
    my += std::log(values[k]);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    double dx = std::log(h[k]) - mx, dy = std::log(values[k]) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) fail(ErrorCode::invalid_argument, "fit_slope needs distinct h values");
  SlopeFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  f.points = h.size();
  return f;
}

namespace {

// r^2 of an ordinary linear fit y ~ a + b x
std::pair<double, double> linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
    syy += (y[k] - my) * (y[k] - my);
  }
  return {sxy / sxx, syy == 0.0 ? 1.0 : sxy * sxy / (sxx * syy)};
}

}  // namespace

// ---------------------------------------------------------------- checks

Check check_le(const std::string& name, double value, double bound) {
  return {name, value, "<=", -std::numeric_limits<double>::infinity(), bound, value <= bound};
}

Check check_ge(const std::string& name, double value, double bound) {
  return {name, value, ">=", bound, std::numeric_limits<double>::infinity(), value >= bound};
}

Check check_in(const std::string& name, double value, double lo, double hi) {
  return {name, value, "in", lo, hi, value >= lo && value <= hi};
}

bool SweepResult::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

double SweepResult::value(double h, double t, const std::string& metric) const {
  for (const auto& r : rows)
    if (r.metric == metric && std::abs(r.h - h) <= 1e-12 * std::max(1.0, h) && std::abs(r.t - t) <= 1e-9)
      return r.value;
  return std::numeric_limits<double>::quiet_NaN();
}

// ---------------------------------------------------------------- config

std::vector<std::string> scenario_names() {
  return {"ehrenfest", "tdhf-vlasov", "ehrenfest-time", "counterexample", "composition"};
}

std::map<std::string, double> default_thresholds(const std::string& scenario) {
  if (scenario == "ehrenfest")
    return {{"t0_err", 1e-8}, {"slope_min", 0.45}, {"r2_min", 0.95}, {"ratio_spread_max", 4.0}};
  if (scenario == "tdhf-vlasov")
    return {{"t0_distance", 1e-6}, {"slope_min", 0.45}, {"r2_min", 0.95}, {"i_tr_spread_max", 2.0}};
  if (scenario == "ehrenfest-time")
    return {{"heat_gap", 1e-3}, {"final_distance_min", 1.5}, {"oracle_rel", 0.05}};
  if (scenario == "counterexample")
    return {{"doubling_rel", 1e-3}, {"p_r2_min", 0.99}, {"p_growth_ratio_min", 0.5}, {"wick_saturation", 1e-3}};
  if (scenario == "composition")
    return {{"poly_tol", 1e-6}, {"slope2_lo", 0.85}, {"slope2_hi", 1.15}, {"slope3_lo", 1.35}, {"slope3_hi", 1.65}};
  fail(ErrorCode::config_error, "unknown scenario '" + scenario + "'");
}

ExperimentConfig default_config(const std::string& scenario, const std::string& preset) {
  if (preset != "default" && preset != "quick") fail(ErrorCode::config_error, "unknown preset '" + preset + "'");
  const bool quick = preset == "quick";
  ExperimentConfig c;
  c.scenario = scenario;
  if (scenario == "ehrenfest") {
    c.h_list = quick ? std::vector<double>{0.4, 0.2, 0.1} : std::vector<double>{0.4, 0.2, 0.1, 0.05};
    c.potential = "cosine";
    c.interaction = "zero";
    c.t_max = 1.0;
    c.dt = 0.01;
    c.t_samples = 4;
    c.symbol_width = 2.0;
    c.box = 12.0;
    c.xi_reach = 7.0;
    c.window = {-2.0, 2.0, -2.0, 2.0, quick ? 16u : 32u, quick ? 16u : 32u};
  } else if (scenario == "tdhf-vlasov") {
    c.h_list = quick ? std::vector<double>{0.4, 0.3, 0.2} : std::vector<double>{0.4, 0.2, 0.1, 0.05};
    c.potential = "cosine";
    c.interaction = "gaussian_W";
    c.t_max = 1.0;
    c.dt = 0.01;
    c.t_samples = 10;
    c.symbol_width = 1.0;
    c.box = 13.0;
    c.xi_reach = 7.0;
    c.window = {-8.0, 8.0, -5.0, 5.0, 160, 100};
  } else if (scenario == "ehrenfest-time") {
    c.h_list = {0.5};
    c.potential = "zero";
    c.interaction = "zero";
    c.t_max = quick ? 6.0 : 8.0;
    c.dt = 0.5;
    c.t_samples = quick ? 12 : 16;
    c.box = quick ? 44.0 : 56.0;
    c.xi_reach = 6.0;
    c.window = {0.0, 0.0, -3.0, 3.0, quick ? 768u : 1024u, quick ? 48u : 60u};
  } else if (scenario == "counterexample") {
    c.h_list = {1.0};
    c.potential = "zero";
    c.alpha = 1.0;
    c.quad_nodes = quick ? 120 : 200;
    c.radii = {2.0, 4.0, 8.0, 16.0, 32.0, 64.0};
    c.box = 16.0;
    c.t_max = 0.0;
  } else if (scenario == "composition") {
    c.h_list = {0.2, 0.1, 0.05};
    c.potential = "zero";
    c.symbol_width = 1.0;
    c.center = {0.55, 0.3};
    c.box = 10.0;
    c.xi_reach = 5.0 / kAliasFraction;
    c.window = {-5.0, 5.0, -5.0, 5.0, quick ? 80u : 100u, quick ? 80u : 100u};
    c.orders = {2, 3};
    c.t_max = 0.0;
  } else {
    fail(ErrorCode::config_error, "unknown scenario '" + scenario + "'");
  }
  return c;
}

namespace {

json window_json(const PhaseWindow& w) {
  return json{{"x_min", w.x_min}, {"x_max", w.x_max}, {"xi_min", w.xi_min},
              {"xi_max", w.xi_max}, {"nx", w.nx},       {"nxi", w.nxi}};
}

json config_json(const ExperimentConfig& c, bool with_runtime) {
  json j;
  j["scenario"] = c.scenario;
  j["h_list"] = c.h_list;
  j["t_max"] = c.t_max;
  j["dt"] = c.dt;
  j["t_samples"] = c.t_samples;
  j["potential"] = {{"name", c.potential}, {"amp", c.v_amp}, {"scale", c.v_scale}};
  j["interaction"] = {{"name", c.interaction}, {"amp", c.w_amp}, {"scale", c.w_scale}};
  j["symbol_width"] = c.symbol_width;
  j["center"] = {c.center.x, c.center.xi};
  j["box"] = c.box;
  j["xi_reach"] = c.xi_reach;
  j["window"] = window_json(c.window);
  j["alpha"] = c.alpha;
  j["quad_nodes"] = c.quad_nodes;
  j["radii"] = c.radii;
  j["orders"] = c.orders;
  json th = json::object();
  for (const auto& [k, v] : c.thresholds) th[k] = v;
  j["thresholds"] = th;
  if (with_runtime) {
    j["jobs"] = c.jobs;
    j["record_wall_time"] = c.record_wall_time;
  }
  return j;
}

[[noreturn]] void bad_key(const std::string& where, const std::string& key) {
  fail(ErrorCode::config_error, "unknown config key '" + where + key + "'");
}

template <class T>
T get_as(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::config_error, "config key '" + key + "' has the wrong type");
  }
}

void read_potential(const json& v, const std::string& key, std::string& name, double& amp, double& scale) {
  if (v.is_string()) {
    name = v.get<std::string>();
    return;
  }
  if (!v.is_object()) fail(ErrorCode::config_error, "config key '" + key + "' must be a name or an object");
  for (auto it = v.begin(); it != v.end(); ++it) {
    if (it.key() == "name") {
      name = get_as<std::string>(it.value(), key + ".name");
    } else if (it.key() == "amp") {
      amp = get_as<double>(it.value(), key + ".amp");
    } else if (it.key() == "scale") {
      scale = get_as<double>(it.value(), key + ".scale");
    } else {
      bad_key(key + ".", it.key());
    }
  }
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text, const ExperimentConfig& base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::config_error, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorCode::config_error, "config must be a JSON object");
  ExperimentConfig c = base;
  if (j.contains("scenario")) {
    std::string s = get_as<std::string>(j["scenario"], "scenario");
    if (s != base.scenario) {
      // restart from the defaults of the named scenario
      ExperimentConfig d = default_config(s);
      d.jobs = base.jobs;
      d.record_wall_time = base.record_wall_time;
      c = d;
    }
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const json& v = it.value();
    if (k == "scenario") {
      continue;
    } else if (k == "h_list") {
      c.h_list = get_as<std::vector<double>>(v, k);
    } else if (k == "t_max") {
      c.t_max = get_as<double>(v, k);
    } else if (k == "dt") {
      c.dt = get_as<double>(v, k);
    } else if (k == "t_samples") {
      c.t_samples = get_as<int>(v, k);
    } else if (k == "potential") {
      read_potential(v, k, c.potential, c.v_amp, c.v_scale);
    } else if (k == "interaction") {
      read_potential(v, k, c.interaction, c.w_amp, c.w_scale);
    } else if (k == "symbol_width") {
      c.symbol_width = get_as<double>(v, k);
    } else if (k == "center") {
      auto p = get_as<std::vector<double>>(v, k);
      if (p.size() != 2) fail(ErrorCode::config_error, "center must be [x, xi]");
      c.center = {p[0], p[1]};
    } else if (k == "box") {
      c.box = get_as<double>(v, k);
    } else if (k == "xi_reach") {
      c.xi_reach = get_as<double>(v, k);
    } else if (k == "window") {
      if (!v.is_object()) fail(ErrorCode::config_error, "window must be an object");
      for (auto w = v.begin(); w != v.end(); ++w) {
        const std::string& wk = w.key();
        if (wk == "x_min") c.window.x_min = get_as<double>(w.value(), "window.x_min");
        else if (wk == "x_max") c.window.x_max = get_as<double>(w.value(), "window.x_max");
        else if (wk == "xi_min") c.window.xi_min = get_as<double>(w.value(), "window.xi_min");
        else if (wk == "xi_max") c.window.xi_max = get_as<double>(w.value(), "window.xi_max");
        else if (wk == "nx") c.window.nx = get_as<std::size_t>(w.value(), "window.nx");
        else if (wk == "nxi") c.window.nxi = get_as<std::size_t>(w.value(), "window.nxi");
        else bad_key("window.", wk);
      }
    } else if (k == "alpha") {
      c.alpha = get_as<double>(v, k);
    } else if (k == "quad_nodes") {
      c.quad_nodes = get_as<int>(v, k);
    } else if (k == "radii") {
      c.radii = get_as<std::vector<double>>(v, k);
    } else if (k == "orders") {
      c.orders = get_as<std::vector<int>>(v, k);
    } else if (k == "thresholds") {
      if (!v.is_object()) fail(ErrorCode::config_error, "thresholds must be an object");
      auto known = default_thresholds(c.scenario);
      for (auto t = v.begin(); t != v.end(); ++t) {
        if (!known.count(t.key())) bad_key("thresholds.", t.key());
        c.thresholds[t.key()] = get_as<double>(t.value(), "thresholds." + t.key());
      }
    } else if (k == "jobs") {
      c.jobs = get_as<int>(v, k);
    } else if (k == "record_wall_time") {
      c.record_wall_time = get_as<bool>(v, k);
    } else {
      bad_key("", k);
    }
  }
  return c;
}

std::string config_to_json(const ExperimentConfig& cfg) { return config_json(cfg, true).dump(2); }

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  std::string s = config_json(cfg, false).dump();
  std::uint64_t hsh = 1469598103934665603ull;
  for (unsigned char ch : s) {
    hsh ^= ch;
    hsh *= 1099511628211ull;
  }
  return hsh;
}

namespace {

double threshold(const ExperimentConfig& c, const std::string& name) {
  auto it = c.thresholds.find(name);
  if (it != c.thresholds.end()) return it->second;
  auto d = default_thresholds(c.scenario);
  auto jt = d.find(name);
  if (jt == d.end()) fail(ErrorCode::internal, "no threshold named " + name);
  return jt->second;
}

PotentialSpec potentials(const ExperimentConfig& c) {
  return {potential_from_name(c.potential, c.v_amp, c.v_scale), potential_from_name(c.interaction, c.w_amp, c.w_scale)};
}

// sup |V| over the line for the bounded presets, V on the window edge for harmonic
double potential_sup(const Potential& V, double x_reach) {
  switch (V.kind) {
    case PotentialKind::zero: return std::abs(V.offset);
    case PotentialKind::harmonic: return std::abs(V.amp) * x_reach * x_reach + std::abs(V.offset);
    default: return std::abs(V.amp) + std::abs(V.offset);
  }
}

constexpr std::size_t kMaxGrid = 8192;

PositionGrid position_grid(const ExperimentConfig& c, double h) {
  std::size_t n = 8;
  while (kPi * h * static_cast<double>(n) / (2.0 * c.box) < c.xi_reach) {
    n *= 2;
    if (n > kMaxGrid) fail(ErrorCode::config_error, "grid for h = " + std::to_string(h) + " would exceed 8192 nodes");
  }
  return PositionGrid(-c.box, c.box, n);
}

double max_abs_xi(const PhaseWindow& w) { return std::max(std::abs(w.xi_min), std::abs(w.xi_max)); }

// window used by the Ehrenfest-time scenario: x derived from the box
PhaseWindow spread_window(const ExperimentConfig& c, double h) {
  PhaseWindow w = c.window;
  double X = c.box - coherent_decay_radius(h);
  w.x_min = -X;
  w.x_max = X;
  return w;
}

double guarded_horizon(const ExperimentConfig& c, double h) {
  PhaseWindow w = spread_window(c, h);
  return (w.x_max - std::abs(c.center.x) - 3.0 * std::sqrt(h)) / (2.0 * max_abs_xi(w));
}

void check_h_list(const ExperimentConfig& c, std::size_t min_points) {
  if (c.h_list.size() < min_points)
    fail(ErrorCode::config_error, "h_list needs at least " + std::to_string(min_points) + " values");
  for (std::size_t k = 0; k < c.h_list.size(); ++k) {
    if (!(c.h_list[k] > 0.0 && c.h_list[k] <= 1.0)) fail(ErrorCode::config_error, "h values must lie in (0, 1]");
    if (k > 0 && !(c.h_list[k] < c.h_list[k - 1])) fail(ErrorCode::config_error, "h_list must be strictly descending");
  }
}

void check_window(const PhaseWindow& w) {
  if (!(w.x_max > w.x_min) || !(w.xi_max > w.xi_min) || w.nx < 5 || w.nxi < 5)
    fail(ErrorCode::config_error, "window must be a nonempty box with at least 5 nodes per axis");
}

}  // namespace

void validate_config(const ExperimentConfig& c) {
  const auto names = scenario_names();
  if (std::find(names.begin(), names.end(), c.scenario) == names.end())
    fail(ErrorCode::config_error, "unknown scenario '" + c.scenario + "'");
  if (c.jobs < 1) fail(ErrorCode::config_error, "jobs must be at least 1");
  for (const auto& [k, v] : c.thresholds)
    if (!default_thresholds(c.scenario).count(k)) fail(ErrorCode::config_error, "unknown threshold '" + k + "'");
  PotentialSpec pot = potentials(c);

  if (c.scenario == "counterexample") {
    if (!(c.alpha > 0.5 && c.alpha <= 1.0)) fail(ErrorCode::config_error, "alpha must lie in (1/2, 1]");
    if (c.quad_nodes < 20) fail(ErrorCode::config_error, "quad_nodes must be at least 20");
    if (c.radii.size() < 3) fail(ErrorCode::config_error, "radii needs at least three values");
    for (std::size_t k = 1; k < c.radii.size(); ++k)
      if (!(c.radii[k] > c.radii[k - 1]) || !(c.radii[0] > 0.0))
        fail(ErrorCode::config_error, "radii must be positive and ascending");
    if (std::find(c.radii.begin(), c.radii.end(), 16.0) == c.radii.end() ||
        std::find(c.radii.begin(), c.radii.end(), 32.0) == c.radii.end())
      fail(ErrorCode::config_error, "radii must include 16 and 32 for the saturation check");
    return;
  }

  if (!(c.box > 0.0) || !(c.xi_reach > 0.0)) fail(ErrorCode::config_error, "box and xi_reach must be positive");
  if (c.scenario == "ehrenfest-time") {
    check_h_list(c, 1);
    if (!pot.V.is_zero() || !pot.W.is_zero())
      fail(ErrorCode::config_error, "ehrenfest-time runs with V = W = 0");
    if (c.t_samples < 2 || !(c.t_max > 0.0)) fail(ErrorCode::config_error, "need t_max > 0 and t_samples >= 2");
    for (double h : c.h_list) {
      PhaseWindow w = spread_window(c, h);
      check_window(w);
      if (guarded_horizon(c, h) <= 0.0) fail(ErrorCode::coverage, "box too small for the spread guard");
      check_wick_coverage(position_grid(c, h), h, w.grid());
    }
    return;
  }

  check_window(c.window);
  check_h_list(c, 3);
  if (c.scenario == "composition") {
    for (int m : c.orders)
      if (m < 1 || m > 5) fail(ErrorCode::config_error, "orders must lie in [1, 5]");
    if (!(c.symbol_width > 0.0)) fail(ErrorCode::config_error, "symbol_width must be positive");
    for (double h : c.h_list) {
      PositionGrid g = position_grid(c, h);
      check_wick_coverage(g, h, c.window.grid());
      coherent_state(c.center, h, g);
    }
    return;
  }

  if (c.t_samples < 1 || !(c.t_max > 0.0) || !(c.dt > 0.0) || c.dt > c.t_max)
    fail(ErrorCode::config_error, "need t_max > 0, 0 < dt <= t_max and t_samples >= 1");
  double per = c.t_max / (c.t_samples * c.dt);
  if (std::abs(per - std::round(per)) > 1e-9 * per)
    fail(ErrorCode::config_error, "t_max / t_samples must be a multiple of dt");
  if (!(c.symbol_width > 0.0)) fail(ErrorCode::config_error, "symbol_width must be positive");

  if (c.scenario == "ehrenfest") {
    const PhaseWindow& w = c.window;
    double xw = std::max(std::abs(w.x_min), std::abs(w.x_max));
    double xi_bound = std::sqrt(max_abs_xi(w) * max_abs_xi(w) + 2.0 * potential_sup(pot.V, xw));
    double x_bound = xw + 2.0 * c.t_max * xi_bound;
    for (double h : c.h_list) {
      PositionGrid g = position_grid(c, h);
      check_wick_coverage(g, h, w.grid());
      // flowed points stay inside the coverage region
      PhaseGrid reach(-x_bound, x_bound, -xi_bound, xi_bound, 8, 8);
      check_wick_coverage(g, h, reach);
    }
  } else if (c.scenario == "tdhf-vlasov") {
    PhaseGrid pg = c.window.grid();
    if (2.0 * pg.xi_extent() * c.dt > pg.dx() * (1.0 + 1e-9))
      fail(ErrorCode::cfl_violation, "2 max|xi| dt exceeds the window dx");
    // force bound for a unit-mass marginal inside the window
    double fv = 0.0, fw = 0.0, span = pg.x_max() - pg.x_min();
    for (std::size_t i = 0; i <= 4 * pg.nx(); ++i) {
      double s = static_cast<double>(i) / static_cast<double>(4 * pg.nx());
      fv = std::max(fv, std::abs(pot.V.derivative(pg.x_min() + s * span, 1)));
      fw = std::max(fw, std::abs(pot.W.derivative(-span + 2.0 * s * span, 1)));
    }
    if ((fv + fw) * c.dt > pg.dxi() * (1.0 + 1e-9))
      fail(ErrorCode::cfl_violation, "max|dV/dx| dt exceeds the window dxi");
    for (double h : c.h_list) check_wick_coverage(position_grid(c, h), h, pg);
  }
}

// ---------------------------------------------------------------- runner plumbing

namespace {

using Clock = std::chrono::steady_clock;

struct Cell {
  std::vector<ResultRow> rows;
  std::map<std::string, double> guards;
};

class RowSink {
 public:
  RowSink(double h, bool record) : h_(h), record_(record), start_(Clock::now()) {}
  void add(double t, const std::string& metric, double value) {
    double w = record_ ? std::chrono::duration<double>(Clock::now() - start_).count() : 0.0;
    cell.rows.push_back({h_, t, metric, value, w});
  }
  Cell cell;

 private:
  double h_;
  bool record_;
  Clock::time_point start_;
};

// Runs fn(k) for k in [0, n) on up to jobs threads; cells are assembled in index order.
std::vector<Cell> run_cells(std::size_t n, int jobs, const std::function<Cell(std::size_t)>& fn) {
  std::vector<Cell> out(n);
  std::vector<std::exception_ptr> errs(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t k = next++; k < n; k = next++) {
      try {
        out[k] = fn(k);
      } catch (...) {
        errs[k] = std::current_exception();
      }
    }
  };
  std::size_t nt = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
  if (nt <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < nt; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  return out;
}

SweepResult assemble(const ExperimentConfig& c, std::vector<Cell> cells) {
  SweepResult r;
  r.scenario = c.scenario;
  r.config_hash = config_hash(c);
  for (auto& cell : cells) {
    for (auto& row : cell.rows) r.rows.push_back(std::move(row));
    for (auto& [k, v] : cell.guards) r.guards[k] = v;
  }
  return r;
}

std::string h_key(const std::string& name, double h) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s@h=%g", name.c_str(), h);
  return buf;
}

std::vector<double> sample_times(const ExperimentConfig& c) {
  std::vector<double> t;
  for (int k = 0; k <= c.t_samples; ++k) t.push_back(c.t_max * k / c.t_samples);
  return t;
}

Symbol gaussian_symbol(const PhaseGrid& pg, PhasePoint c, double width, double scale) {
  return sample_symbol(pg, [&](double x, double xi) {
    return cplx(scale * std::exp(-((x - c.x) * (x - c.x) + (xi - c.xi) * (xi - c.xi)) / (width * width)));
  });
}

PotentialField field_on(const Potential& V, const PositionGrid& g) {
  PotentialField f{g, RVector(static_cast<Eigen::Index>(g.size()))};
  for (std::size_t i = 0; i < g.size(); ++i) f.values(static_cast<Eigen::Index>(i)) = V(g.x(i));
  return f;
}

void add_fit(SweepResult& r, const std::string& name, const std::vector<double>& hs, const std::vector<double>& ys) {
  r.fits.emplace_back(name, fit_slope(hs, ys));
}

}  // namespace

// ---------------------------------------------------------------- ehrenfest

SweepResult run_ehrenfest(const ExperimentConfig& c) {
  validate_config(c);
  const PotentialSpec pot = potentials(c);
  const auto times = sample_times(c);
  const long per = std::lround(c.t_max / (c.t_samples * c.dt));
  const PhaseGrid pg = c.window.grid();

  auto cells = run_cells(c.h_list.size(), c.jobs, [&](std::size_t k) {
    const double h = c.h_list[k];
    RowSink sink(h, c.record_wall_time);
    PositionGrid g = position_grid(c, h);
    QuantumOperator A = weyl_quantize(gaussian_symbol(weyl_phase_grid(g, h), {0.0, 0.0}, c.symbol_width, 1.0), g, h);
    double I = regularity(A).i_inf;
    sink.cell.guards[h_key("grid_nodes", h)] = static_cast<double>(g.size());
    sink.cell.guards[h_key("xi_nyquist", h)] = g.xi_nyquist(h);
    sink.add(0.0, "I_inf", I);
    PotentialField V = field_on(pot.V, g);
    QuantumOperator At = A;
    for (std::size_t s = 0; s < times.size(); ++s) {
      if (s > 0)
        for (long n = 0; n < per; ++n) At = conjugate_step(At, -c.dt, V);
      const double t = times[s];
      Symbol lhs = wick_symbol_direct(At, pg);
      std::vector<PhasePoint> pts;
      pts.reserve(pg.nx() * pg.nxi());
      for (std::size_t i = 0; i < pg.nx(); ++i)
        for (std::size_t j = 0; j < pg.nxi(); ++j)
          pts.push_back(hamiltonian_flow({pg.x(i), pg.xi(j)}, t, pot.V, std::min(c.dt, 1e-3)));
      std::vector<cplx> rhs = wick_symbol_at(A, pts);
      double err = 0.0;
      std::size_t q = 0;
      for (std::size_t i = 0; i < pg.nx(); ++i)
        for (std::size_t j = 0; j < pg.nxi(); ++j)
          err = std::max(err, std::abs(lhs.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - rhs[q++]));
      sink.add(t, "err_sup", err);
      sink.add(t, "err_ratio", err / (std::sqrt(h) * I));
    }
    return sink.cell;
  });

  SweepResult r = assemble(c, std::move(cells));
  double t0 = 0.0;
  std::vector<double> errs, ratios;
  for (double h : c.h_list) {
    t0 = std::max(t0, r.value(h, 0.0, "err_sup"));
    errs.push_back(r.value(h, c.t_max, "err_sup"));
    ratios.push_back(r.value(h, c.t_max, "err_ratio"));
  }
  add_fit(r, "err_sup@t_max", c.h_list, errs);
  const SlopeFit& f = r.fits.back().second;
  r.checks.push_back(check_le("err_at_t0", t0, threshold(c, "t0_err")));
  r.checks.push_back(check_ge("slope_err_t_max", f.slope, threshold(c, "slope_min")));
  r.checks.push_back(check_ge("r2_err_t_max", f.r2, threshold(c, "r2_min")));
  double spread = *std::max_element(ratios.begin(), ratios.end()) / *std::min_element(ratios.begin(), ratios.end());
  r.checks.push_back(check_le("ratio_spread_t_max", spread, threshold(c, "ratio_spread_max")));
  return r;
}

// ---------------------------------------------------------------- tdhf-vlasov

SweepResult run_tdhf_vlasov(const ExperimentConfig& c) {
  validate_config(c);
  const PotentialSpec pot = potentials(c);
  const auto times = sample_times(c);
  const long per = std::lround(c.t_max / (c.t_samples * c.dt));
  const PhaseGrid pg = c.window.grid();
  const double w = c.symbol_width;

  auto cells = run_cells(c.h_list.size(), c.jobs, [&](std::size_t k) {
    const double h = c.h_list[k];
    RowSink sink(h, c.record_wall_time);
    PositionGrid g = position_grid(c, h);
    // (2 pi h) Op(F0) with F0 a normalized Gaussian density of width w per axis
    Symbol F0 = gaussian_symbol(weyl_phase_grid(g, h), c.center, std::sqrt(2.0) * w, h / (w * w));
    QuantumOperator rho = weyl_quantize(F0, g, h);
    rho.hermitian_hint = true;
    validate_density(rho);
    double itr = regularity(rho).i_tr;
    sink.cell.guards[h_key("grid_nodes", h)] = static_cast<double>(g.size());
    sink.cell.guards[h_key("min_eigenvalue_t0", h)] = inspect_density(rho).min_eigenvalue;
    sink.add(0.0, "I_tr", itr);
    MeanFieldState s = make_state(rho, pot);
    PhaseDistribution u = husimi_density(s, pg);
    PhaseDistribution v = u;
    long step = 0;
    const long total = per * c.t_samples;
    for (std::size_t q = 0; q < times.size(); ++q) {
      if (q > 0) {
        for (long n = 0; n < per; ++n, ++step) {
          bool spectrum = (step + 1) % 25 == 0 || step + 1 == total;
          s = tdhf_step(s, c.dt, nullptr, spectrum);
          v = vlasov_step(v, c.dt, pot);
        }
        u = husimi_density(s, pg);
      }
      sink.add(times[q], "l1_distance", l1_distance(u, v));
      sink.add(times[q], "mass_u", u.mass());
      sink.add(times[q], "mass_v", v.mass());
    }
    return sink.cell;
  });

  SweepResult r = assemble(c, std::move(cells));
  double t0 = 0.0;
  std::vector<double> d, itr;
  for (double h : c.h_list) {
    t0 = std::max(t0, r.value(h, 0.0, "l1_distance"));
    d.push_back(r.value(h, c.t_max, "l1_distance"));
    itr.push_back(r.value(h, 0.0, "I_tr"));
  }
  add_fit(r, "l1_distance@t_max", c.h_list, d);
  const SlopeFit& f = r.fits.back().second;
  r.checks.push_back(check_le("distance_at_t0", t0, threshold(c, "t0_distance")));
  r.checks.push_back(check_ge("slope_distance_t_max", f.slope, threshold(c, "slope_min")));
  r.checks.push_back(check_ge("r2_distance_t_max", f.r2, threshold(c, "r2_min")));
  double spread = *std::max_element(itr.begin(), itr.end()) / *std::min_element(itr.begin(), itr.end());
  r.checks.push_back(check_le("I_tr_spread", spread, threshold(c, "i_tr_spread_max")));
  return r;
}

// ---------------------------------------------------------------- ehrenfest-time

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// L1 distance between centred normal densities of standard deviations s1 < s2
double normal_l1(double s1, double s2) {
  if (s2 <= s1) return 0.0;
  double c = std::sqrt(2.0 * s1 * s1 * s2 * s2 * std::log(s2 / s1) / (s2 * s2 - s1 * s1));
  return 4.0 * (normal_cdf(c / s1) - normal_cdf(c / s2));
}

}  // namespace

SweepResult run_ehrenfest_time(const ExperimentConfig& c) {
  validate_config(c);
  auto cells = run_cells(c.h_list.size(), c.jobs, [&](std::size_t k) {
    const double h = c.h_list[k];
    RowSink sink(h, c.record_wall_time);
    PositionGrid g = position_grid(c, h);
    PhaseWindow win = spread_window(c, h);
    PhaseGrid pg = win.grid();
    const double horizon = guarded_horizon(c, h);
    const double t_end = std::min(c.t_max, horizon);
    sink.cell.guards[h_key("guarded_horizon", h)] = horizon;
    sink.cell.guards[h_key("t_end", h)] = t_end;
    sink.cell.guards[h_key("t_capped", h)] = t_end < c.t_max ? 1.0 : 0.0;
    sink.cell.guards[h_key("grid_nodes", h)] = static_cast<double>(g.size());
    const PhasePoint Z = c.center;
    const double r = coherent_decay_radius(h);
    const double norm = 1.0 / (2.0 * kPi * h);
    WaveFunction f0 = coherent_state(Z, h, g);
    PotentialField none{g, RVector::Zero(static_cast<Eigen::Index>(g.size()))};
    const long nx = static_cast<long>(pg.nx());

    // x-marginal of the initial Husimi density
    RVector U0 = RVector::Zero(nx);
    for (long i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < pg.nxi(); ++j)
        U0(i) += std::norm(coherent_overlap(Z, {pg.x(static_cast<std::size_t>(i)), pg.xi(j)}, h)) * norm;
    U0 *= pg.dxi();

    for (int q = 0; q <= c.t_samples; ++q) {
      const double t = t_end * q / c.t_samples;
      // one exact kinetic step
      WaveFunction f = q == 0 ? f0 : schrodinger_step(f0, t, none);
      CMatrix T = coherent_transform(f, h, pg);
      double dist = 0.0;
      RVector U = RVector::Zero(nx);
      for (long i = 0; i < nx; ++i) {
        const double x = pg.x(static_cast<std::size_t>(i));
        for (std::size_t j = 0; j < pg.nxi(); ++j) {
          const double xi = pg.xi(j);
          double u = std::norm(T(i, static_cast<Eigen::Index>(j))) * norm;
          double v = std::norm(coherent_overlap(Z, {x - 2.0 * t * xi, xi}, h)) * norm;
          dist += std::abs(u - v);
          // U(x, t) = int u(x + 2 t xi, xi, t) dxi
          PhasePoint P{x + 2.0 * t * xi, xi};
          if (P.x - r > g.x_min() && P.x + r < g.x_max())
            U(i) += std::norm(inner(f, coherent_state(P, h, g))) * norm;
        }
      }
      dist *= pg.cell_area();
      U *= pg.dxi();
      sink.add(t, "l1_distance", dist);
      double lb = (U - U0).cwiseAbs().sum() * pg.dx();
      sink.add(t, "marginal_lower_bound", lb);
      double s1 = std::sqrt(h), s2 = std::sqrt(h + 2.0 * h * t * t);
      sink.add(t, "oracle_lower_bound", normal_l1(s1, s2));
      if (t <= 2.0 + 1e-12) {
        // e^{h t^2 d^2/dx^2} U0 by FFT on the window nodes
        CMatrix m(nx, 1);
        for (long i = 0; i < nx; ++i) m(i, 0) = U0(i);
        fft::forward_columns(m);
        for (long i = 0; i < nx; ++i) {
          double kk = 2.0 * kPi * static_cast<double>(fft::signed_index(i, nx)) / (static_cast<double>(nx) * pg.dx());
          m(i, 0) *= std::exp(-h * t * t * kk * kk) / static_cast<double>(nx);
        }
        fft::backward_columns(m);
        double gap = 0.0;
        for (long i = 0; i < nx; ++i) gap += std::abs(U(i) - m(i, 0).real());
        sink.add(t, "heat_gap", gap * pg.dx());
      }
    }
    return sink.cell;
  });

  SweepResult r = assemble(c, std::move(cells));
  for (double h : c.h_list) {
    std::vector<std::pair<double, double>> dist, lb, orc;
    double gap_t1 = std::numeric_limits<double>::infinity(), best = 1e300;
    for (const auto& row : r.rows) {
      if (std::abs(row.h - h) > 1e-12) continue;
      if (row.metric == "l1_distance") dist.emplace_back(row.t, row.value);
      if (row.metric == "marginal_lower_bound") lb.emplace_back(row.t, row.value);
      if (row.metric == "oracle_lower_bound") orc.emplace_back(row.t, row.value);
      if (row.metric == "heat_gap" && std::abs(row.t - 1.0) < best && row.t > 0.0) {
        best = std::abs(row.t - 1.0);
        gap_t1 = row.value;
      }
    }
    double min_inc = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < dist.size(); ++k) min_inc = std::min(min_inc, dist[k].second - dist[k - 1].second);
    double worst_rel = 0.0;
    for (std::size_t k = 0; k < lb.size(); ++k)
      if (lb[k].first > 0.0) worst_rel = std::max(worst_rel, std::abs(lb[k].second - orc[k].second) / orc[k].second);
    r.checks.push_back(check_le(h_key("heat_gap_t1", h), gap_t1, threshold(c, "heat_gap")));
    Check mono = check_ge(h_key("distance_min_increment", h), min_inc, 0.0);
    mono.pass = min_inc > 0.0;
    r.checks.push_back(mono);
    r.checks.push_back(check_ge(h_key("final_distance", h), dist.back().second, threshold(c, "final_distance_min")));
    r.checks.push_back(check_le(h_key("oracle_rel_gap", h), worst_rel, threshold(c, "oracle_rel")));
  }
  return r;
}

// ---------------------------------------------------------------- counterexample

SweepResult run_counterexample(const ExperimentConfig& c) {
  validate_config(c);
  RowSink sink(1.0, c.record_wall_time);
  CounterexampleSpec spec;
  spec.alpha = c.alpha;
  spec.quad.nodes = c.quad_nodes;
  spec.grid = PositionGrid(-c.box, c.box, 512);
  spec.radii = c.radii;
  CounterexampleResult res = counterexample_build(spec);
  sink.add(0.0, "trace_norm", res.trace_norm);
  sink.add(0.0, "trace_norm_doubled", res.trace_norm_doubled);
  sink.add(0.0, "trace_norm_bound", res.trace_norm_bound);
  sink.add(0.0, "trace", res.trace);
  std::vector<double> logr;
  for (std::size_t k = 0; k < res.radii.size(); ++k) {
    char name[64];
    std::snprintf(name, sizeof name, "p_ball_mass_R%g", res.radii[k]);
    sink.add(0.0, name, res.p_ball_mass[k]);
    std::snprintf(name, sizeof name, "wick_ball_mass_R%g", res.radii[k]);
    sink.add(0.0, name, res.wick_ball_mass[k]);
    logr.push_back(std::log(res.radii[k]));
  }
  SweepResult r = assemble(c, {sink.cell});
  double dbl = std::abs(res.trace_norm_doubled - res.trace_norm) / res.trace_norm;
  auto [growth, r2] = linear_fit(logr, res.p_ball_mass);
  r.guards["p_mass_log_slope"] = growth;
  std::size_t n = res.radii.size();
  double first = (res.p_ball_mass[1] - res.p_ball_mass[0]) / (logr[1] - logr[0]);
  double last = (res.p_ball_mass[n - 1] - res.p_ball_mass[n - 2]) / (logr[n - 1] - logr[n - 2]);
  auto at = [&](double R) {
    return static_cast<std::size_t>(std::find(res.radii.begin(), res.radii.end(), R) - res.radii.begin());
  };
  double w16 = res.wick_ball_mass[at(16.0)], w32 = res.wick_ball_mass[at(32.0)];
  r.checks.push_back(check_le("trace_norm_doubling_rel", dbl, threshold(c, "doubling_rel")));
  r.guards["p_mass_log_r2"] = r2;
  // log-linear growth is specific to alpha = 1; other alphas grow like a power of R
  if (c.alpha == 1.0) r.checks.push_back(check_ge("p_mass_log_r2", r2, threshold(c, "p_r2_min")));
  r.checks.push_back(check_ge("p_mass_growth_ratio", last / first, threshold(c, "p_growth_ratio_min")));
  r.checks.push_back(check_le("wick_mass_saturation_16_32", std::abs(w32 - w16) / w32, threshold(c, "wick_saturation")));
  return r;
}

// ---------------------------------------------------------------- composition

SweepResult run_composition(const ExperimentConfig& c) {
  validate_config(c);
  const PhaseGrid pg = c.window.grid();
  auto cells = run_cells(c.h_list.size(), c.jobs, [&](std::size_t k) {
    const double h = c.h_list[k];
    RowSink sink(h, c.record_wall_time);
    PositionGrid g = position_grid(c, h);
    PhaseGrid wpg = weyl_phase_grid(g, h);
    Symbol F = gaussian_symbol(wpg, {0.0, 0.0}, c.symbol_width, 1.0);
    QuantumOperator B = projector(coherent_state(c.center, h, g));
    sink.cell.guards[h_key("grid_nodes", h)] = static_cast<double>(g.size());
    for (int m : c.orders) {
      auto rem = composition_remainder(F, B, m, pg);
      sink.add(0.0, "l1_m" + std::to_string(m), rem.l1);
      sink.add(0.0, "bound_rhs_m" + std::to_string(m), rem.bound_rhs);
    }
    if (k == 0) {
      // polynomial Wick symbols of degree < m leave no remainder
      double scale = wick_symbol_direct(B, pg).linf();
      Symbol lin = sample_symbol(wpg, [](double x, double) { return cplx(x); });
      Symbol quad = sample_symbol(wpg, [](double x, double) { return cplx(x * x - 0.5 * x); });
      sink.add(0.0, "poly_remainder_linear_m2", composition_remainder(lin, B, 2, pg).R.linf() / scale);
      sink.add(0.0, "poly_remainder_quadratic_m3", composition_remainder(quad, B, 3, pg).R.linf() / scale);
    }
    return sink.cell;
  });
  SweepResult r = assemble(c, std::move(cells));
  const double h0 = c.h_list.front();
  double poly = std::max(r.value(h0, 0.0, "poly_remainder_linear_m2"), r.value(h0, 0.0, "poly_remainder_quadratic_m3"));
  r.checks.push_back(check_le("polynomial_exactness", poly, threshold(c, "poly_tol")));
  for (int m : c.orders) {
    std::vector<double> l1, rhs;
    for (double h : c.h_list) {
      l1.push_back(r.value(h, 0.0, "l1_m" + std::to_string(m)));
      rhs.push_back(r.value(h, 0.0, "bound_rhs_m" + std::to_string(m)));
    }
    add_fit(r, "l1_m" + std::to_string(m), c.h_list, l1);
    double s = r.fits.back().second.slope;
    add_fit(r, "bound_rhs_m" + std::to_string(m), c.h_list, rhs);
    if (m == 2) r.checks.push_back(check_in("slope_l1_m2", s, threshold(c, "slope2_lo"), threshold(c, "slope2_hi")));
    if (m == 3) r.checks.push_back(check_in("slope_l1_m3", s, threshold(c, "slope3_lo"), threshold(c, "slope3_hi")));
  }
  return r;
}

SweepResult run_experiment(const ExperimentConfig& c) {
  if (c.scenario == "ehrenfest") return run_ehrenfest(c);
  if (c.scenario == "tdhf-vlasov") return run_tdhf_vlasov(c);
  if (c.scenario == "ehrenfest-time") return run_ehrenfest_time(c);
  if (c.scenario == "counterexample") return run_counterexample(c);
  if (c.scenario == "composition") return run_composition(c);
  fail(ErrorCode::config_error, "unknown scenario '" + c.scenario + "'");
}

// ---------------------------------------------------------------- output

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string hex(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string to_csv(const SweepResult& r) {
  std::string out = "h,t,metric,value,wall_time_s\n";
  for (const auto& row : r.rows)
    out += num(row.h) + "," + num(row.t) + "," + row.metric + "," + num(row.value) + "," + num(row.wall_time_s) + "\n";
  return out;
}

std::string summary_json(const SweepResult& r, const ExperimentConfig& cfg) {
  json j;
  j["scenario"] = r.scenario;
  j["code_version"] = "pslab 0.1.0";
  j["config_hash"] = hex(r.config_hash);
  j["config"] = config_json(cfg, true);
  json fits = json::object();
  for (const auto& [name, f] : r.fits)
    fits[name] = {{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}, {"points", f.points}};
  j["fits"] = fits;
  json guards = json::object();
  for (const auto& [k, v] : r.guards) guards[k] = finite_or_null(v);
  j["guards"] = guards;
  json checks = json::array();
  for (const auto& ch : r.checks)
    checks.push_back({{"name", ch.name},
                      {"value", finite_or_null(ch.value)},
                      {"relation", ch.relation},
                      {"lo", finite_or_null(ch.lo)},
                      {"hi", finite_or_null(ch.hi)},
                      {"pass", ch.pass}});
  j["checks"] = checks;
  j["passed"] = r.passed();
  return j.dump(2);
}

void write_outputs(const SweepResult& r, const ExperimentConfig& cfg, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::io_error, "cannot create output directory '" + dir + "'");
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream f(std::filesystem::path(dir) / name, std::ios::binary);
    if (!f) fail(ErrorCode::io_error, "cannot write " + name);
    f << text;
  };
  write(r.scenario + ".csv", to_csv(r));
  write(r.scenario + "_summary.json", summary_json(r, cfg));
}

}  // namespace pslab
