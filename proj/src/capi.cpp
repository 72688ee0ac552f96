#include "pslab/pslab.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "pslab/experiments.hpp"
#include "pslab/phase_space.hpp"
#include "pslab/quantization.hpp"

struct pslab_config {
  pslab::ExperimentConfig cfg;
};

struct pslab_result {
  pslab::SweepResult res;
  pslab::ExperimentConfig cfg;
};

namespace {

thread_local std::string g_last_error;

int record(int code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

template <class F>
int guarded(F&& fn) {
  try {
    fn();
    return PSLAB_OK;
  } catch (const pslab::Error& e) {
    return record(static_cast<int>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return record(PSLAB_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return record(PSLAB_INTERNAL, e.what());
  }
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

#define PSLAB_REQUIRE(cond)                                                    \
  do {                                                                         \
    if (!(cond)) return record(PSLAB_INVALID_ARGUMENT, "null or invalid argument: " #cond); \
  } while (0)

}  // namespace

extern "C" {

const char* pslab_version(void) { return "0.1.0"; }

const char* pslab_status_name(int status) {
  if (status < 0 || status > PSLAB_INTERNAL) return "unknown";
  return pslab::error_name(static_cast<pslab::ErrorCode>(status));
}

const char* pslab_last_error(void) { return g_last_error.c_str(); }

void pslab_string_free(char* s) { std::free(s); }

size_t pslab_scenario_count(void) { return pslab::scenario_names().size(); }

const char* pslab_scenario_name(size_t index) {
  static const std::vector<std::string> names = pslab::scenario_names();
  return index < names.size() ? names[index].c_str() : nullptr;
}

int pslab_config_create(const char* scenario, const char* preset, pslab_config** out) {
  PSLAB_REQUIRE(scenario && out);
  *out = nullptr;
  return guarded([&] {
    auto* c = new pslab_config{pslab::default_config(scenario, preset ? preset : "default")};
    *out = c;
  });
}

void pslab_config_free(pslab_config* cfg) { delete cfg; }

int pslab_config_merge_json(pslab_config* cfg, const char* json) {
  PSLAB_REQUIRE(cfg && json);
  return guarded([&] { cfg->cfg = pslab::config_from_json(json, cfg->cfg); });
}

int pslab_config_set_h_list(pslab_config* cfg, const double* h, size_t n) {
  PSLAB_REQUIRE(cfg && (h || n == 0));
  cfg->cfg.h_list.assign(h, h + n);
  return PSLAB_OK;
}

int pslab_config_set_t_max(pslab_config* cfg, double t_max) {
  PSLAB_REQUIRE(cfg);
  cfg->cfg.t_max = t_max;
  return PSLAB_OK;
}

int pslab_config_set_jobs(pslab_config* cfg, int jobs) {
  PSLAB_REQUIRE(cfg);
  cfg->cfg.jobs = jobs;
  return PSLAB_OK;
}

int pslab_config_set_record_wall_time(pslab_config* cfg, int enabled) {
  PSLAB_REQUIRE(cfg);
  cfg->cfg.record_wall_time = enabled != 0;
  return PSLAB_OK;
}

int pslab_config_scenario(const pslab_config* cfg, const char** out) {
  PSLAB_REQUIRE(cfg && out);
  *out = cfg->cfg.scenario.c_str();
  return PSLAB_OK;
}

int pslab_config_validate(const pslab_config* cfg) {
  PSLAB_REQUIRE(cfg);
  return guarded([&] { pslab::validate_config(cfg->cfg); });
}

int pslab_config_hash(const pslab_config* cfg, uint64_t* out) {
  PSLAB_REQUIRE(cfg && out);
  return guarded([&] { *out = pslab::config_hash(cfg->cfg); });
}

int pslab_config_to_json(const pslab_config* cfg, char** out) {
  PSLAB_REQUIRE(cfg && out);
  *out = nullptr;
  return guarded([&] { *out = dup(pslab::config_to_json(cfg->cfg)); });
}

int pslab_run(const pslab_config* cfg, pslab_result** out) {
  PSLAB_REQUIRE(cfg && out);
  *out = nullptr;
  return guarded([&] { *out = new pslab_result{pslab::run_experiment(cfg->cfg), cfg->cfg}; });
}

int pslab_run_selftest(pslab_result** out) {
  PSLAB_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    pslab::ExperimentConfig c;
    c.scenario = "selftest";
    c.h_list.clear();
    auto res = pslab::run_selftest();
    res.config_hash = pslab::config_hash(c);
    *out = new pslab_result{std::move(res), c};
  });
}

void pslab_result_free(pslab_result* r) { delete r; }

int pslab_result_passed(const pslab_result* r, int* out) {
  PSLAB_REQUIRE(r && out);
  *out = r->res.passed() ? 1 : 0;
  return PSLAB_OK;
}

int pslab_result_row_count(const pslab_result* r, size_t* out) {
  PSLAB_REQUIRE(r && out);
  *out = r->res.rows.size();
  return PSLAB_OK;
}

int pslab_result_row(const pslab_result* r, size_t i, double* h, double* t, const char** metric, double* value,
                     double* wall_time_s) {
  PSLAB_REQUIRE(r && i < r->res.rows.size());
  const auto& row = r->res.rows[i];
  if (h) *h = row.h;
  if (t) *t = row.t;
  if (metric) *metric = row.metric.c_str();
  if (value) *value = row.value;
  if (wall_time_s) *wall_time_s = row.wall_time_s;
  return PSLAB_OK;
}

int pslab_result_check_count(const pslab_result* r, size_t* out) {
  PSLAB_REQUIRE(r && out);
  *out = r->res.checks.size();
  return PSLAB_OK;
}

int pslab_result_check(const pslab_result* r, size_t i, const char** name, double* value, int* pass) {
  PSLAB_REQUIRE(r && i < r->res.checks.size());
  const auto& c = r->res.checks[i];
  if (name) *name = c.name.c_str();
  if (value) *value = c.value;
  if (pass) *pass = c.pass ? 1 : 0;
  return PSLAB_OK;
}

int pslab_result_fit(const pslab_result* r, const char* name, double* slope, double* intercept, double* r2) {
  PSLAB_REQUIRE(r && name);
  for (const auto& [n, f] : r->res.fits) {
    if (n != name) continue;
    if (slope) *slope = f.slope;
    if (intercept) *intercept = f.intercept;
    if (r2) *r2 = f.r2;
    return PSLAB_OK;
  }
  return record(PSLAB_INVALID_ARGUMENT, std::string("no fit named ") + name);
}

int pslab_result_csv(const pslab_result* r, char** out) {
  PSLAB_REQUIRE(r && out);
  *out = nullptr;
  return guarded([&] { *out = dup(pslab::to_csv(r->res)); });
}

int pslab_result_summary_json(const pslab_result* r, char** out) {
  PSLAB_REQUIRE(r && out);
  *out = nullptr;
  return guarded([&] { *out = dup(pslab::summary_json(r->res, r->cfg)); });
}

int pslab_result_write(const pslab_result* r, const char* dir) {
  PSLAB_REQUIRE(r && dir);
  return guarded([&] { pslab::write_outputs(r->res, r->cfg, dir); });
}

int pslab_fit_slope(const double* h, const double* values, size_t n, double* slope, double* intercept, double* r2) {
  PSLAB_REQUIRE(h && values);
  return guarded([&] {
    auto f = pslab::fit_slope(std::vector<double>(h, h + n), std::vector<double>(values, values + n));
    if (slope) *slope = f.slope;
    if (intercept) *intercept = f.intercept;
    if (r2) *r2 = f.r2;
  });
}

int pslab_coherent_overlap(double x1, double xi1, double x2, double xi2, double h, double* re, double* im) {
  PSLAB_REQUIRE(h > 0.0);
  return guarded([&] {
    auto v = pslab::coherent_overlap({x1, xi1}, {x2, xi2}, h);
    if (re) *re = v.real();
    if (im) *im = v.imag();
  });
}

int pslab_gaussian_wick_symbol(double cx, double cxi, double w, double h, double L, size_t n, double x, double xi,
                               double* re, double* im) {
  PSLAB_REQUIRE(h > 0.0 && w > 0.0 && L > 0.0);
  return guarded([&] {
    pslab::PositionGrid g(-L, L, n);
    pslab::Symbol F = pslab::sample_symbol(pslab::weyl_phase_grid(g, h), [&](double a, double b) {
      return pslab::cplx(std::exp(-((a - cx) * (a - cx) + (b - cxi) * (b - cxi)) / (w * w)));
    });
    auto A = pslab::weyl_quantize(F, g, h);
    auto v = pslab::wick_symbol_at(A, {{x, xi}})[0];
    if (re) *re = v.real();
    if (im) *im = v.imag();
  });
}

}  // extern "C"
