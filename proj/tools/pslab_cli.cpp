// Command-line front end; talks to the library only through the C API.
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pslab/pslab.h"

namespace {

constexpr int kExitFailedChecks = 1;
constexpr int kExitError = 2;

int report_error(int status) {
  std::fprintf(stderr, "error (status %d): %s\n", status, pslab_last_error());
  return kExitError;
}

struct Options {
  std::string config_path;
  std::string out_dir = "results";
  std::vector<double> h_list;
  double t_max = -1.0;
  int jobs = 0;
  std::string preset = "default";
  bool quiet = false;
};

void print_checks(const pslab_result* r, bool quiet) {
  size_t n = 0;
  pslab_result_check_count(r, &n);
  for (size_t i = 0; i < n; ++i) {
    const char* name = nullptr;
    double value = 0.0;
    int pass = 0;
    pslab_result_check(r, i, &name, &value, &pass);
    if (!quiet || !pass) std::printf("  %-4s %-48s %.6g\n", pass ? "ok" : "FAIL", name, value);
  }
}

int finish(pslab_result* r, const Options& o, const std::string& label) {
  int st = pslab_result_write(r, o.out_dir.c_str());
  if (st != PSLAB_OK) {
    pslab_result_free(r);
    return report_error(st);
  }
  int passed = 0;
  pslab_result_passed(r, &passed);
  std::printf("%s: %s\n", label.c_str(), passed ? "PASS" : "FAIL");
  print_checks(r, o.quiet);
  std::printf("outputs in %s\n", o.out_dir.c_str());
  pslab_result_free(r);
  return passed ? 0 : kExitFailedChecks;
}

int run_scenario(const std::string& scenario, const Options& o) {
  pslab_config* cfg = nullptr;
  int st = pslab_config_create(scenario.c_str(), o.preset.c_str(), &cfg);
  if (st != PSLAB_OK) return report_error(st);
  auto fail = [&](int s) {
    pslab_config_free(cfg);
    return report_error(s);
  };

  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) {
      std::fprintf(stderr, "error: cannot read %s\n", o.config_path.c_str());
      pslab_config_free(cfg);
      return kExitError;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    if ((st = pslab_config_merge_json(cfg, ss.str().c_str())) != PSLAB_OK) return fail(st);
    const char* named = nullptr;
    pslab_config_scenario(cfg, &named);
    if (scenario != named) {
      std::fprintf(stderr, "error: config names scenario '%s' but the subcommand is '%s'\n", named,
                   scenario.c_str());
      pslab_config_free(cfg);
      return kExitError;
    }
  }
  if (!o.h_list.empty() && (st = pslab_config_set_h_list(cfg, o.h_list.data(), o.h_list.size())) != PSLAB_OK)
    return fail(st);
  if (o.t_max >= 0.0 && (st = pslab_config_set_t_max(cfg, o.t_max)) != PSLAB_OK) return fail(st);
  if (o.jobs > 0 && (st = pslab_config_set_jobs(cfg, o.jobs)) != PSLAB_OK) return fail(st);
  if ((st = pslab_config_validate(cfg)) != PSLAB_OK) return fail(st);

  uint64_t hash = 0;
  pslab_config_hash(cfg, &hash);
  std::printf("%s: config %016llx\n", scenario.c_str(), static_cast<unsigned long long>(hash));
  std::fflush(stdout);

  pslab_result* r = nullptr;
  st = pslab_run(cfg, &r);
  pslab_config_free(cfg);
  if (st != PSLAB_OK) return report_error(st);
  return finish(r, o, scenario);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phase-space semiclassical experiments"};
  app.require_subcommand(1);
  Options o;

  std::vector<std::string> scenarios;
  for (size_t i = 0; i < pslab_scenario_count(); ++i) scenarios.emplace_back(pslab_scenario_name(i));

  const char* blurbs[] = {"Wick symbol of the Heisenberg evolution against classical transport",
                          "Husimi density of TDHF against the Vlasov solution",
                          "free spreading of a coherent state over long times",
                          "trace-class operator with a non-integrable Weyl symbol",
                          "remainder of the Wick composition expansion"};
  for (size_t i = 0; i < scenarios.size(); ++i) {
    auto* sub = app.add_subcommand(scenarios[i], i < 5 ? blurbs[i] : scenarios[i]);
    sub->add_option("--config", o.config_path, "JSON config merged over the preset")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out_dir, "output directory")->capture_default_str();
    sub->add_option("--h-list", o.h_list, "comma separated h values, descending")->delimiter(',');
    sub->add_option("--t-max", o.t_max, "final time");
    sub->add_option("--jobs", o.jobs, "parallel h cells")->check(CLI::PositiveNumber);
    sub->add_option("--preset", o.preset, "default or quick")->capture_default_str();
    sub->add_flag("--quiet", o.quiet, "only print failing checks");
  }
  auto* self = app.add_subcommand("selftest", "invariant suites at reduced sizes");
  self->add_option("--out", o.out_dir, "output directory")->capture_default_str();
  self->add_flag("--quiet", o.quiet, "only print failing checks");

  CLI11_PARSE(app, argc, argv);

  if (self->parsed()) {
    pslab_result* r = nullptr;
    int st = pslab_run_selftest(&r);
    if (st != PSLAB_OK) return report_error(st);
    return finish(r, o, "selftest");
  }
  for (const auto& s : scenarios)
    if (app.got_subcommand(s)) return run_scenario(s, o);
  return kExitError;
}
