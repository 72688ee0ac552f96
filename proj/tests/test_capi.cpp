#include <cmath>
#include <cstring>
#include <string>

#include "doctest.h"
#include "pslab/pslab.h"

TEST_CASE("status names and errors") {
  CHECK(std::string(pslab_status_name(PSLAB_OK)) == "ok");
  CHECK(std::string(pslab_status_name(999)) == "unknown");
  CHECK(pslab_scenario_count() == 5);
  CHECK(std::string(pslab_scenario_name(0)) == "ehrenfest");
  CHECK(pslab_scenario_name(5) == nullptr);

  pslab_config* cfg = nullptr;
  CHECK(pslab_config_create("warp-drive", nullptr, &cfg) == PSLAB_CONFIG_ERROR);
  CHECK(cfg == nullptr);
  CHECK(std::strlen(pslab_last_error()) > 0);
  CHECK(pslab_config_create(nullptr, nullptr, &cfg) == PSLAB_INVALID_ARGUMENT);
  CHECK(pslab_config_validate(nullptr) == PSLAB_INVALID_ARGUMENT);
}

TEST_CASE("config handle") {
  pslab_config* cfg = nullptr;
  REQUIRE(pslab_config_create("composition", "quick", &cfg) == PSLAB_OK);
  const char* name = nullptr;
  CHECK(pslab_config_scenario(cfg, &name) == PSLAB_OK);
  CHECK(std::string(name) == "composition");

  uint64_t h0 = 0, h1 = 0;
  CHECK(pslab_config_hash(cfg, &h0) == PSLAB_OK);
  CHECK(pslab_config_set_jobs(cfg, 4) == PSLAB_OK);
  CHECK(pslab_config_hash(cfg, &h1) == PSLAB_OK);
  CHECK(h0 == h1);

  // a rejected merge leaves the handle untouched
  CHECK(pslab_config_merge_json(cfg, R"({"orders": [2], "bogus": true})") == PSLAB_CONFIG_ERROR);
  CHECK(pslab_config_hash(cfg, &h1) == PSLAB_OK);
  CHECK(h0 == h1);
  CHECK(std::string(pslab_last_error()).find("bogus") != std::string::npos);

  double hs[] = {0.1, 0.2, 0.3};
  CHECK(pslab_config_set_h_list(cfg, hs, 3) == PSLAB_OK);
  CHECK(pslab_config_validate(cfg) == PSLAB_CONFIG_ERROR);

  char* js = nullptr;
  CHECK(pslab_config_to_json(cfg, &js) == PSLAB_OK);
  REQUIRE(js != nullptr);
  CHECK(std::string(js).find("\"h_list\"") != std::string::npos);
  pslab_string_free(js);
  pslab_config_free(cfg);
}

TEST_CASE("run through the handle") {
  pslab_config* cfg = nullptr;
  REQUIRE(pslab_config_create("counterexample", "quick", &cfg) == PSLAB_OK);
  CHECK(pslab_config_set_record_wall_time(cfg, 0) == PSLAB_OK);
  pslab_result* r = nullptr;
  REQUIRE(pslab_run(cfg, &r) == PSLAB_OK);
  int passed = 0;
  CHECK(pslab_result_passed(r, &passed) == PSLAB_OK);
  CHECK(passed == 1);

  size_t rows = 0, checks = 0;
  CHECK(pslab_result_row_count(r, &rows) == PSLAB_OK);
  CHECK(rows == 4 + 2 * 6);
  double h = 0, t = 0, v = 0, w = -1;
  const char* metric = nullptr;
  CHECK(pslab_result_row(r, 0, &h, &t, &metric, &v, &w) == PSLAB_OK);
  CHECK(std::string(metric) == "trace_norm");
  CHECK(h == 1.0);
  CHECK(w == 0.0);
  CHECK(v > 0.0);
  CHECK(pslab_result_row(r, rows, nullptr, nullptr, nullptr, nullptr, nullptr) == PSLAB_INVALID_ARGUMENT);

  CHECK(pslab_result_check_count(r, &checks) == PSLAB_OK);
  CHECK(checks == 4);
  const char* cname = nullptr;
  int pass = 0;
  CHECK(pslab_result_check(r, 0, &cname, &v, &pass) == PSLAB_OK);
  CHECK(pass == 1);

  char* csv = nullptr;
  CHECK(pslab_result_csv(r, &csv) == PSLAB_OK);
  CHECK(std::string(csv).rfind("h,t,metric,value,wall_time_s\n", 0) == 0);
  pslab_string_free(csv);
  char* sum = nullptr;
  CHECK(pslab_result_summary_json(r, &sum) == PSLAB_OK);
  CHECK(std::string(sum).find("\"passed\": true") != std::string::npos);
  pslab_string_free(sum);
  CHECK(pslab_result_fit(r, "nothing", nullptr, nullptr, nullptr) == PSLAB_INVALID_ARGUMENT);

  pslab_result_free(r);
  pslab_config_free(cfg);
}

TEST_CASE("numerical helpers") {
  double h[] = {0.4, 0.2, 0.1};
  double y[] = {std::sqrt(0.4), std::sqrt(0.2), std::sqrt(0.1)};
  double slope = 0, r2 = 0;
  CHECK(pslab_fit_slope(h, y, 3, &slope, nullptr, &r2) == PSLAB_OK);
  CHECK(std::abs(slope - 0.5) < 1e-10);
  CHECK(pslab_fit_slope(h, y, 2, &slope, nullptr, &r2) == PSLAB_INVALID_ARGUMENT);

  double re = 0, im = 0;
  CHECK(pslab_coherent_overlap(0, 0, 1, 0, 0.5, &re, &im) == PSLAB_OK);
  CHECK(std::abs(std::hypot(re, im) - std::exp(-0.5)) < 1e-12);
  CHECK(pslab_coherent_overlap(0, 0, 1, 0, -1.0, &re, &im) == PSLAB_INVALID_ARGUMENT);

  // Wick symbol of Op(exp(-|X|^2)) is exp(-|X|^2/(1+h))/(1+h)
  double hh = 0.3;
  CHECK(pslab_gaussian_wick_symbol(0, 0, 1.0, hh, 8.0, 256, 0.4, -0.2, &re, &im) == PSLAB_OK);
  CHECK(std::abs(re - std::exp(-0.2 / (1 + hh)) / (1 + hh)) < 1e-8);
  CHECK(std::abs(im) < 1e-10);
  CHECK(pslab_gaussian_wick_symbol(0, 0, 1.0, hh, 8.0, 100, 0.4, -0.2, &re, &im) == PSLAB_INVALID_ARGUMENT);
}
