#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tamperbench/experiment.hpp"

using namespace tamperbench;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::filesystem::path temp_dir(const char* tag) {
  auto dir = std::filesystem::temp_directory_path() /
             (std::string("tamperbench_test_") + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("csv formatting uses plain 12-digit decimals") {
  CHECK(csv_double(0.5) == "0.5");
  CHECK(csv_double(1.0 / 3.0) == "0.333333333333");
  CHECK(csv_double(2e-9) == "2e-09");
  CHECK(csv_double(1234567.0) == "1234567");
}

TEST_CASE("config validation names the offending field") {
  nlohmann::json j{{"kind", "bound_tables"}, {"seed", 1}, {"bogus", 3}};
  try {
    ExperimentConfig::from_json(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "bogus");
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
  }
  CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json{{"seed", 1}}),
                  ConfigError);
  CHECK_THROWS_AS(
      ExperimentConfig::from_json(nlohmann::json{{"kind", "bound_tables"}}),
      ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json{
                      {"kind", "nope"}, {"seed", 1}}),
                  ConfigError);
  // seed override makes a seedless config valid
  const auto cfg = ExperimentConfig::from_json(
      nlohmann::json{{"kind", "bound_tables"}}, 7);
  CHECK(cfg.seed == 7);
}

TEST_CASE("bound tables evaluate the closed-form columns") {
  const std::string csv =
      emit_bound_tables({0.5}, {0.0, 0.5, 1.0}, "fixed", 0.25);
  std::istringstream in(csv);
  std::string header, row0, row1;
  std::getline(in, header);
  CHECK(header == "p,mu,nu,bias_tam,bias_res,gamma_tam,gamma_res");
  std::getline(in, row0);
  std::getline(in, row1);
  // row (0.5, 0.5, 0.25): bias_tam = 1/6, bias_res = 0.1
  CHECK(row1.find("0.166666666667") != std::string::npos);
  CHECK(row1.find("0.1") != std::string::npos);
  CHECK(row1.find("0.6") != std::string::npos);
}

TEST_CASE("bound_tables experiment runs and passes") {
  const auto dir = temp_dir("bt");
  ExperimentConfig cfg = ExperimentConfig::defaults("bound_tables", 5);
  cfg.out_dir = dir.string();
  cfg.params["mu_step"] = 0.05;
  const auto report = run(cfg);
  CHECK(report.all_pass);
  CHECK(report.rows == 9 * 21);
  const std::string csv = slurp(report.csv_path);
  CHECK(csv.find("gamma_tam") != std::string::npos);
}

TEST_CASE("identical config and seed give byte-identical csv") {
  const auto dir1 = temp_dir("det1");
  const auto dir2 = temp_dir("det2");
  for (int jobs : {1, 3}) {
    ExperimentConfig cfg = ExperimentConfig::defaults("verify_closed_form", 99);
    cfg.params["n_max"] = 2;
    cfg.params["support_max"] = 2;
    cfg.params["funcs_per_cell"] = 3;
    cfg.out_dir = dir1.string();
    cfg.jobs = 1;
    const auto r1 = run(cfg);
    cfg.out_dir = dir2.string();
    cfg.jobs = jobs;
    const auto r2 = run(cfg);
    CHECK(r1.all_pass);
    CHECK(r2.all_pass);
    CHECK(slurp(r1.csv_path) == slurp(r2.csv_path));
  }
}

TEST_CASE("small bias attack experiment verifies the dictator fixture") {
  const auto dir = temp_dir("ba");
  ExperimentConfig cfg = ExperimentConfig::defaults("bias_attack", 11);
  cfg.out_dir = dir.string();
  cfg.params["trials"] = 20000;
  const auto report = run(cfg);
  CHECK(report.rows == 2);  // two policy kinds on the dictator bit
  CHECK(report.all_pass);
}

TEST_CASE("budget overruns fail the row, not the run") {
  const auto dir = temp_dir("budget");
  ExperimentConfig cfg = ExperimentConfig::defaults("targeted", 2);
  cfg.out_dir = dir.string();
  cfg.enum_budget = 10;  // 4^3 = 64 tuples needed
  const auto report = run(cfg);
  CHECK(report.rows == 1);
  CHECK_FALSE(report.all_pass);
  CHECK(slurp(report.csv_path).find("budget-exceeded") != std::string::npos);
}

TEST_CASE("budget impossibility experiment on a reduced grid") {
  const auto dir = temp_dir("sb");
  ExperimentConfig cfg = ExperimentConfig::defaults("budget_impossibility", 3);
  cfg.out_dir = dir.string();
  cfg.params["n_grid"] = {8, 32};
  cfg.params["trials"] = 2000;
  const auto report = run(cfg);
  CHECK(report.rows == 2);
  CHECK(report.all_pass);
}
