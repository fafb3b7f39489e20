#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "regstrip/regstrip.hpp"

using namespace regstrip;
namespace fs = std::filesystem;

namespace {

ScalingRow row(double delta, double value, double err = 0.0) {
  ScalingRow r;
  r.name = "t";
  r.delta = delta;
  r.value = value;
  r.stderr_ = err;
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("regstrip_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json base_config() {
  return {{"experiment", "x"}, {"kind", "single"}, {"deltas", {0.0625, 0.03125, 0.015625}}};
}

}  // namespace

TEST(FitExponent, ExactPowers) {
  std::vector<ScalingRow> rows;
  for (int k = 3; k <= 7; ++k) rows.push_back(row(std::ldexp(1.0, -k), std::ldexp(1.0, -k)));
  EXPECT_NEAR(fit_exponent(rows).slope, 1.0, 1e-12);
  EXPECT_EQ(fit_exponent(rows).used, 5);
  for (auto& r : rows) r.value = 0.7;
  EXPECT_NEAR(fit_exponent(rows).slope, 0.0, 1e-12);
  EXPECT_NEAR(fit_exponent(rows).stderr_, 0.0, 1e-12);
}

TEST(FitExponent, NoisyPowerLaw) {
  CounterRng rng(6);
  std::vector<ScalingRow> rows;
  for (int k = 2; k <= 9; ++k) {
    const double d = std::ldexp(1.0, -k);
    rows.push_back(row(d, std::pow(d, 1.5) * (1 + rng.uniform(-0.03, 0.03))));
  }
  const FitResult fit = fit_exponent(rows);
  EXPECT_NEAR(fit.slope, 1.5, 0.05);
  EXPECT_GT(fit.stderr_, 0.0);
}

TEST(FitExponent, ExclusionAndMinimumRows) {
  std::vector<ScalingRow> rows = {row(0.5, 0.5), row(0.25, 0.25)};
  EXPECT_THROW(fit_exponent(rows), InsufficientData);
  rows.push_back(row(0.125, 0.125, 0.02));  // relative error 0.16: excluded
  rows.push_back(row(0.0625, 0.0));         // nonpositive: excluded
  EXPECT_THROW(fit_exponent(rows), InsufficientData);
  rows.push_back(row(0.0625, 0.0625, 0.006));
  EXPECT_EQ(fit_exponent(rows).used, 3);
}

TEST(Config, ParsesDefaultsAndSpecials) {
  auto j = base_config();
  j["kind"] = "clustered";
  j["rho"] = "auto";
  j["r"] = "sqrt";
  j["n"] = "auto";
  j["seeds"] = {1, 2};
  const ScalingConfig c = scaling_config_from_json(j);
  EXPECT_FALSE(c.rho);
  EXPECT_FALSE(c.r);
  EXPECT_FALSE(c.n);
  EXPECT_EQ(c.method, "grid");
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{1, 2}));
  EXPECT_EQ(generate_for(c, 1.0 / 16, 1).size(), 64u);
}

TEST(Config, Errors) {
  auto bad = [](auto mutate) {
    auto j = base_config();
    mutate(j);
    EXPECT_THROW(scaling_config_from_json(j), InputError) << j.dump();
  };
  bad([](nlohmann::json& j) { j["deltas"] = {0.1}; });
  bad([](nlohmann::json& j) { j["deltas"] = {1.0}; });
  bad([](nlohmann::json& j) { j["deltas"] = {std::ldexp(1.0, -11)}; });
  bad([](nlohmann::json& j) { j["deltas"] = nlohmann::json::array(); });
  bad([](nlohmann::json& j) { j["kind"] = "spiral"; });
  bad([](nlohmann::json& j) { j.erase("experiment"); });
  bad([](nlohmann::json& j) { j["method"] = "exact"; });
  bad([](nlohmann::json& j) { j["lambda"] = 1.5; });
  bad([](nlohmann::json& j) {
    j["lambda"] = 0.5;
    j["method"] = "mc";
  });
  bad([](nlohmann::json& j) { j["box"] = {1, 2, 3}; });
  bad([](nlohmann::json& j) { j["rho"] = "big"; });
  bad([](nlohmann::json& j) { j["samples"] = 10; });
  bad([](nlohmann::json& j) { j["kind"] = "random"; });
  bad([](nlohmann::json& j) { j["deltas"] = "0.5"; });
  EXPECT_THROW(read_scaling_config("/nonexistent/config.json"), InputError);
}

TEST(Config, ShippedConfigsParse) {
  for (const char* name : {"sl2_scaling.json", "single_scaling.json", "clustered_scaling.json"})
    EXPECT_NO_THROW(read_scaling_config(std::string(REGSTRIP_CORPUS_DIR) + "/../../configs/" + name)) << name;
}

TEST(Scaling, SingleStripExponent) {
  auto j = base_config();
  j["deltas"] = {0.0625, 0.03125, 0.015625, 0.0078125};
  j["res_factor"] = 0.25;
  const ScalingResult res = run_scaling(scaling_config_from_json(j));
  ASSERT_TRUE(res.fit);
  EXPECT_NEAR(res.fit->slope, 1.5, 0.1);
  EXPECT_TRUE(res.failures.empty());
  for (const auto& r : res.rows) EXPECT_EQ(r.n_strips, 1u);
}

TEST(Scaling, McRowsCarryError) {
  auto j = base_config();
  j["method"] = "mc";
  j["samples"] = 20000;
  j["seeds"] = {1, 2};
  const ScalingResult res = run_scaling(scaling_config_from_json(j));
  ASSERT_EQ(res.rows.size(), 3u);
  for (const auto& r : res.rows) {
    EXPECT_GT(r.value, 0.0);
    EXPECT_EQ(r.method, "mc");
  }
}

TEST(Scaling, OutputIsByteIdentical) {
  const fs::path dir = scratch("bytes");
  auto j = base_config();
  j["kind"] = "sl2";
  j["deltas"] = {0.0625, 0.03125, 0.015625};
  j["lambda"] = 0.5;
  const ScalingConfig c = scaling_config_from_json(j);
  write_scaling(run_scaling(c), (dir / "a.csv").string());
  write_scaling(run_scaling(c), (dir / "b.csv").string());
  const std::string a = slurp(dir / "a.csv");
  EXPECT_EQ(a, slurp(dir / "b.csv"));
  EXPECT_EQ(a.substr(0, a.find('\n')), kScalingCsvHeader);
  EXPECT_EQ(slurp(dir / "a.fit.json"), slurp(dir / "b.fit.json"));
  const auto fit = nlohmann::json::parse(slurp(dir / "a.fit.json"));
  EXPECT_EQ(fit["experiment"], "x");
  EXPECT_TRUE(fit["slope"].is_number());
}

TEST(ScalingCsv, LineFormat) {
  ScalingRow r = row(0.25, 0.1, 0.0);
  r.rho = 0.5;
  r.n_strips = 3;
  r.method = "grid";
  EXPECT_EQ(scaling_csv_line(r), "t,0.25,0.5,3,,grid,0.1,0");
  r.lambda = 0.5;
  EXPECT_EQ(scaling_csv_line(r), "t,0.25,0.5,3,0.5,grid,0.1,0");
}

TEST(Regression, CorpusPasses) {
  const RegressionReport rep = run_regression(REGSTRIP_CORPUS_DIR);
  EXPECT_TRUE(rep.pass()) << rep.first_failure().value_or("");
  ASSERT_EQ(rep.files.size(), 3u);
  EXPECT_EQ(rep.files[0].label, "clustered");
  for (const auto& f : rep.files) EXPECT_EQ(f.checks.size(), 8u) << f.file;
  EXPECT_TRUE(rep.to_json()["pass"].get<bool>());
}

TEST(Regression, FaultInjectionNamesFirstFailure) {
  const fs::path dir = scratch("fault");
  fs::copy(fs::path(REGSTRIP_CORPUS_DIR) / "random_d6.json", dir / "random_d6.json");
  // A clustered family filed under the sl2 label.
  write_family(gen_clustered_family(1.0 / 64, 1.0 / 8, 1.0 / 8, 3200, 3), (dir / "sl2_bad.json").string());
  const RegressionReport rep = run_regression(dir.string());
  ASSERT_FALSE(rep.pass());
  EXPECT_EQ(rep.first_failure()->rfind("conditions.ball_condition_count", 0), 0u) << *rep.first_failure();
  EXPECT_EQ(rep.files.back().checks.size(), 3u);
  EXPECT_EQ(rep.files.front().checks.size(), 8u);
  const auto j = rep.to_json();
  EXPECT_FALSE(j["pass"].get<bool>());
  EXPECT_TRUE(j.contains("first_failure"));
}

TEST(Regression, BadFileAndEmptyDirectory) {
  const fs::path dir = scratch("broken");
  EXPECT_THROW(run_regression(dir.string()), InputError);
  EXPECT_THROW(run_regression((dir / "missing").string()), InputError);
  std::ofstream(dir / "sl2_x.json") << "{\"delta\": 0.3}";
  const RegressionReport rep = run_regression(dir.string());
  ASSERT_FALSE(rep.pass());
  EXPECT_EQ(rep.files[0].checks[0].name, "geom_core.family_file");
}

TEST(Regression, Labels) {
  EXPECT_EQ(corpus_label("sl2_d6.json"), "sl2");
  EXPECT_EQ(corpus_label("clustered.json"), "clustered");
  EXPECT_EQ(corpus_label("x_random.json"), "other");
}
