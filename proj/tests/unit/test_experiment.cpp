#include <hdvar/experiment.hpp>
#include <hdvar/version.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

namespace hdvar {
namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.T_grid = {30};
  c.c_grid = {1};
  c.replications = 4;
  c.seed = 77;
  c.penalty = PenaltyStrategy::bic(PathOptions{20, 1e-2, 0});
  c.design.second_lag = 2;
  return c;
}

TEST(Toml, ParsesTheSupportedSubset) {
  const auto j = parse_toml(R"(# leading comment
title = "hdvar"   # trailing
path = 'C:\raw'
[experiment]
T_grid = [100, 300,
          500]  # multi-line
seed = 1_000
ratio = 1e-3
neg = -2.5
on = true
off = false
big = inf
[a.b]
"quoted key" = "tab\there"
c.d = 3
inline = { x = 1, y = [1.5, 2] }
)");
  EXPECT_EQ(j["title"], "hdvar");
  EXPECT_EQ(j["path"], "C:\\raw");
  EXPECT_EQ(j["experiment"]["T_grid"], nlohmann::json({100, 300, 500}));
  EXPECT_EQ(j["experiment"]["seed"].get<long long>(), 1000);
  EXPECT_TRUE(j["experiment"]["seed"].is_number_integer());
  EXPECT_DOUBLE_EQ(j["experiment"]["ratio"].get<double>(), 1e-3);
  EXPECT_DOUBLE_EQ(j["experiment"]["neg"].get<double>(), -2.5);
  EXPECT_TRUE(j["experiment"]["on"].get<bool>());
  EXPECT_FALSE(j["experiment"]["off"].get<bool>());
  EXPECT_TRUE(std::isinf(j["experiment"]["big"].get<double>()));
  EXPECT_EQ(j["a"]["b"]["quoted key"], "tab\there");
  EXPECT_EQ(j["a"]["b"]["c"]["d"], 3);
  EXPECT_EQ(j["a"]["b"]["inline"]["y"][0], 1.5);
}

TEST(Toml, ErrorsCarryLineNumbers) {
  auto message = [](const std::string& text) {
    try {
      parse_toml(text);
    } catch (const ValidationError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message("a = 1\nb = \n").find("line 2"), std::string::npos);
  EXPECT_NE(message("a = 1\n\n[t]\na = 2\na = 3\n").find("line 5"), std::string::npos);
  EXPECT_NE(message("a = 1\nb = 2 3\n").find("line 2"), std::string::npos);
  EXPECT_NE(message("[[arr]]\n").find("line 1"), std::string::npos);
  EXPECT_NE(message("s = \"open\n").find("line 1"), std::string::npos);
  EXPECT_NE(message("x = [1, 2\n").find("TOML"), std::string::npos);
  EXPECT_NE(message("n = 1__0\n").find("line 1"), std::string::npos);
}

TEST(ExperimentConfig, JsonRoundTrip) {
  ExperimentConfig c = small_config();
  c.oracle = OracleKind::kTrueParams;
  c.penalty = PenaltyStrategy::theoretical(2.0, 1.5, 1.0, 1.2);
  c.lasso.max_iter = 500;
  const nlohmann::json j = c;
  const ExperimentConfig back = experiment_config_from_json(j);
  EXPECT_EQ(nlohmann::json(back), j);
  EXPECT_EQ(config_hash(j), config_hash(nlohmann::json(back)));
}

TEST(ExperimentConfig, TomlDrivesTheSameConfig) {
  const auto j = parse_toml(R"([experiment]
T_grid = [30]
c_grid = [1]
replications = 4
seed = 77
[penalty]
kind = "bic"
grid_points = 20
ratio = 0.01
[design]
second_lag = 2
)");
  EXPECT_EQ(nlohmann::json(experiment_config_from_json(j)), nlohmann::json(small_config()));
}

TEST(ExperimentConfig, RejectsBadInput) {
  EXPECT_THROW(experiment_config_from_json(parse_toml("[experiment]\nTgrid = [1]\n")), ValidationError);
  EXPECT_THROW(experiment_config_from_json(parse_toml("[penalty]\nkind = \"cv\"\n")), ValidationError);
  EXPECT_THROW(experiment_config_from_json(parse_toml("[experiment]\nseed = -1\n")), ValidationError);
  EXPECT_THROW(experiment_config_from_json(parse_toml("[experiment]\nreplications = \"many\"\n")), ValidationError);
  EXPECT_THROW(experiment_config_from_json(parse_toml("[experiment]\noracle = \"magic\"\n")), ValidationError);
  ExperimentConfig c = small_config();
  c.T_grid = {31};
  EXPECT_THROW(c.validate(), ValidationError);  // n = 31 is not a multiple of the block size
  c = small_config();
  c.horizon = 2;
  EXPECT_THROW(c.validate(), ValidationError);
  c = small_config();
  c.design.a1_entry = 0.5;  // block row sum 2.5 - 0.5 = 2 > 1
  try {
    c.validate();
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("A1"), std::string::npos);
  }
  c = small_config();
  c.penalty = PenaltyStrategy::fixed(0.0);
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(Experiment, DeterministicAndThreadIndependent) {
  ExperimentConfig c = small_config();
  const ExperimentReport a = run_experiment(c);
  c.threads = 3;
  const ExperimentReport b = run_experiment(c);
  EXPECT_EQ(nlohmann::json(a).dump(), nlohmann::json(b).dump());
  EXPECT_EQ(a.config_hash, b.config_hash);
  EXPECT_EQ(a.version, std::string(kVersion));
  ASSERT_NE(a.find(30, 1), nullptr);
  EXPECT_EQ(a.find(30, 2), nullptr);
}

TEST(Experiment, SingleCellEqualsRunCellAndReplication) {
  const ExperimentConfig c = small_config();
  const ExperimentReport rep = run_experiment(c);
  const CellStats cell = run_cell(30, 1, c.replications, c);
  EXPECT_EQ(nlohmann::json(rep.cells.front()).dump(), nlohmann::json(cell).dump());
  const ReplicationResult r2 = run_replication(30, 1, 2, c);
  EXPECT_EQ(r2.seed, cell.replications[2].seed);
  EXPECT_EQ(r2.sq_error, cell.replications[2].sq_error);
}

TEST(Experiment, AggregatesRecomputeFromReplications) {
  ExperimentConfig c = small_config();
  c.seed = 5;
  const CellStats s = run_cell(30, 1, 5, c);
  ASSERT_EQ(s.completed, 5);
  double mse = 0.0, lasso = 0.0, ols = 0.0, truth = 0.0, df = 0.0;
  for (const auto& r : s.replications) {
    ASSERT_TRUE(r.ok) << r.error;
    mse += r.sq_error / 30.0;
    lasso += r.msfe_lasso;
    ols += r.msfe_oracle_ols;
    truth += r.msfe_oracle_true;
    df += r.mean_df;
    EXPECT_LT(r.max_kkt, c.lasso.kkt_tol);
    EXPECT_GE(r.db_equation_rate, 0.0);
    EXPECT_LE(r.db_equation_rate, 1.0);
    EXPECT_GE(r.rsc_hypothesis, 0);  // np = 60 is within rsc_max_dim
  }
  EXPECT_NEAR(s.mse.mean, mse / 5, 1e-12);
  EXPECT_NEAR(s.mse_per_parameter.mean * 2 * 30, s.mse.mean, 1e-12);
  EXPECT_NEAR(s.mse_total.mean, s.mse.mean * 30, 1e-10);
  EXPECT_NEAR(s.msfe_ratio.mean, lasso / ols, 1e-12);
  EXPECT_NEAR(s.msfe_ratio_true.mean, lasso / truth, 1e-12);
  EXPECT_NEAR(s.mean_df, df / 5, 1e-12);
  EXPECT_GT(s.mse.se, 0.0);
  EXPECT_GE(s.rsc_hypothesis_frequency, 0.0);

  c.oracle = OracleKind::kTrueParams;
  const CellStats t = run_cell(30, 1, 5, c);
  EXPECT_EQ(t.msfe_ratio.mean, t.msfe_ratio_true.mean);
}

TEST(Experiment, NonconvergenceIsCountedAsFailure) {
  ExperimentConfig c = small_config();
  c.lasso.max_iter = 1;
  c.penalty = PenaltyStrategy::fixed(0.01);
  const CellStats s = run_cell(30, 1, 3, c);
  EXPECT_EQ(s.completed + static_cast<int>(s.failures.size()), 3);
  EXPECT_GT(s.failures.size(), 0U);
  EXPECT_GT(s.nonconverged, 0);
  EXPECT_NE(s.failures.front().message.find("converge"), std::string::npos);
}

TEST(Experiment, WritesOutputs) {
  const ExperimentReport r = run_experiment(small_config());
  const auto dir = std::filesystem::temp_directory_path() / "hdvar_test_outputs";
  std::filesystem::remove_all(dir);
  write_experiment_outputs(r, dir.string());
  std::ifstream table(dir / "table1.csv");
  std::string header, columns, a_row, b_row;
  std::getline(table, header);
  std::getline(table, columns);
  std::getline(table, a_row);
  std::getline(table, b_row);
  EXPECT_NE(header.find(to_hex(r.config_hash)), std::string::npos);
  EXPECT_EQ(columns, "panel,T,c,value,stderr,n_reps");
  EXPECT_EQ(a_row.rfind("a,30,1,", 0), 0U);
  EXPECT_EQ(b_row.rfind("b,30,1,", 0), 0U);
  const auto j = nlohmann::json::parse(std::ifstream(dir / "report.json"));
  EXPECT_EQ(j["config_hash"], to_hex(r.config_hash));
  EXPECT_FALSE(j["config"]["experiment"].contains("threads"));
  EXPECT_TRUE(std::filesystem::exists(dir / "diagnostics.csv"));
  std::filesystem::remove_all(dir);
}

TheoryConfig small_theory() {
  TheoryConfig t;
  t.T = 120;
  t.n = 5;
  t.p = 2;
  t.replications = 6;
  t.rsc_samples = 6;
  t.seed = 3;
  t.design.second_lag = 2;
  return t;
}

TEST(Theory, DeterministicWithConsistentCounts) {
  TheoryConfig t = small_theory();
  const TheoryReport a = verify_theory(t);
  t.threads = 2;
  const TheoryReport b = verify_theory(t);
  EXPECT_EQ(nlohmann::json(a).dump(), nlohmann::json(b).dump());
  EXPECT_EQ(a.completed, 6);
  int db_fail = 0;
  for (const auto& r : a.replications) db_fail += r.ok && !r.db_joint;
  EXPECT_EQ(a.db_failures, db_fail);
  EXPECT_NEAR(a.db_failure_frequency, static_cast<double>(db_fail) / 6, 1e-15);
  EXPECT_LE(a.qualifying, a.hypothesis_count);
  EXPECT_NEAR(a.pi1, pi1(t.epsilon), 1e-15);
  EXPECT_GT(a.sigma_gamma_sq, 0.0);
  ASSERT_EQ(a.gram_points.size(), t.gram_a_grid.size());
  for (std::size_t k = 1; k < a.gram_points.size(); ++k)
    EXPECT_LE(a.gram_points[k].exceed_frequency, a.gram_points[k - 1].exceed_frequency);
}

TEST(Theory, ConfigRoundTripAndValidation) {
  const TheoryConfig t = small_theory();
  const nlohmann::json j = t;
  EXPECT_EQ(nlohmann::json(theory_config_from_json(j)), j);
  TheoryConfig bad = small_theory();
  bad.n = 7;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = small_theory();
  bad.design.second_lag = 3;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = small_theory();
  bad.gram_a_grid = {0.0};
  EXPECT_THROW(bad.validate(), ValidationError);
}

}  // namespace
}  // namespace hdvar
