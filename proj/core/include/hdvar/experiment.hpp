#pragma once

#include <hdvar/dgp.hpp>
#include <hdvar/lasso.hpp>
#include <hdvar/theory_bounds.hpp>

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace hdvar {

enum class OracleKind { kOlsOnSupport, kTrueParams };

std::string oracle_name(OracleKind kind);
OracleKind parse_oracle(const std::string& name);

/// Monte Carlo study over a (T, c) grid with n = c T.
struct ExperimentConfig {
  std::vector<int> T_grid{100};
  std::vector<int> c_grid{1};
  int replications = 100;
  std::uint64_t seed = 20240601;
  int horizon = 1;
  int threads = 1;
  OracleKind oracle = OracleKind::kOlsOnSupport;
  PenaltyStrategy penalty = PenaltyStrategy::bic();
  LassoOptions lasso;
  SimulationDesign design;
  int burn_in = -1;  // negative: default_burn_in(p)
  /// RSC hypothesis frequency needs the population Gram matrix; it is only
  /// computed when np does not exceed this.
  int rsc_max_dim = 400;

  int lag_order() const { return design.second_lag; }
  /// Throws ValidationError unless every grid cell yields a stable,
  /// well-formed design.
  void validate() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);

/// FNV-1a of the canonical JSON dump.
std::uint64_t config_hash(const nlohmann::json& canonical);

struct ReplicationFailure {
  int replication = 0;
  std::uint64_t seed = 0;
  std::string message;
};

struct ReplicationResult {
  bool ok = false;
  std::uint64_t seed = 0;
  std::string error;
  double sq_error = 0.0;           // ||B_hat - B*||_F^2
  double msfe_lasso = 0.0;         // |y_hat - y_{T+1}|^2
  double msfe_oracle_ols = 0.0;
  double msfe_oracle_true = 0.0;
  double mean_df = 0.0;
  double max_kkt = 0.0;
  int nonconverged = 0;
  int equation_failures = 0;
  double db_equation_rate = 0.0;  // fraction of equations with lambda_i >= 2|X'U_i/T_eff|_inf
  bool db_joint = false;
  int rsc_hypothesis = -1;        // 1/0 when evaluated, -1 when skipped
  bool oracle_rank_deficient = false;
};

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

struct CellStats {
  int T = 0;
  int c = 0;
  int n = 0;
  int p = 0;
  int requested = 0;
  int completed = 0;
  std::vector<ReplicationFailure> failures;

  // Panel (a). Default: ||B_hat - B*||_F^2 / n.
  MeanSe mse;
  MeanSe mse_per_parameter;  // / (n^2 p)
  MeanSe mse_total;          // unnormalized
  MeanSe mse_per_T;          // / T

  // Panel (b): mean MSFE of the lasso over mean MSFE of the oracle.
  MeanSe msfe_ratio;             // against the configured oracle
  MeanSe msfe_ratio_ols;         // OLS on the true support
  MeanSe msfe_ratio_true;        // true parameters
  double msfe_lasso = 0.0;
  double msfe_oracle = 0.0;

  double mean_df = 0.0;
  double max_kkt = 0.0;
  long nonconverged = 0;
  double db_equation_frequency = 0.0;
  double db_joint_frequency = 0.0;
  double rsc_hypothesis_frequency = -1.0;  // -1 when not evaluated
  int oracle_rank_deficient = 0;

  std::vector<ReplicationResult> replications;
};

ReplicationResult run_replication(int T, int c, int replication, const ExperimentConfig& config);
CellStats run_cell(int T, int c, int replications, const ExperimentConfig& config);

struct ExperimentReport {
  nlohmann::json config;
  std::uint64_t config_hash = 0;
  std::string version;
  std::vector<CellStats> cells;

  const CellStats* find(int T, int c) const;
};

ExperimentReport run_experiment(const ExperimentConfig& config);

void to_json(nlohmann::json& j, const CellStats& s);
void to_json(nlohmann::json& j, const ExperimentReport& r);

/// report.json, table1.csv (panel, T, c, value, stderr, n_reps) and
/// diagnostics.csv in `dir`.
void write_experiment_outputs(const ExperimentReport& report, const std::string& dir);

// ---------------------------------------------------------------------------
// Theory verification on a small desk design.

struct TheoryConfig {
  int T = 500;
  int n = 10;
  int p = 2;
  int replications = 1000;
  std::uint64_t seed = 20240602;
  double epsilon = 3.0;
  double tau_star = 1.0;
  double alpha = 2.0;
  double safety = 1.01;
  double q = 0.0;
  int rsc_samples = 30;
  int threads = 1;
  SimulationDesign design{5, 0.15, -0.1, 2, 1e-5, 0.8};
  GramConstants constants;  // c_phi <= 0 means "fit from the spec"
  std::vector<double> gram_a_grid{0.25, 0.5, 1.0, 2.0};

  void validate() const;
};

void to_json(nlohmann::json& j, const TheoryConfig& c);
TheoryConfig theory_config_from_json(const nlohmann::json& j);

struct TheoryReplication {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double max_statistic = 0.0;
  bool db_joint = false;
  double gram_deviation = 0.0;
  bool rsc_hypothesis = false;
  int rsc_violations = 0;
  int rsc_cone_failures = 0;
  double rsc_min_ratio = 0.0;
  double l2_max = 0.0;             // max_i |beta_hat_i - beta*_i|^2
  double prediction_max = 0.0;     // max_i |X (beta_hat_i - beta*_i)|^2 / T_eff
  int l2_violations = 0;
  int prediction_violations = 0;
};

struct TheoryReport {
  TheoryConfig config;
  nlohmann::json config_json;
  double lambda = 0.0;
  double pi1 = 0.0;
  double sigma_gamma_sq = 0.0;
  double r_q = 0.0;
  double eta = 0.0;
  double l2_bound = 0.0;
  double prediction_bound = 0.0;
  double rsc_threshold = 0.0;  // a = sigma^{2(1-q)} lambda^q / (64 R_q)
  GramConstants constants;
  int completed = 0;
  int db_failures = 0;
  double db_failure_frequency = 0.0;
  int hypothesis_count = 0;         // RSC max-norm hypothesis verified
  int qualifying = 0;               // DB and hypothesis both verified
  int l2_violations_qualifying = 0;
  int prediction_violations_qualifying = 0;
  int prediction_violations_db = 0;  // prediction bound on all DB-event replications
  int rsc_violations_under_hypothesis = 0;
  int rsc_cone_failures = 0;
  struct GramPoint {
    double a = 0.0;
    double exceed_frequency = 0.0;
    double pi2 = 0.0;
    GramSideConditions side;
  };
  std::vector<GramPoint> gram_points;
  std::vector<TheoryReplication> replications;
};

TheoryReport verify_theory(const TheoryConfig& config);

void to_json(nlohmann::json& j, const TheoryReport& r);
void write_theory_outputs(const TheoryReport& report, const std::string& dir);

// ---------------------------------------------------------------------------
// TOML-subset reader: tables, dotted keys, strings, numbers, booleans and
// arrays of scalars. Returns the document as JSON; throws ValidationError with
// the line number on malformed input.

nlohmann::json parse_toml(const std::string& text);
nlohmann::json parse_toml_file(const std::string& path);

}  // namespace hdvar
