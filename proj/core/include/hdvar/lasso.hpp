#pragma once

#include <hdvar/common.hpp>
#include <hdvar/dgp.hpp>
#include <hdvar/var_model.hpp>

#include <nlohmann/json_fwd.hpp>

#include <functional>
#include <string>
#include <vector>

namespace hdvar {

/// Stacked regression: row t of X is (y'_{t-1}, ..., y'_{t-p}) for t = p+1..T,
/// row t of Y is y'_t. Columns of X are lag-major.
struct DesignMatrices {
  Matrix X;
  Matrix Y;
  int n = 0;
  int p = 0;

  int T_eff() const { return static_cast<int>(X.rows()); }
  int width() const { return static_cast<int>(X.cols()); }
};

DesignMatrices build_design(const Matrix& data, int p);
inline DesignMatrices build_design(const TimeSeriesPanel& panel, int p) { return build_design(panel.data, p); }

/// Sufficient statistics shared by every equation: G = X'X / T_eff,
/// C = X'Y / T_eff, yy_i = |Y_i|^2 / T_eff.
struct GramCache {
  Matrix G;
  Matrix C;
  Vector yy;
  int T_eff = 0;
};

GramCache make_gram_cache(const DesignMatrices& design);

struct LassoOptions {
  double tol_cd = 1e-9;    // stop when the largest coefficient change in a sweep is below this
  long max_iter = 100000;  // sweeps
  double kkt_tol = 1e-6;
};

/// Solution of min_b (1/T_eff)|Y_i - X b|^2 + lambda |b|_1 for one equation.
struct EquationFit {
  Vector beta;
  double lambda = 0.0;
  long iterations = 0;
  double kkt_residual = 0.0;
  bool converged = false;
  double rss = 0.0;  // |Y_i - X beta|^2 (not normalized)
  std::vector<int> active;

  int df() const { return static_cast<int>(active.size()); }
};

/// max_j |2 g_j - lambda sign(b_j)| on the nonzeros, max(0, |2 g_j| - lambda)
/// elsewhere, with g = c - G b.
double kkt_residual(const Matrix& G, const Vector& c, const Vector& beta, double lambda);

/// Coordinate descent with covariance updates over an active set that grows
/// by KKT violators. Reusable along a path: successive solve() calls warm-start.
class CdSolver {
 public:
  CdSolver(const Matrix& G, Vector c, LassoOptions options = {});

  /// Solves at lambda > 0 starting from the current iterate.
  void solve(double lambda);

  const Vector& beta() const { return beta_; }
  long iterations() const { return iterations_; }
  bool converged() const { return converged_; }
  double kkt() const { return kkt_; }
  std::vector<int> support() const;

  /// Lasso objective without the constant |Y|^2/T_eff term.
  double objective(double lambda) const;

 private:
  void add_to_active(int j);
  void refresh_gradient();
  bool inner_sweeps(double lambda, double tol, long& budget);
  bool polish(double lambda);

  const Matrix& G_;
  Vector c_;
  LassoOptions opt_;
  Vector beta_;
  Vector grad_;  // c - G beta on all coordinates, valid after refresh_gradient()
  std::vector<int> active_;
  std::vector<char> in_active_;
  Matrix g_aa_;  // G restricted to the active set
  Vector r_a_;   // c - G beta restricted to the active set
  long iterations_ = 0;
  bool converged_ = false;
  double kkt_ = 0.0;
};

EquationFit fit_lasso(const DesignMatrices& design, const GramCache& gram, int equation, double lambda,
                      const LassoOptions& options = {});
EquationFit fit_lasso(const DesignMatrices& design, int equation, double lambda, const LassoOptions& options = {});

struct PathOptions {
  int grid_points = 100;
  double ratio = 1e-3;
  /// The path stops once the active set reaches this size; BIC is undefined
  /// once the fit interpolates. Non-positive means T_eff / 2.
  int max_df = 0;
};

struct RegularizationPath {
  std::vector<double> lambdas;  // descending
  std::vector<EquationFit> fits;
  std::vector<double> bic;
  bool truncated = false;  // stopped early by max_df
};

/// 2 |c_i|_inf, the smallest penalty with an all-zero solution.
double lambda_max(const GramCache& gram, int equation);

RegularizationPath compute_path(const DesignMatrices& design, const GramCache& gram, int equation,
                                const PathOptions& path = {}, const LassoOptions& options = {});

double bic_score(double rss, int df, int T_eff);

/// Index of the minimal BIC on the path; ties go to the larger lambda.
/// Throws NumericalError if every point has zero residual.
std::size_t bic_select(const RegularizationPath& path);

/// Penalty of the deviation-bound lemma:
/// tau (eps + log(T n^2 p))^{2/alpha} sqrt((eps + log(n^2 p)) / T).
/// Requires T > eps + log(n^2 p).
double theoretical_lambda(int T_eff, int n, int p, double epsilon, double tau_star, double alpha);

struct PenaltyStrategy {
  enum class Kind { kBic, kFixed, kTheoretical };
  Kind kind = Kind::kBic;
  double lambda = 0.0;  // kFixed
  double epsilon = 1.0;  // kTheoretical
  double tau_star = 1.0;
  double alpha = 2.0;
  double safety = 1.01;
  PathOptions path;

  static PenaltyStrategy bic(PathOptions path = {}) { return {Kind::kBic, 0.0, 1.0, 1.0, 2.0, 1.01, path}; }
  static PenaltyStrategy fixed(double lambda) { return {Kind::kFixed, lambda, 1.0, 1.0, 2.0, 1.01, {}}; }
  static PenaltyStrategy theoretical(double epsilon, double tau_star, double alpha, double safety = 1.01) {
    return {Kind::kTheoretical, 0.0, epsilon, tau_star, alpha, safety, {}};
  }
  std::string name() const;
};

struct EquationFailure {
  int equation = 0;
  std::string message;
};

struct LassoFit {
  Matrix beta;  // np x n, column i is beta_hat_i
  std::vector<double> lambda;
  std::vector<std::vector<int>> active_sets;
  std::vector<long> iterations;
  std::vector<double> kkt_residual;
  std::vector<char> converged;
  std::vector<double> rss;
  std::vector<EquationFailure> failures;
  int n = 0;
  int p = 0;
  int T_eff = 0;
  std::string strategy;

  bool all_converged() const;
};

/// Solves every equation independently on `threads` workers (0 = hardware
/// concurrency). Results are stored by equation index, so they do not depend
/// on the schedule. A failing equation is recorded and left at zero.
LassoFit fit_all_equations(const DesignMatrices& design, const PenaltyStrategy& strategy,
                           const LassoOptions& options = {}, int threads = 1);
LassoFit fit_all_equations(const DesignMatrices& design, const GramCache& gram, const PenaltyStrategy& strategy,
                           const LassoOptions& options = {}, int threads = 1);

void to_json(nlohmann::json& j, const LassoFit& fit);

struct OracleFit {
  Matrix beta;
  std::vector<char> rank_deficient;  // per equation: min-norm solution used
};

/// Per-equation least squares restricted to the given supports (0-based
/// column indices), zero elsewhere.
OracleFit oracle_fit(const DesignMatrices& design, const std::vector<std::vector<int>>& supports);

/// Supports of the columns of a stacked coefficient matrix.
std::vector<std::vector<int>> supports_of(const Matrix& beta);

/// One-step forecast y_hat_{T+1} = sum_k A_k y_{T+1-k} from a stacked np x n
/// coefficient matrix and the trailing p rows of data.
Vector forecast(const Matrix& beta, const Matrix& data, int p);

/// Same forecast from unstacked lag matrices.
Vector forecast(const VarSpec& spec, const Matrix& data);

/// Runs the given worker over indices [0, count) on up to `threads` threads.
/// Each index is processed exactly once; the caller owns result placement.
void parallel_for(int count, int threads, const std::function<void(int)>& work);

}  // namespace hdvar
