#include <hdvar/theory_bounds.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

namespace hdvar {

double DeviationBoundReport::max_statistic() const {
  return statistic.empty() ? 0.0 : *std::max_element(statistic.begin(), statistic.end());
}

Matrix true_innovations(const DesignMatrices& design, const VarSpec& truth) {
  require(truth.n() == design.n, "true_innovations: spec dimension does not match the design");
  require(truth.p() <= design.p, "true_innovations: spec lag order exceeds the design's");
  Matrix b = Matrix::Zero(design.width(), design.n);
  b.topRows(static_cast<Index>(truth.n()) * truth.p()) = truth.stacked();
  Matrix u = design.Y - design.X * b;
  u.rowwise() -= truth.intercept().transpose();
  return u;
}

DeviationBoundReport deviation_bound_check(const DesignMatrices& design, const VarSpec& truth, double lambda) {
  require(lambda >= 0.0, "deviation_bound_check: lambda must be >= 0");
  const Matrix u = true_innovations(design, truth);
  const Matrix score = design.X.transpose() * u * (2.0 / design.T_eff());
  DeviationBoundReport r;
  r.lambda = lambda;
  r.joint = true;
  for (Index i = 0; i < score.cols(); ++i) {
    const double s = score.col(i).lpNorm<Eigen::Infinity>();
    r.statistic.push_back(s);
    const bool ok = lambda >= s;
    r.holds.push_back(ok ? 1 : 0);
    r.joint = r.joint && ok;
  }
  return r;
}

double pi1(double epsilon) { return 10.0 * std::exp(-epsilon); }

void to_json(nlohmann::json& j, const DeviationBoundReport& r) {
  std::vector<bool> holds(r.holds.begin(), r.holds.end());
  j = {{"lambda", r.lambda}, {"statistic", r.statistic}, {"holds", holds}, {"joint", r.joint}};
}

}  // namespace hdvar
