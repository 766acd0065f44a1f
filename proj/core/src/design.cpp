#include <hdvar/lasso.hpp>

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace hdvar {

DesignMatrices build_design(const Matrix& data, int p) {
  require(p >= 1, "build_design: p must be >= 1");
  const auto T = static_cast<int>(data.rows());
  const auto n = static_cast<int>(data.cols());
  require(n >= 1, "build_design: panel has no series");
  require(T > p, "build_design: need T > p, got T = " + std::to_string(T) + ", p = " + std::to_string(p));
  require(data.allFinite(), "build_design: panel contains NaN or infinite values");
  const int rows = T - p;
  DesignMatrices d;
  d.n = n;
  d.p = p;
  d.X.resize(rows, static_cast<Index>(n) * p);
  for (int k = 1; k <= p; ++k) d.X.middleCols(static_cast<Index>(k - 1) * n, n) = data.middleRows(p - k, rows);
  d.Y = data.bottomRows(rows);
  return d;
}

GramCache make_gram_cache(const DesignMatrices& design) {
  require(design.X.allFinite() && design.Y.allFinite(), "lasso: design contains NaN or infinite values");
  const double inv = 1.0 / design.T_eff();
  GramCache g;
  g.T_eff = design.T_eff();
  const Index m = design.X.cols();
  g.G = Matrix::Zero(m, m);
  g.G.selfadjointView<Eigen::Lower>().rankUpdate(design.X.transpose(), inv);
  g.G.triangularView<Eigen::StrictlyUpper>() = g.G.transpose();
  g.C.noalias() = design.X.transpose() * design.Y * inv;
  g.yy = design.Y.colwise().squaredNorm().transpose() * inv;
  return g;
}

OracleFit oracle_fit(const DesignMatrices& design, const std::vector<std::vector<int>>& supports) {
  require(static_cast<int>(supports.size()) == design.n, "oracle_fit: need one support per equation");
  OracleFit out;
  out.beta = Matrix::Zero(design.width(), design.n);
  out.rank_deficient.assign(static_cast<std::size_t>(design.n), 0);
  for (int i = 0; i < design.n; ++i) {
    const auto& s = supports[static_cast<std::size_t>(i)];
    if (s.empty()) continue;
    Matrix xs(design.T_eff(), static_cast<Index>(s.size()));
    for (std::size_t k = 0; k < s.size(); ++k) {
      require(s[k] >= 0 && s[k] < design.width(), "oracle_fit: support index out of range");
      xs.col(static_cast<Index>(k)) = design.X.col(s[k]);
    }
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(xs);
    const Vector b = cod.solve(design.Y.col(i));
    if (cod.rank() < static_cast<Index>(s.size())) out.rank_deficient[static_cast<std::size_t>(i)] = 1;
    for (std::size_t k = 0; k < s.size(); ++k) out.beta(s[k], i) = b[static_cast<Index>(k)];
  }
  return out;
}

std::vector<std::vector<int>> supports_of(const Matrix& beta) {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(beta.cols()));
  for (Index i = 0; i < beta.cols(); ++i)
    for (Index j = 0; j < beta.rows(); ++j)
      if (beta(j, i) != 0.0) out[static_cast<std::size_t>(i)].push_back(static_cast<int>(j));
  return out;
}

Vector forecast(const Matrix& beta, const Matrix& data, int p) {
  require(p >= 1, "forecast: p must be >= 1");
  require(data.rows() >= p, "forecast: need at least p = " + std::to_string(p) + " rows of history");
  const Index n = data.cols();
  require(beta.rows() == n * p && beta.cols() == n, "forecast: coefficient matrix must be np x n");
  const Index T = data.rows();
  Vector x(n * p);
  for (int k = 1; k <= p; ++k) x.segment((k - 1) * n, n) = data.row(T - k).transpose();
  return beta.transpose() * x;
}

Vector forecast(const VarSpec& spec, const Matrix& data) {
  const int p = spec.p();
  require(data.rows() >= p, "forecast: need at least p = " + std::to_string(p) + " rows of history");
  require(data.cols() == spec.n(), "forecast: panel width does not match the VAR");
  const Index T = data.rows();
  Vector y = spec.intercept();
  for (int k = 1; k <= p; ++k) y.noalias() += spec.lag(k) * data.row(T - k).transpose();
  return y;
}

void parallel_for(int count, int threads, const std::function<void(int)>& work) {
  if (count <= 0) return;
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, count);
  if (threads == 1) {
    for (int i = 0; i < count; ++i) work(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex mu;
  int failed_index = count;
  std::exception_ptr failure;
  auto run = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        work(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        // Keep the lowest failing index so the reported error is schedule independent.
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads - 1));
  for (int t = 1; t < threads; ++t) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace hdvar
