#include <hdvar/theory_bounds.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace hdvar {

namespace {

struct Split {
  double on = 0.0;   // |D_S|_1
  double off = 0.0;  // |D_{S^c}|_1
};

Split l1_split(const Vector& v, const std::vector<char>& in_s) {
  Split s;
  for (Index j = 0; j < v.size(); ++j) (in_s[static_cast<std::size_t>(j)] ? s.on : s.off) += std::abs(v[j]);
  return s;
}

std::vector<char> membership(Index dim, const std::vector<int>& support) {
  std::vector<char> in_s(static_cast<std::size_t>(dim), 0);
  for (const int j : support) in_s[static_cast<std::size_t>(j)] = 1;
  return in_s;
}

// Scales the off-support part so that |D_{S^c}|_1 = u * (3 |D_S|_1 + 4 |beta*_{S^c}|_1).
void fit_off_support(Vector& d, const std::vector<char>& in_s, double budget_beta, double u) {
  const Split s = l1_split(d, in_s);
  const double budget = 3.0 * s.on + 4.0 * budget_beta;
  if (s.off == 0.0) return;
  const double scale = budget > 0.0 ? u * budget / s.off : 0.0;
  for (Index j = 0; j < d.size(); ++j)
    if (!in_s[static_cast<std::size_t>(j)]) d[j] *= scale;
}

}  // namespace

bool in_cone(const Vector& delta, const Vector& beta_star, const std::vector<int>& support) {
  const auto in_s = membership(delta.size(), support);
  const Split d = l1_split(delta, in_s);
  const Split b = l1_split(beta_star, in_s);
  const double rhs = 3.0 * d.on + 4.0 * b.off;
  return d.off <= rhs * (1.0 + 1e-12) + 1e-300;
}

RscReport rsc_check(const Matrix& gamma_T, const RscInputs& in, int samples, std::uint64_t seed, const Matrix* gamma) {
  const Index dim = in.beta_star.size();
  require(samples >= 1, "rsc_check: samples must be >= 1");
  require(gamma_T.rows() == dim && gamma_T.cols() == dim, "rsc_check: Gram dimension does not match beta*");
  require(in.q >= 0.0 && in.q < 1.0, "rsc_check: q must be in [0, 1)");
  require(in.eta >= 0.0 && in.sigma_sq > 0.0, "rsc_check: need eta >= 0 and sigma^2 > 0");
  require(!in.error_direction || in.error_direction->size() == dim, "rsc_check: error direction has wrong length");

  RscReport r;
  for (Index j = 0; j < dim; ++j)
    if (std::abs(in.beta_star[j]) > in.eta) r.support.push_back(static_cast<int>(j));
  const auto in_s = membership(dim, r.support);
  const double beta_off = l1_split(in.beta_star, in_s).off;
  const double eta_q = in.q == 0.0 ? 1.0 : std::pow(in.eta, in.q);
  r.threshold = in.r_q > 0.0 ? in.sigma_sq * eta_q / (64.0 * in.r_q) : std::numeric_limits<double>::infinity();
  if (gamma) {
    r.deviation = gram_deviation(gamma_T, *gamma);
    r.hypothesis_holds = *r.deviation <= r.threshold;
  }
  const double offset = 0.5 * in.sigma_sq * in.r_q * std::pow(in.eta, 2.0 - in.q);

  std::vector<int> off_support;
  for (Index j = 0; j < dim; ++j)
    if (!in_s[static_cast<std::size_t>(j)]) off_support.push_back(static_cast<int>(j));

  Rng rng = make_stream(seed, Stream::kAuxiliary);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto log_scale = [&] { return std::pow(10.0, -3.0 + 4.0 * unit(rng)); };

  r.min_slack = std::numeric_limits<double>::infinity();
  r.min_ratio = std::numeric_limits<double>::infinity();
  Vector d(dim);
  for (int k = 0; k < samples; ++k) {
    d.setZero();
    switch (k % 3) {
      case 0:  // sparse on S; off S only when S is empty and beta* carries mass
        if (!r.support.empty()) {
          for (const int j : r.support) d[j] = normal(rng);
        } else if (!off_support.empty() && beta_off > 0.0) {
          const int j = off_support[static_cast<std::size_t>(unit(rng) * off_support.size()) % off_support.size()];
          d[j] = normal(rng);
          fit_off_support(d, in_s, beta_off, unit(rng));
        }
        break;
      case 1:  // dense off S
        for (Index j = 0; j < dim; ++j) d[j] = normal(rng);
        fit_off_support(d, in_s, beta_off, unit(rng));
        break;
      default:  // error-shaped, or the l1/l2-extreme corner of the cone
        if (in.error_direction) {
          d = *in.error_direction;
          const Split s = l1_split(d, in_s);
          if (s.off > 3.0 * s.on + 4.0 * beta_off) fit_off_support(d, in_s, beta_off, 1.0);
        } else {
          for (const int j : r.support) d[j] = unit(rng) < 0.5 ? -1.0 : 1.0;
          for (const int j : off_support) d[j] = unit(rng) < 0.5 ? -1.0 : 1.0;
          fit_off_support(d, in_s, beta_off, 1.0);
        }
        break;
    }
    const double norm = d.norm();
    if (norm == 0.0) {
      ++r.degenerate;
      ++r.samples;
      r.min_slack = std::min(r.min_slack, offset);
      continue;
    }
    // The cone is not scale invariant when beta*_{S^c} != 0; rescaling keeps
    // membership only when shrinking, so scale the on-support part first.
    const double scale = log_scale() / norm;
    d *= scale;
    if (!in_cone(d, in.beta_star, r.support)) fit_off_support(d, in_s, beta_off, 1.0);
    if (!in_cone(d, in.beta_star, r.support)) ++r.cone_failures;
    ++r.samples;
    const double quad = d.dot(gamma_T * d);
    const double half = 0.5 * in.sigma_sq * d.squaredNorm();
    const double slack = quad - half + offset;
    r.min_slack = std::min(r.min_slack, slack);
    r.min_ratio = std::min(r.min_ratio, (quad + offset) / half);
    if (slack < 0.0) ++r.violations;
  }
  return r;
}

void to_json(nlohmann::json& j, const RscReport& r) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  j = {{"threshold", num(r.threshold)},
       {"deviation_max", r.deviation ? nlohmann::json(*r.deviation) : nlohmann::json(nullptr)},
       {"hypothesis_holds", r.hypothesis_holds},
       {"samples", r.samples},
       {"degenerate", r.degenerate},
       {"cone_failures", r.cone_failures},
       {"violations", r.violations},
       {"min_slack", num(r.min_slack)},
       {"min_ratio", num(r.min_ratio)},
       {"support", r.support}};
}

}  // namespace hdvar
