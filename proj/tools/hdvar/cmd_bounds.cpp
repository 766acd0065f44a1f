#include "commands.hpp"

#include <hdvar/lasso.hpp>
#include <hdvar/theory_bounds.hpp>

#include <cmath>
#include <memory>

namespace hdvar::cli {

namespace {

nlohmann::json num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

struct BoundsOptions {
  int T = 0;
  int n = 0;
  int p = 1;
  double epsilon = 3.0;
  double tau = 1.0;
  double alpha = 2.0;
  double a = 0.0;
  double b = 0.0;
  double x = 0.0;
  double M = 0.0;
  double c = 1.0;
  double moment = 1.0;
  double lambda = 0.0;
  double r_q = 0.0;
  double q = 0.0;
  double sigma_sq = 1.0;
  double beta_l1 = 0.0;
  GramConstants constants;
  std::string out;
};

void emit(const nlohmann::json& j, const BoundsOptions& o, RunContext& ctx) {
  write_json(j, o.out);
  if (!o.out.empty() && o.out != "-") ctx.manifest->add_output(o.out);
  ctx.manifest_path = manifest_next_to(o.out);
}

}  // namespace

void add_bounds(CLI::App& root, Runner& runner) {
  auto o = std::make_shared<BoundsOptions>();
  auto* app = root.add_subcommand("bounds", "Evaluate the closed-form penalties, probability bounds and error bounds");
  app->require_subcommand(1);
  app->add_option("--out", o->out, "Result JSON path (default stdout)");

  auto set = [&runner](CLI::App* sub, std::function<nlohmann::json()> compute, std::shared_ptr<BoundsOptions> opts) {
    sub->callback([&runner, compute, opts] {
      runner = [compute, opts](RunContext& ctx) { emit(compute(), *opts, ctx); };
    });
  };

  {
    auto* s = app->add_subcommand("lambda", "Theoretical penalty tau* (eps + log(T n^2 p))^{2/alpha} sqrt((eps + log(n^2 p)) / T)");
    s->add_option("--T", o->T, "Effective sample size")->required()->check(CLI::PositiveNumber);
    s->add_option("--n", o->n, "Series")->required()->check(CLI::PositiveNumber);
    s->add_option("--p", o->p, "Lag order")->required()->check(CLI::PositiveNumber);
    s->add_option("--epsilon", o->epsilon, "epsilon")->check(CLI::PositiveNumber)->capture_default_str();
    s->add_option("--tau-star", o->tau, "tau*")->check(CLI::PositiveNumber)->capture_default_str();
    s->add_option("--alpha", o->alpha, "Tail exponent")->check(CLI::PositiveNumber)->capture_default_str();
    set(s, [o] {
      const double lam = theoretical_lambda(o->T, o->n, o->p, o->epsilon, o->tau, o->alpha);
      return nlohmann::json{{"lambda", lam}, {"pi1", pi1(o->epsilon)}};
    }, o);
  }
  {
    auto* s = app->add_subcommand("pi1", "Deviation bound failure probability 10 exp(-eps)");
    s->add_option("--epsilon", o->epsilon, "epsilon")->required()->check(CLI::PositiveNumber);
    set(s, [o] { return nlohmann::json{{"pi1", pi1(o->epsilon)}}; }, o);
  }
  {
    auto* s = app->add_subcommand("pi2", "Gram concentration failure probability and its side conditions");
    s->add_option("--a", o->a, "Deviation level")->required()->check(CLI::PositiveNumber);
    s->add_option("--T", o->T, "Sample size")->required()->check(CLI::PositiveNumber);
    s->add_option("--n", o->n, "Series")->required()->check(CLI::PositiveNumber);
    s->add_option("--p", o->p, "Lag order")->required()->check(CLI::PositiveNumber);
    s->add_option("--b1", o->constants.b1, "b1")->capture_default_str();
    s->add_option("--b8", o->constants.b8, "b8")->capture_default_str();
    s->add_option("--c-phi", o->constants.c_phi, "VMA tail decay rate c_phi")->required()->check(CLI::PositiveNumber);
    s->add_option("--gamma1", o->constants.gamma1, "gamma1")->capture_default_str();
    s->add_option("--a2", o->constants.a2, "Conditional covariance decay a2 (inf for i.i.d.)")->required();
    s->add_option("--gamma2", o->constants.gamma2, "gamma2")->capture_default_str();
    s->add_option("--xi", o->constants.xi, "xi")->capture_default_str();
    s->add_option("--tau", o->constants.tau, "Sub-Weibull scale")->capture_default_str();
    s->add_option("--alpha", o->constants.alpha, "Sub-Weibull exponent")->capture_default_str();
    set(s, [o] {
      const GramSideConditions side = gram_side_conditions(o->a, o->n, o->p, o->T, o->constants);
      return nlohmann::json{{"pi2", num(pi2(o->a, o->n, o->p, o->T, o->constants))},
                            {"p_limit", num(side.p_limit)},
                            {"p_ok", side.p_ok},
                            {"a_min", num(side.a_min)},
                            {"a_ok", side.a_ok},
                            {"constants", o->constants}};
    }, o);
  }
  {
    auto* s = app->add_subcommand("martingale", "Tail bound for a sum of martingale differences; minimized over M when --M is absent");
    s->add_option("--n", o->n, "Dimension")->required()->check(CLI::PositiveNumber);
    s->add_option("--T", o->T, "Length")->required()->check(CLI::PositiveNumber);
    s->add_option("--x", o->x, "Deviation per observation")->required()->check(CLI::PositiveNumber);
    s->add_option("--M", o->M, "Truncation level")->check(CLI::PositiveNumber);
    s->add_option("--alpha", o->alpha, "Sub-Weibull exponent")->capture_default_str();
    s->add_option("--tau", o->tau, "Sub-Weibull scale")->capture_default_str();
    s->add_option("--epsilon", o->epsilon, "epsilon for the simplified corollary form")->capture_default_str();
    set(s, [o] {
      nlohmann::json j;
      if (o->M > 0.0) {
        j["bound"] = martingale_tail_bound(o->n, o->T, o->x, o->M, o->alpha, o->tau);
        j["M"] = o->M;
      } else {
        const MartingaleBound best = martingale_tail_bound_best(o->n, o->T, o->x, o->alpha, o->tau);
        j["bound"] = best.value;
        j["M"] = best.M;
      }
      const MartingaleCorollary cor = martingale_corollary(o->n, o->T, o->x, o->epsilon, o->alpha, o->tau);
      j["corollary"] = {{"premises_hold", cor.premises_hold},
                        {"x_threshold", num(cor.x_threshold)},
                        {"bound", cor.bound},
                        {"violation", cor.violation}};
      return j;
    }, o);
  }
  {
    auto* s = app->add_subcommand("weibull", "Stretched-exponential tail sums: closed-form bounds and exact values");
    s->add_option("--a", o->a, "Exponent a")->required()->check(CLI::PositiveNumber);
    s->add_option("--b", o->b, "Rate b")->required()->check(CLI::PositiveNumber);
    s->add_option("--n", o->n, "Starting index")->required()->check(CLI::PositiveNumber);
    set(s, [o] {
      return nlohmann::json{{"single", {{"bound", num(weibull_single_sum_bound(o->a, o->b, o->n))},
                                        {"exact", num(weibull_single_sum_exact(o->a, o->b, o->n))}}},
                            {"double", {{"bound", num(weibull_double_sum_bound(o->a, o->b, o->n))},
                                        {"exact", num(weibull_double_sum_exact(o->a, o->b, o->n))}}}};
    }, o);
  }
  {
    auto* s = app->add_subcommand("truncated-moment", "E[X^p 1{X >= M}] for P(X >= u) = exp(-c u^alpha) with its sandwich");
    s->add_option("--moment", o->moment, "Moment order p")->required()->check(CLI::PositiveNumber);
    s->add_option("--alpha", o->alpha, "Tail exponent")->required()->check(CLI::PositiveNumber);
    s->add_option("--c", o->c, "Tail rate")->required()->check(CLI::PositiveNumber);
    s->add_option("--M", o->M, "Truncation level")->required()->check(CLI::PositiveNumber);
    set(s, [o] {
      const TruncatedMoment t = truncated_moment(o->moment, o->alpha, o->c, o->M);
      return nlohmann::json{{"lower", t.lower}, {"exact", t.exact}, {"upper", t.upper},
                            {"lower_holds", t.lower_holds()}, {"upper_holds", t.upper_holds()}};
    }, o);
  }
  {
    auto* s = app->add_subcommand("error", "l2 and prediction error bounds of the lasso on the DB and RSC events");
    s->add_option("--lambda", o->lambda, "Penalty")->required()->check(CLI::PositiveNumber);
    s->add_option("--r-q", o->r_q, "Weak sparsity radius R_q")->required()->check(CLI::NonNegativeNumber);
    s->add_option("--q", o->q, "Sparsity exponent in [0, 1)")->check(CLI::Range(0.0, 0.999999))->capture_default_str();
    s->add_option("--sigma-sq", o->sigma_sq, "Lower bound on the smallest eigenvalue of the population Gram")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    s->add_option("--beta-l1", o->beta_l1, "|beta*|_1 for the prediction bound")->check(CLI::NonNegativeNumber);
    set(s, [o] {
      return nlohmann::json{{"l2_bound", l2_error_bound(o->lambda, o->r_q, o->q, o->sigma_sq)},
                            {"prediction_bound", prediction_error_bound(o->lambda, o->beta_l1)}};
    }, o);
  }
}

}  // namespace hdvar::cli
