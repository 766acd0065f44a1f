#include <hdvar/experiment.hpp>
#include <hdvar/version.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace hdvar {

namespace {

nlohmann::json num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

nlohmann::json mean_se_json(const MeanSe& m) { return {{"mean", num(m.mean)}, {"stderr", num(m.se)}}; }

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  return out;
}

std::string fmt(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void prepare_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create output directory '" + dir + "': " + ec.message());
}

}  // namespace

void to_json(nlohmann::json& j, const CellStats& s) {
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& f : s.failures)
    failures.push_back({{"replication", f.replication}, {"seed", f.seed}, {"message", f.message}});
  nlohmann::json reps = nlohmann::json::array();
  for (const auto& r : s.replications) {
    nlohmann::json e = {{"ok", r.ok}, {"seed", r.seed}};
    if (r.ok) {
      e["sq_error"] = r.sq_error;
      e["msfe_lasso"] = r.msfe_lasso;
      e["msfe_oracle_ols"] = r.msfe_oracle_ols;
      e["msfe_oracle_true"] = r.msfe_oracle_true;
      e["mean_df"] = r.mean_df;
      e["max_kkt"] = r.max_kkt;
      e["db_equation_rate"] = r.db_equation_rate;
      e["db_joint"] = r.db_joint;
      e["rsc_hypothesis"] = r.rsc_hypothesis < 0 ? nlohmann::json(nullptr) : nlohmann::json(r.rsc_hypothesis == 1);
    } else {
      e["error"] = r.error;
    }
    reps.push_back(std::move(e));
  }
  j = {{"T", s.T},
       {"c", s.c},
       {"n", s.n},
       {"p", s.p},
       {"requested", s.requested},
       {"completed", s.completed},
       {"failures", failures},
       {"panel_a",
        {{"mse", mean_se_json(s.mse)},
         {"mse_per_parameter", mean_se_json(s.mse_per_parameter)},
         {"mse_total", mean_se_json(s.mse_total)},
         {"mse_per_T", mean_se_json(s.mse_per_T)}}},
       {"panel_b",
        {{"msfe_ratio", mean_se_json(s.msfe_ratio)},
         {"msfe_ratio_ols_on_support", mean_se_json(s.msfe_ratio_ols)},
         {"msfe_ratio_true_params", mean_se_json(s.msfe_ratio_true)},
         {"msfe_lasso", num(s.msfe_lasso)},
         {"msfe_oracle", num(s.msfe_oracle)}}},
       {"diagnostics",
        {{"mean_df", s.mean_df},
         {"max_kkt", s.max_kkt},
         {"nonconverged", s.nonconverged},
         {"db_equation_frequency", s.db_equation_frequency},
         {"db_joint_frequency", s.db_joint_frequency},
         {"rsc_hypothesis_frequency", s.rsc_hypothesis_frequency < 0 ? nlohmann::json(nullptr)
                                                                    : nlohmann::json(s.rsc_hypothesis_frequency)},
         {"oracle_rank_deficient", s.oracle_rank_deficient}}},
       {"replications", reps}};
}

void to_json(nlohmann::json& j, const ExperimentReport& r) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : r.cells) cells.push_back(c);
  j = {{"version", r.version}, {"config_hash", to_hex(r.config_hash)}, {"config", r.config}, {"cells", cells}};
}

void write_experiment_outputs(const ExperimentReport& report, const std::string& dir) {
  prepare_dir(dir);
  const std::filesystem::path base(dir);
  const std::string hash = to_hex(report.config_hash);
  {
    auto out = open_out(base / "report.json");
    out << nlohmann::json(report).dump(2) << '\n';
  }
  {
    auto out = open_out(base / "table1.csv");
    out << "# version=" << report.version << " config_hash=" << hash << '\n';
    out << "panel,T,c,value,stderr,n_reps\n";
    for (const auto& s : report.cells)
      out << "a," << s.T << ',' << s.c << ',' << fmt(s.mse.mean) << ',' << fmt(s.mse.se) << ',' << s.completed << '\n';
    for (const auto& s : report.cells)
      out << "b," << s.T << ',' << s.c << ',' << fmt(s.msfe_ratio.mean) << ',' << fmt(s.msfe_ratio.se) << ','
          << s.completed << '\n';
  }
  {
    auto out = open_out(base / "diagnostics.csv");
    out << "# version=" << report.version << " config_hash=" << hash << '\n';
    out << "T,c,n,requested,completed,failures,mse_per_parameter,mse_total,mse_per_T,msfe_ratio_ols,"
           "msfe_ratio_true,mean_df,max_kkt,nonconverged,db_equation_frequency,db_joint_frequency,"
           "rsc_hypothesis_frequency\n";
    for (const auto& s : report.cells)
      out << s.T << ',' << s.c << ',' << s.n << ',' << s.requested << ',' << s.completed << ','
          << s.failures.size() << ',' << fmt(s.mse_per_parameter.mean) << ',' << fmt(s.mse_total.mean) << ','
          << fmt(s.mse_per_T.mean) << ',' << fmt(s.msfe_ratio_ols.mean) << ',' << fmt(s.msfe_ratio_true.mean) << ','
          << fmt(s.mean_df) << ',' << fmt(s.max_kkt) << ',' << s.nonconverged << ',' << fmt(s.db_equation_frequency)
          << ',' << fmt(s.db_joint_frequency) << ','
          << (s.rsc_hypothesis_frequency < 0 ? std::string("na") : fmt(s.rsc_hypothesis_frequency)) << '\n';
  }
}

void to_json(nlohmann::json& j, const TheoryReport& r) {
  nlohmann::json gram = nlohmann::json::array();
  for (const auto& g : r.gram_points)
    gram.push_back({{"a", g.a},
                    {"exceed_frequency", g.exceed_frequency},
                    {"pi2", num(g.pi2)},
                    {"p_limit", num(g.side.p_limit)},
                    {"p_ok", g.side.p_ok},
                    {"a_min", num(g.side.a_min)},
                    {"a_ok", g.side.a_ok}});
  nlohmann::json reps = nlohmann::json::array();
  for (const auto& x : r.replications) {
    nlohmann::json e = {{"seed", x.seed}, {"ok", x.ok}};
    if (!x.ok) {
      e["error"] = x.error;
    } else {
      e["max_statistic"] = x.max_statistic;
      e["db_joint"] = x.db_joint;
      e["gram_deviation"] = x.gram_deviation;
      e["rsc_hypothesis"] = x.rsc_hypothesis;
      e["rsc_violations"] = x.rsc_violations;
      e["rsc_min_ratio"] = num(x.rsc_min_ratio);
      e["l2_max"] = x.l2_max;
      e["prediction_max"] = x.prediction_max;
      e["l2_violations"] = x.l2_violations;
      e["prediction_violations"] = x.prediction_violations;
    }
    reps.push_back(std::move(e));
  }
  nlohmann::json constants;
  to_json(constants, r.constants);
  j = {{"version", kVersion},
       {"config_hash", to_hex(config_hash(r.config_json))},
       {"config", r.config_json},
       {"lambda", r.lambda},
       {"pi1", r.pi1},
       {"sigma_gamma_sq", r.sigma_gamma_sq},
       {"r_q", r.r_q},
       {"eta", r.eta},
       {"l2_bound", num(r.l2_bound)},
       {"prediction_bound", num(r.prediction_bound)},
       {"rsc_threshold", num(r.rsc_threshold)},
       {"constants", constants},
       {"completed", r.completed},
       {"db_failures", r.db_failures},
       {"db_failure_frequency", r.db_failure_frequency},
       {"hypothesis_count", r.hypothesis_count},
       {"qualifying", r.qualifying},
       {"l2_violations_qualifying", r.l2_violations_qualifying},
       {"prediction_violations_qualifying", r.prediction_violations_qualifying},
       {"prediction_violations_db", r.prediction_violations_db},
       {"rsc_violations_under_hypothesis", r.rsc_violations_under_hypothesis},
       {"rsc_cone_failures", r.rsc_cone_failures},
       {"gram", gram},
       {"replications", reps}};
}

void write_theory_outputs(const TheoryReport& report, const std::string& dir) {
  prepare_dir(dir);
  const std::filesystem::path base(dir);
  {
    auto out = open_out(base / "theory.json");
    out << nlohmann::json(report).dump(2) << '\n';
  }
  {
    auto out = open_out(base / "theory_replications.csv");
    out << "replication,seed,ok,max_statistic,db_joint,gram_deviation,rsc_hypothesis,rsc_violations,l2_max,"
           "prediction_max,l2_violations,prediction_violations\n";
    for (std::size_t k = 0; k < report.replications.size(); ++k) {
      const auto& x = report.replications[k];
      out << k << ',' << x.seed << ',' << x.ok << ',' << fmt(x.max_statistic) << ',' << x.db_joint << ','
          << fmt(x.gram_deviation) << ',' << x.rsc_hypothesis << ',' << x.rsc_violations << ',' << fmt(x.l2_max)
          << ',' << fmt(x.prediction_max) << ',' << x.l2_violations << ',' << x.prediction_violations << '\n';
    }
  }
  auto out = open_out(base / "theory_summary.csv");
  out << "# version=" << kVersion << " config_hash=" << to_hex(config_hash(report.config_json)) << '\n';
  out << "quantity,value,reference\n";
  out << "db_failure_frequency," << fmt(report.db_failure_frequency) << ',' << fmt(report.pi1) << '\n';
  for (const auto& g : report.gram_points)
    out << "gram_exceed_frequency_a=" << fmt(g.a) << ',' << fmt(g.exceed_frequency) << ',' << fmt(g.pi2) << '\n';
  out << "qualifying_replications," << report.qualifying << ',' << report.completed << '\n';
  out << "l2_violations_qualifying," << report.l2_violations_qualifying << ",0\n";
  out << "prediction_violations_qualifying," << report.prediction_violations_qualifying << ",0\n";
  out << "prediction_violations_db," << report.prediction_violations_db << ",0\n";
}

}  // namespace hdvar
