#include "napkin/cli.hpp"

#include "napkin/confounder.hpp"
#include "napkin/error.hpp"
#include "napkin/study.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace napkin {

namespace {

using nlohmann::json;

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json result_object(const EstimateResult& r) {
  const auto& d = r.diagnostics;
  json j{{"estimand", r.estimand == Estimand::ate ? "ate" : "psi"},
         {"estimator", to_string(r.kind)},
         {"weight", r.weight},
         {"point", finite_or_null(r.point)},
         {"se", finite_or_null(r.se)},
         {"ci", json::array({finite_or_null(r.ci_lo), finite_or_null(r.ci_hi)})},
         {"no_inference", r.no_inference},
         {"warnings", r.warnings},
         {"diagnostics",
          {{"across_iterations", d.across_iterations},
           {"within_iterations", d.within_iterations},
           {"final_score_Y", finite_or_null(d.final_score_Y)},
           {"final_score_X", finite_or_null(d.final_score_X)},
           {"converged", d.converged},
           {"clipped_count", d.clipped_count},
           {"c_stop", finite_or_null(d.c_stop)}}}};
  if (r.estimand == Estimand::psi) j["x0"] = r.x0;
  if (!r.alpha.empty()) j["alpha"] = r.alpha;
  return j;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail_validation("cannot write '" + path + "'");
  out << content;
}

EstimateResult confounder_result(const Dataset& data, const NuisanceSet& Q, const RunConfig& cfg, EstimatorKind kind,
                                 int x0) {
  const double z_star = std::get<FixedLevel>(*cfg.weight).z_star;
  const KappaCModels kc = fit_kappa_c(data, Q, z_star, x0, cfg.kappa_c);
  if (kind == EstimatorKind::plugin) {
    EstimateResult r;
    r.kind = EstimatorKind::plugin;
    r.x0 = x0;
    r.weight = describe(*cfg.weight);
    r.point = psi_plugin_c(data, Q, kc);
    r.ci_lo = r.ci_hi = r.point;
    r.no_inference = true;
    return r;
  }
  EstimateResult r = estimate_onestep_c(data, Q, kc, z_star, x0);
  r.kind = kind;
  return r;
}

EstimateResult run_one(const Dataset& data, const NuisanceSet& Q, const RunConfig& cfg, EstimatorKind kind, int x0) {
  if (data.has_confounders()) {
    if (!cfg.weight || !is_fixed_level(*cfg.weight)) {
      fail_validation("with confounders C the weight must be a fixed level");
    }
    if (kind == EstimatorKind::tmle || kind == EstimatorKind::optimal) {
      fail_validation("with confounders C only plugin, esteq and onestep are available");
    }
    return confounder_result(data, Q, cfg, kind, x0);
  }
  if (kind == EstimatorKind::optimal) {
    return estimate_optimal(data, Q, x0, cfg.optimal_base, cfg.optimal_levels, cfg.stopping);
  }
  return estimate(data, Q, kind, *cfg.weight, x0, cfg.stopping);
}

unsigned thread_count(int flag) {
  if (flag > 0) return static_cast<unsigned>(flag);
  if (const char* env = std::getenv("NAPKIN_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    fail_validation("NAPKIN_THREADS must be a positive integer");
  }
  return 1;
}

Dataset load_with(const std::string& data_path, const RunConfig& cfg) { return load_csv(data_path, cfg.roles); }

}  // namespace

TreatmentTarget parse_x0(const std::string& text) {
  if (text == "0") return TreatmentTarget::zero;
  if (text == "1") return TreatmentTarget::one;
  if (text == "ate") return TreatmentTarget::ate;
  fail_validation("--x0 must be 0, 1 or ate");
}

std::vector<EstimateResult> run_configured(const Dataset& data, const RunConfig& cfg, TreatmentTarget target) {
  const NuisanceSet Q = fit_nuisance_set(data, cfg.nuisance);
  std::vector<EstimateResult> out;
  for (EstimatorKind kind : cfg.estimators) {
    EstimateResult r;
    if (target == TreatmentTarget::ate) {
      if (kind == EstimatorKind::optimal && !data.has_confounders()) {
        r = estimate_optimal_ate(data, Q, cfg.optimal_base, cfg.optimal_levels, cfg.stopping);
      } else {
        r = ate(run_one(data, Q, cfg, kind, 1), run_one(data, Q, cfg, kind, 0));
      }
    } else {
      r = run_one(data, Q, cfg, kind, target == TreatmentTarget::one ? 1 : 0);
    }
    r.warnings.insert(r.warnings.end(), Q.warnings().begin(), Q.warnings().end());
    out.push_back(std::move(r));
  }
  return out;
}

std::string result_json(const EstimateResult& result) { return result_object(result).dump(2) + "\n"; }

std::string verma_json(const VermaReport& report) {
  json probes = json::array();
  for (const auto& p : report.probes) {
    probes.push_back({{"label", p.label}, {"psi", finite_or_null(p.psi)}, {"se", finite_or_null(p.se)}});
  }
  json j{{"probes", probes},
         {"max_standardized_difference", finite_or_null(report.max_standardized_difference)},
         {"pair", json::array({report.first, report.second})}};
  return j.dump(2) + "\n";
}

std::vector<WeightSpec> parse_probes(const std::string& text) {
  std::vector<WeightSpec> probes;
  std::stringstream ss(text);
  std::string item;
  auto to_double = [](const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0' || !std::isfinite(v)) fail_validation("bad probe value '" + s + "'");
    return v;
  };
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      probes.push_back(FixedLevel{to_double(item)});
    } else {
      const Density d = Density::uniform(to_double(item.substr(0, colon)), to_double(item.substr(colon + 1)));
      check_weightspec(d);
      probes.push_back(d);
    }
  }
  if (probes.size() < 2) fail_validation("check-verma needs at least two probes");
  return probes;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Napkin-graph ATE estimation"};
  app.require_subcommand(1);

  std::string data_path, config_path, out_path, x0_text = "ate";
  auto* est = app.add_subcommand("estimate", "Estimate psi(x0) or the ATE from a CSV file");
  est->add_option("--data", data_path, "CSV file")->required();
  est->add_option("--config", config_path, "JSON run configuration")->required();
  est->add_option("--x0", x0_text, "Treatment level 0, 1 or ate");
  est->add_option("--out", out_path, "Result JSON path (stdout when omitted)");

  std::string scenario_id, csv_path;
  std::size_t n = 0, reps = 0;
  std::uint64_t seed = 0;
  int threads = 0;
  bool with_points = false;
  auto* sim = app.add_subcommand("simulate", "Run a Monte Carlo study");
  sim->add_option("--scenario", scenario_id, "Scenario id")->required();
  sim->add_option("--n", n, "Sample size");
  sim->add_option("--reps", reps, "Replicates");
  sim->add_option("--seed", seed, "Study seed")->required();
  sim->add_option("--threads", threads, "Worker threads (default NAPKIN_THREADS or 1)");
  sim->add_option("--out", out_path, "Report JSON path");
  sim->add_option("--csv", csv_path, "Flat CSV table path");
  sim->add_flag("--points", with_points, "Include per-replicate estimates in the JSON");

  std::string probes_text, estimator_name = "plugin", verma_x0 = "1";
  auto* verma = app.add_subcommand("check-verma", "Compare psi(z) across probes");
  verma->add_option("--data", data_path, "CSV file")->required();
  verma->add_option("--config", config_path, "JSON run configuration")->required();
  verma->add_option("--probes", probes_text, "Levels '0,1' or windows 'a:b,c:d'")->required();
  verma->add_option("--x0", verma_x0, "Treatment level 0 or 1");
  verma->add_option("--estimator", estimator_name, "plugin, esteq, onestep or tmle");
  verma->add_option("--out", out_path, "Report JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*est) {
      const TreatmentTarget target = parse_x0(x0_text);
      const RunConfig cfg = load_config(config_path);
      const Dataset data = load_with(data_path, cfg);
      const auto results = run_configured(data, cfg, target);
      std::string text;
      if (results.size() == 1) {
        text = result_json(results.front());
      } else {
        json arr = json::array();
        for (const auto& r : results) arr.push_back(result_object(r));
        text = arr.dump(2) + "\n";
      }
      if (out_path.empty()) {
        out << text;
      } else {
        write_file(out_path, text);
      }
      return 0;
    }
    if (*sim) {
      Scenario scenario = default_scenario(scenario_id);
      if (n > 0) scenario.n = n;
      if (reps > 0) scenario.reps = reps;
      scenario.seed = seed;
      const StudyReport report = run_study(scenario, thread_count(threads));
      if (!out_path.empty()) write_file(out_path, report_json(report, with_points));
      if (!csv_path.empty()) write_file(csv_path, report_csv(report));
      out << report_table(report);
      return 0;
    }
    if (*verma) {
      const RunConfig cfg = load_config(config_path);
      const auto probes = parse_probes(probes_text);
      if (verma_x0 != "0" && verma_x0 != "1") fail_validation("--x0 must be 0 or 1");
      const EstimatorKind kind = parse_estimator_kind(estimator_name);
      if (kind == EstimatorKind::optimal) fail_validation("check-verma does not take the optimal estimator");
      const Dataset data = load_with(data_path, cfg);
      const NuisanceSet Q = fit_nuisance_set(data, cfg.nuisance);
      const VermaReport report = verma_diagnostic(data, Q, verma_x0 == "1" ? 1 : 0, probes, kind, cfg.stopping);
      char buf[160];
      for (const auto& p : report.probes) {
        std::snprintf(buf, sizeof buf, "%-24s psi=%.6f  se=%.6f\n", p.label.c_str(), p.psi, p.se);
        out << buf;
      }
      std::snprintf(buf, sizeof buf, "max standardized difference %.4f (%s vs %s)\n",
                    report.max_standardized_difference, report.probes[report.first].label.c_str(),
                    report.probes[report.second].label.c_str());
      out << buf;
      if (!out_path.empty()) write_file(out_path, verma_json(report));
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace napkin
