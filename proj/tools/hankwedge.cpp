#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "hankwedge/csv.hpp"
#include "hankwedge/experiments.hpp"
#include "hankwedge/solver.hpp"
#include "hankwedge/suffstats.hpp"

namespace fs = std::filesystem;
using namespace hankwedge;
namespace sv = hankwedge::solver;
namespace st = hankwedge::stats;

namespace {

enum ExitCode { kOk = 0, kValidation = 2, kIo = 3, kSolver = 4 };

int g_log_level = 2;  // 0 error, 1 warn, 2 info, 3 debug

void log_at(int level, const char* tag, const std::string& msg) {
  if (level <= g_log_level) std::cerr << "[" << tag << "] " << msg << "\n";
}
void log_error(const std::string& m) { log_at(0, "error", m); }
void log_warn(const std::string& m) { log_at(1, "warn", m); }
void log_info(const std::string& m) { log_at(2, "info", m); }

st::PriceChange parse_dp(const std::string& spec) {
  st::PriceChange dp;
  std::stringstream ss(spec);
  std::string item;
  bool any = false;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw CalibrationError("malformed --dp entry '" + item +
                             "' (expected item=value)");
    const std::string key = item.substr(0, eq);
    double value = 0.0;
    try {
      value = std::stod(item.substr(eq + 1));
    } catch (...) {
      throw CalibrationError("malformed --dp value in '" + item + "'");
    }
    if (key == "e")
      dp.e = value;
    else if (key == "d")
      dp.d = value;
    else if (key == "s")
      dp.s = value;
    else
      throw CalibrationError("unknown --dp item '" + key +
                             "' (expected e, d or s)");
    any = true;
  }
  if (!any) throw CalibrationError("empty --dp spec");
  return dp;
}

sv::SolverOptions make_options(int T, int household_T, bool analytic,
                               bool hank, int threads) {
  sv::SolverOptions opt;
  if (T > 0) opt.T = T;
  if (household_T > 0) opt.household_T = household_T;
  opt.hank_demand = hank && !analytic;
  opt.threads = threads;
  if (const char* cache = std::getenv("HANKWEDGE_CACHE"))
    opt.cache_dir = cache;
  return opt;
}

int cmd_suffstats(const std::string& calib_dir, const std::string& dp_spec,
                  double lambda_e, const std::string& out_path) {
  auto u = load_union(calib_dir);
  const st::PriceChange dp = parse_dp(dp_spec);
  std::ostringstream out;
  out.precision(12);
  out << "country,rwei,avg_pi,omega,mwsi,tau_star\n";
  for (const auto& c : u.countries) {
    auto s = st::compute_all(c, dp, lambda_e);
    double tau = 0.0;
    bool tau_ok = true;
    try {
      tau = st::optimal_subsidy_from_omega(c, s.omega, lambda_e);
    } catch (const std::exception& e) {
      tau_ok = false;
      log_warn(c.code + std::string(": ") + e.what());
    }
    out << c.code << "," << s.rwei << "," << s.avg_pi << "," << s.omega << ","
        << s.mwsi << ",";
    if (tau_ok)
      out << tau;
    else
      out << "nan";
    out << "\n";
  }
  if (out_path.empty()) {
    std::cout << out.str();
  } else {
    std::ofstream f(out_path);
    if (!f) throw IoError("cannot write " + out_path);
    f << out.str();
  }
  return kOk;
}

int cmd_validate(const std::string& calib_dir) {
  auto u = load_union(calib_dir);
  std::cout << "calibration ok: " << u.countries.size() << " countries";
  for (const auto& c : u.countries)
    std::cout << " " << c.code << "(" << c.groups.size() << " groups)";
  std::cout << "\n";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(content_hash(u)));
  std::cout << "content hash: " << buf << "\n";
  return kOk;
}

int cmd_solve(const std::string& calib_dir, const std::string& scenario_path,
              const std::string& out_dir, const sv::SolverOptions& opt,
              const std::string& format) {
  auto u = load_union(calib_dir);
  auto scenario = load_scenario(scenario_path, opt.T);
  std::shared_ptr<const sv::HouseholdDemand> demand;
  if (opt.hank_demand) {
    log_info("solving household block");
    demand = std::make_shared<sv::HouseholdDemand>(
        sv::build_household_demand(u.common, opt, content_hash(u)));
  }
  log_info("assembling sequence-space system");
  const auto t0 = std::chrono::steady_clock::now();
  auto result = sv::solve(u, scenario, opt, demand);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  log_info("solved in " + std::to_string(result.iterations) +
           " iteration(s), residual " + std::to_string(result.residual_norm));

  fs::create_directories(out_dir);
  if (format == "csv" || format == "both")
    sv::write_result_csv(result,
                         (fs::path(out_dir) / "transition.csv").string());
  if (format == "json" || format == "both")
    sv::write_result_json(result,
                          (fs::path(out_dir) / "transition.json").string());
  xp::Context ctx;
  ctx.calib = u;
  ctx.opt = opt;
  xp::write_manifest(ctx, scenario, out_dir, wall);
  return kOk;
}

int cmd_experiment(const std::string& name, const std::string& calib_dir,
                   const std::string& scenario_path, const std::string& out_dir,
                   const sv::SolverOptions& opt, double psi,
                   const std::string& noneuro_csv) {
  const std::vector<std::string> names = {
      "wedge-table",     "shock-composition", "same-openness",
      "policy-matrix",   "indexation",        "delayed-policy",
      "channel-decomposition", "estimate-psi", "oca",
      "amplification-curve",   "portability"};
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    std::ostringstream msg;
    msg << "unknown experiment '" << name << "'; valid names:";
    for (const auto& n : names) msg << " " << n;
    throw CalibrationError(msg.str());
  }

  const auto t0 = std::chrono::steady_clock::now();
  xp::Report rep;
  ShockScenario scenario;

  if (name == "portability") {
    rep = xp::portability_stats(noneuro_csv, psi);
    xp::write_report(rep, out_dir);
    return kOk;
  }

  auto u = load_union(calib_dir);
  scenario = load_scenario(scenario_path, opt.T);
  log_info("building context (household block + jacobians)");
  auto ctx = xp::Context::make(u, opt);

  log_info("running experiment " + name);
  if (name == "wedge-table")
    rep = xp::wedge_table(ctx, scenario);
  else if (name == "shock-composition")
    rep = xp::shock_composition(ctx, scenario);
  else if (name == "same-openness")
    rep = xp::same_openness(ctx, scenario);
  else if (name == "policy-matrix")
    rep = xp::policy_matrix(ctx, scenario);
  else if (name == "indexation")
    rep = xp::indexation_table(ctx, scenario);
  else if (name == "delayed-policy")
    rep = xp::delayed_policy(ctx, scenario);
  else if (name == "channel-decomposition")
    rep = xp::channel_decomposition(ctx, scenario);
  else if (name == "estimate-psi")
    rep = xp::estimate_psi(ctx, scenario);
  else if (name == "oca")
    rep = xp::oca_decomposition(ctx, scenario);
  else if (name == "amplification-curve")
    rep = xp::amplification_curve(ctx, {0.01, 0.05, 0.10, 0.15, 0.20, 0.25});

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  xp::write_report(rep, out_dir);
  xp::write_manifest(ctx, scenario, out_dir, wall);
  log_info("report written to " + out_dir);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "hankwedge: reset-heterogeneity sufficient statistics and a"
      " multi-country sequence-space solver"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string log_level = "info";
  app.add_option("--log-level", log_level, "error|warn|info|debug");

  std::string calib_dir, scenario_path, out_dir = "out", dp_spec;
  std::string format = "both";
  std::string noneuro_csv, out_file;
  double lambda_e = 1.0, psi = 5.4;
  int T = 0, household_T = 0, threads = 1;
  bool analytic = false, hank = false;

  auto add_common = [&](CLI::App* cmd, bool needs_scenario) {
    cmd->add_option("--calib", calib_dir, "calibration directory")
        ->required();
    if (needs_scenario)
      cmd->add_option("--scenario", scenario_path, "scenario json");
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--T", T, "system horizon (default 80)");
    cmd->add_option("--household-T", household_T,
                    "household jacobian horizon (default 300)");
    cmd->add_flag("--analytic-is", analytic,
                  "use the analytic IS demand block (the default)");
    cmd->add_flag("--hank-demand", hank,
                  "route demand through the household jacobians");
    cmd->add_option("--threads", threads,
                    "worker threads for independent runs (default 1)");
  };

  auto* c_suff = app.add_subcommand(
      "suffstats", "closed-form statistics from calibration data alone");
  c_suff->add_option("--calib", calib_dir, "calibration directory")
      ->required();
  c_suff->add_option("--dp", dp_spec,
                     "item price changes, e.g. e=0.40 or e=0.4,d=0.1")
      ->required();
  c_suff->add_option("--lambda-e", lambda_e,
                     "essentials salience weight (default 1.0)");
  c_suff->add_option("--out", out_file, "write csv here instead of stdout");

  auto* c_solve = app.add_subcommand("solve", "solve one transition");
  add_common(c_solve, true);
  c_solve->add_option("--format", format, "csv|json|both");

  auto* c_exp = app.add_subcommand("experiment", "run a named experiment");
  std::string exp_name;
  c_exp->add_option("name", exp_name, "experiment name")->required();
  add_common(c_exp, true);
  c_exp->add_option("--psi", psi,
                    "structural coefficient for portability (default 5.4)");
  c_exp->add_option("--noneuro", noneuro_csv, "portability data csv");

  auto* c_val = app.add_subcommand("validate", "load and validate");
  c_val->add_option("--calib", calib_dir, "calibration directory")
      ->required();

  CLI11_PARSE(app, argc, argv);

  g_log_level = log_level == "error"   ? 0
                : log_level == "warn"  ? 1
                : log_level == "debug" ? 3
                                       : 2;

  try {
    if (c_suff->parsed())
      return cmd_suffstats(calib_dir, dp_spec, lambda_e, out_file);
    if (c_val->parsed()) return cmd_validate(calib_dir);

    const auto opt = make_options(T, household_T, analytic, hank, threads);
    if (c_solve->parsed()) {
      if (scenario_path.empty())
        throw CalibrationError("solve needs --scenario");
      return cmd_solve(calib_dir, scenario_path, out_dir, opt, format);
    }
    if (c_exp->parsed()) {
      if (exp_name != "portability" && scenario_path.empty())
        throw CalibrationError("experiment needs --scenario");
      if (exp_name == "portability" && noneuro_csv.empty())
        throw CalibrationError("portability needs --noneuro");
      return cmd_experiment(exp_name, calib_dir, scenario_path, out_dir, opt,
                            psi, noneuro_csv);
    }
  } catch (const IoError& e) {
    log_error(e.what());
    return kIo;
  } catch (const CalibrationError& e) {
    log_error(e.what());
    return kValidation;
  } catch (const std::invalid_argument& e) {
    log_error(e.what());
    return kValidation;
  } catch (const std::exception& e) {
    // solver non-convergence or a singular system
    log_error(e.what());
    return kSolver;
  }
  return kOk;
}
