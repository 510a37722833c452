#include "hankwedge/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

#include "hankwedge/csv.hpp"

namespace fs = std::filesystem;

namespace hankwedge::xp {

namespace sv = hankwedge::solver;
namespace st = hankwedge::stats;
using sv::Vec;

Context Context::make(UnionCalibration calib, solver::SolverOptions opt) {
  Context ctx;
  ctx.calib = std::move(calib);
  ctx.opt = opt;
  // the household block always backs the context: it supplies the MPC used
  // by the transfer-demand injections even when the analytic IS block
  // carries the rate channel
  ctx.demand = std::make_shared<sv::HouseholdDemand>(
      sv::build_household_demand(ctx.calib.common, opt,
                                 content_hash(ctx.calib)));
  return ctx;
}

double Report::value(const std::string& key, const std::string& column) const {
  for (std::size_t j = 0; j < columns.size(); ++j)
    if (columns[j] == column) {
      for (const auto& r : rows)
        if (r.key == key) return r.values[j];
    }
  throw std::out_of_range("report " + name + ": no cell (" + key + ", " +
                          column + ")");
}

double cumulative(const Vec& path, int window) {
  double acc = 0.0;
  for (int t = 0; t < std::min<int>(window, static_cast<int>(path.size())); ++t)
    acc += path(t);
  return acc;
}

int half_life(const Vec& path) {
  int peak_t = 0;
  for (int t = 0; t < path.size(); ++t)
    if (path(t) > path(peak_t)) peak_t = t;
  const double half = 0.5 * path(peak_t);
  for (int t = peak_t; t < path.size(); ++t)
    if (path(t) <= half) return t;
  return -1;
}

double welfare_loss(const UnionCalibration& calib,
                    const sv::TransitionResult& r) {
  double loss = 0.0;
  for (std::size_t c = 0; c < r.countries.size(); ++c) {
    double lc = 0.0, disc = 1.0;
    for (int t = 0; t < r.T; ++t) {
      const auto& cc = r.countries[c];
      lc += disc * (cc.pi_core(t) * cc.pi_core(t) +
                    calib.common.loss_weight_x * cc.x(t) * cc.x(t));
      disc *= calib.common.beta;
    }
    loss += calib.countries[c].gdp_weight * lc;
  }
  return loss;
}

namespace {

double country_loss(const CommonParams& common, const sv::CountryResult& c,
                    int T) {
  double lc = 0.0, disc = 1.0;
  for (int t = 0; t < T; ++t) {
    lc += disc * (c.pi_core(t) * c.pi_core(t) +
                  common.loss_weight_x * c.x(t) * c.x(t));
    disc *= common.beta;
  }
  return lc;
}

ShockScenario scaled(const ShockScenario& s, double factor) {
  ShockScenario out = s;
  for (auto& v : out.essentials_path) v *= factor;
  return out;
}

struct PairRun {
  sv::TransitionResult het;
  sv::TransitionResult std_twin;
};

PairRun run_pair(const Context& ctx, const ShockScenario& scenario) {
  PairRun out;
  out.het = sv::solve(ctx.calib, scenario, ctx.opt, ctx.demand);
  out.std_twin =
      sv::run_standard_twin(ctx.calib, scenario, ctx.opt, ctx.demand);
  return out;
}

double peak(const Vec& v) { return v.maxCoeff(); }

// value with the largest magnitude, keeping its sign; shock-composition
// wedges flip sign between the build and decay phases of a shock
double signed_extremum(const Vec& v) {
  double out = 0.0;
  for (int t = 0; t < v.size(); ++t)
    if (std::abs(v(t)) > std::abs(out)) out = v(t);
  return out;
}

}  // namespace

Report wedge_table(const Context& ctx, const ShockScenario& scenario) {
  Report rep;
  rep.name = "wedge-table";
  rep.columns = {"peak_core_het", "peak_core_std", "peak_omega",
                 "cum_gap",       "half_life_het", "half_life_std",
                 "half_life_het_lin", "half_life_std_lin",
                 "R_c",           "S_c",           "rho_omega"};

  PairRun runs = run_pair(ctx, scenario);

  // linear runs for the half-life comparison
  ShockScenario lin = scenario;
  lin.nonlinear = false;
  PairRun lruns = run_pair(ctx, lin);

  const double u_peak =
      *std::max_element(scenario.essentials_path.begin(),
                        scenario.essentials_path.end());

  std::vector<double> gdp_w, R_all, S_all, om_all, tb_all;
  for (std::size_t c = 0; c < ctx.calib.countries.size(); ++c) {
    const auto& country = ctx.calib.countries[c];
    const auto& h = runs.het.countries[c];
    const auto& s = runs.std_twin.countries[c];
    const double gap = cumulative(h.pi_core) - cumulative(s.pi_core);
    const double tb = country.theta_bar();
    const double om0 = peak(h.omega);
    const double R_c = cumulative(s.pi_core) / u_peak;
    const double S_c =
        om0 != 0.0 ? gap / (tb * om0 * u_peak) : 0.0;
    std::vector<double> omega_path(h.omega.data(),
                                   h.omega.data() + h.omega.size());
    const double rho = st::wedge_path_persistence(omega_path);
    rep.rows.push_back(
        {country.code,
         {4.0 * peak(h.pi_core), 4.0 * peak(s.pi_core), 100.0 * om0,
          100.0 * gap, static_cast<double>(half_life(h.pi_core)),
          static_cast<double>(half_life(s.pi_core)),
          static_cast<double>(half_life(lruns.het.countries[c].pi_core)),
          static_cast<double>(half_life(lruns.std_twin.countries[c].pi_core)),
          R_c, S_c, rho}});
    gdp_w.push_back(country.gdp_weight);
    R_all.push_back(R_c);
    S_all.push_back(S_c);
    om_all.push_back(om0);
    tb_all.push_back(tb);
  }
  if (ctx.calib.countries.size() >= 2) {
    auto vd = st::variance_decomposition(gdp_w, R_all, S_all, om_all, tb_all,
                                         u_peak);
    rep.scalars["var_standard"] = vd.standard;
    rep.scalars["var_wedge"] = vd.wedge;
    rep.scalars["var_covariance"] = vd.covariance;
  }
  return rep;
}

namespace {

// Equal-experience and non-essentials shocks pin the domestic sector prices
// so the item-price vector has the intended composition in equilibrium.
sv::TransitionResult pinned_run(const UnionCalibration& calib,
                                const ShockScenario& scenario,
                                const sv::SolverOptions& opt,
                                std::shared_ptr<const sv::HouseholdDemand> dem,
                                bool essentials_included) {
  sv::System sys(calib, scenario.policy, scenario.indexation, opt, dem);
  auto exog = sys.make_exog(scenario);
  const int T = opt.T;
  Vec v = Vec::Zero(T);
  for (int t = 0; t < T && t < static_cast<int>(scenario.essentials_path.size());
       ++t)
    v(t) = scenario.essentials_path[t];
  if (essentials_included)
    exog.u = v / calib.common.lambda_e;  // salience-adjusted essentials leg
  else
    exog.u = Vec::Zero(T);
  std::vector<Vec> p_d(calib.countries.size(), v);
  std::vector<Vec> p_s(calib.countries.size(), v);
  return sys.solve_pinned_prices(exog, p_d, p_s);
}

}  // namespace

Report shock_composition(const Context& ctx, const ShockScenario& scenario) {
  Report rep;
  rep.name = "shock-composition";
  rep.columns = {"peak_omega", "cum_gap"};

  auto ea_avg = [&](const sv::TransitionResult& h,
                    const sv::TransitionResult& s, double& om, double& gap) {
    om = 0.0;
    gap = 0.0;
    for (std::size_t c = 0; c < ctx.calib.countries.size(); ++c) {
      om += ctx.calib.countries[c].gdp_weight *
            signed_extremum(h.countries[c].omega);
      gap += ctx.calib.countries[c].gdp_weight *
             (cumulative(h.countries[c].pi_core) -
              cumulative(s.countries[c].pi_core));
    }
  };

  {  // energy: the baseline essentials-only shock
    PairRun r = run_pair(ctx, scenario);
    double om, gap;
    ea_avg(r.het, r.std_twin, om, gap);
    rep.rows.push_back({"energy", {100.0 * om, 100.0 * gap}});
  }
  {  // food: essentials shock at 75 percent of the baseline peak
    PairRun r = run_pair(ctx, scaled(scenario, 0.75));
    double om, gap;
    ea_avg(r.het, r.std_twin, om, gap);
    rep.rows.push_back({"food", {100.0 * om, 100.0 * gap}});
  }
  {  // uniform: every item moves so all groups share one experienced rate
    auto het = pinned_run(ctx.calib, scenario, ctx.opt, ctx.demand, true);
    auto twin = pinned_run(sv::standard_twin_union(ctx.calib), scenario,
                           ctx.opt, ctx.demand, true);
    double om, gap;
    ea_avg(het, twin, om, gap);
    rep.rows.push_back({"uniform", {100.0 * om, 100.0 * gap}});
  }
  {  // non-essentials: domestic prices move, essentials stay put
    auto het = pinned_run(ctx.calib, scenario, ctx.opt, ctx.demand, false);
    auto twin = pinned_run(sv::standard_twin_union(ctx.calib), scenario,
                           ctx.opt, ctx.demand, false);
    double om, gap;
    ea_avg(het, twin, om, gap);
    rep.rows.push_back({"nonessentials", {100.0 * om, 100.0 * gap}});
  }
  return rep;
}

namespace {

UnionCalibration steep_gradient_union(const UnionCalibration& base) {
  UnionCalibration u = base;
  CountryCalibration a = base.countries[0];
  a.code = "A";
  a.gdp_weight = 1.0;
  a.trade_shares.clear();
  a.trade_shares["A"] = 1.0;
  a.groups.clear();
  const double alpha_e[5] = {0.48, 0.37, 0.28, 0.18, 0.10};
  // contract durations 2..24 quarters, rescaled to an average reset
  // frequency of 0.17
  double theta[5];
  double mean = 0.0;
  const double dur[5] = {2.0, 4.0, 8.0, 16.0, 24.0};
  for (int g = 0; g < 5; ++g) {
    theta[g] = reset_prob_from_duration(dur[g]);
    mean += 0.2 * theta[g];
  }
  for (int g = 0; g < 5; ++g) theta[g] *= 0.17 / mean;
  const double srv_share[5] = {0.42, 0.46, 0.50, 0.54, 0.58};
  for (int g = 0; g < 5; ++g) {
    WorkerGroup w;
    w.label = "Q" + std::to_string(g + 1);
    w.eta = 0.2;
    w.theta = theta[g];
    w.alpha_e = alpha_e[g];
    w.alpha_s = (1.0 - alpha_e[g]) * srv_share[g];
    w.alpha_d = 1.0 - w.alpha_e - w.alpha_s;
    w.sector = g < 3 ? Sector::services : Sector::goods;
    w.phi = base.common.phi_bar;
    a.groups.push_back(std::move(w));
  }
  u.countries = {a};
  return u;
}

}  // namespace

Report same_openness(const Context& ctx, const ShockScenario& scenario) {
  Report rep;
  rep.name = "same-openness";
  rep.columns = {"import_share", "theta_bar", "peak_omega", "cum_core"};

  UnionCalibration uA = steep_gradient_union(ctx.calib);
  Context cA{uA, ctx.opt, ctx.demand};
  auto het = sv::solve(uA, scenario, ctx.opt, ctx.demand);
  auto twin = sv::run_standard_twin(uA, scenario, ctx.opt, ctx.demand);

  const auto& a = uA.countries[0];
  const double import_share =
      a.group_mean([](const WorkerGroup& g) { return g.alpha_e; });
  rep.rows.push_back({"A",
                      {import_share, a.theta_bar(),
                       100.0 * peak(het.countries[0].omega),
                       100.0 * cumulative(het.countries[0].pi_core)}});
  rep.rows.push_back({"B",
                      {import_share, a.theta_bar(),
                       100.0 * peak(twin.countries[0].omega),
                       100.0 * cumulative(twin.countries[0].pi_core)}});
  rep.scalars["gap"] = 100.0 * (cumulative(het.countries[0].pi_core) -
                                cumulative(twin.countries[0].pi_core));
  return rep;
}

Report policy_matrix(const Context& ctx, const ShockScenario& scenario) {
  Report rep;
  rep.name = "policy-matrix";
  rep.columns = {"cum_core_union", "welfare_loss", "normalized_loss"};

  // fiscal instruments sized to the same per-quarter outlay as the 6%
  // essentials subsidy
  double abar_e = 0.0;
  for (const auto& c : ctx.calib.countries)
    abar_e += c.gdp_weight *
              c.group_mean([](const WorkerGroup& g) { return g.alpha_e; });
  const double outlay = 0.06 * abar_e;

  auto scenario_for = [&](char regime) {
    ShockScenario s = scenario;
    switch (regime) {
      case 'a':
        s.policy = PolicyRegime::constant(2.5, scenario.policy.taylor_y);
        break;
      case 'b':
        s.policy = PolicyRegime::constant(1.5, scenario.policy.taylor_y);
        s.policy.transfer = {TransferSpec::Kind::uniform, outlay, "", 12};
        break;
      case 'c':
        s.policy = PolicyRegime::constant(1.5, scenario.policy.taylor_y);
        // same outlay concentrated on the bottom of the distribution
        s.policy.transfer = {TransferSpec::Kind::targeted, outlay / 0.2,
                             "@bottom", 12};
        break;
      case 'd':
        s.policy = PolicyRegime::constant(1.5, scenario.policy.taylor_y);
        s.policy.subsidy = 0.06;
        break;
    }
    return s;
  };

  std::map<char, double> losses;
  for (char regime : {'a', 'b', 'c', 'd'}) {
    auto s = scenario_for(regime);
    auto r = sv::solve(ctx.calib, s, ctx.opt, ctx.demand);
    double cum = 0.0;
    for (std::size_t c = 0; c < ctx.calib.countries.size(); ++c)
      cum += ctx.calib.countries[c].gdp_weight *
             cumulative(r.countries[c].pi_core);
    const double loss = welfare_loss(ctx.calib, r);
    losses[regime] = loss;
    rep.rows.push_back({std::string(1, regime), {100.0 * cum, loss, 0.0}});
  }
  const double base = losses['a'];
  for (auto& row : rep.rows)
    row.values[2] = base != 0.0 ? losses[row.key[0]] / base : 0.0;
  return rep;
}

Report indexation_table(const Context& ctx, const ShockScenario& scenario) {
  Report rep;
  rep.name = "indexation";
  rep.columns = {"peak_omega", "peak_wedge_term", "cum_gap",
                 "wedge_term_on_baseline"};

  // composition-channel invariance is a statement about the wage block, so
  // the last column evaluates each mode's wedge term on one common set of
  // equilibrium paths (the no-indexation equilibrium)
  ShockScenario base = scenario;
  base.indexation = {Indexation::Kind::none, 0.0};
  auto base_run = sv::solve(ctx.calib, base, ctx.opt, ctx.demand);

  auto wedge_on_baseline = [&](const Indexation& mode) {
    double pk = 0.0;
    for (std::size_t c = 0; c < ctx.calib.countries.size(); ++c) {
      const auto& country = ctx.calib.countries[c];
      const auto& h = base_run.countries[c];
      const double scale =
          mode.kind == Indexation::Kind::type_specific ? 1.0 - mode.gamma
                                                       : 1.0;
      Vec wt = Vec::Zero(base_run.T);
      for (std::size_t g = 0; g < country.groups.size(); ++g)
        wt += scale * country.groups[g].eta * country.groups[g].theta *
              (1.0 + country.groups[g].phi) * (h.pi_exp[g] - h.avg_pi);
      pk += country.gdp_weight * peak(wt);
    }
    return pk;
  };

  const std::vector<std::pair<std::string, Indexation>> modes = {
      {"none", {Indexation::Kind::none, 0.0}},
      {"cpi", {Indexation::Kind::cpi, 1.0}},
      {"type_specific", {Indexation::Kind::type_specific, 1.0}}};

  for (const auto& [label, mode] : modes) {
    ShockScenario s = scenario;
    s.indexation = mode;
    auto het = sv::solve(ctx.calib, s, ctx.opt, ctx.demand);
    auto twin = sv::run_standard_twin(ctx.calib, s, ctx.opt, ctx.demand);
    double om = 0.0, wt = 0.0, gap = 0.0;
    for (std::size_t c = 0; c < ctx.calib.countries.size(); ++c) {
      const double w = ctx.calib.countries[c].gdp_weight;
      om += w * peak(het.countries[c].omega);
      wt += w * peak(het.countries[c].wedge_term);
      gap += w * (cumulative(het.countries[c].pi_core) -
                  cumulative(twin.countries[c].pi_core));
    }
    rep.rows.push_back({label,
                        {100.0 * om, 100.0 * wt, 100.0 * gap,
                         100.0 * wedge_on_baseline(mode)}});
  }
  return rep;
}

Report delayed_policy(const Context& ctx, const ShockScenario& scenario) {
  Report rep;
  rep.name = "delayed-policy";
  rep.columns = {"cum_gap_immediate", "gap_share_immediate",
                 "cum_gap_delayed", "gap_share_delayed"};

  ShockScenario immediate = scenario;
  immediate.policy = PolicyRegime::constant(1.5, scenario.policy.taylor_y);
  ShockScenario delayed = scenario;
  delayed.policy = PolicyRegime::delayed(2.0, scenario.policy.taylor_y, 5);

  PairRun ri = run_pair(ctx, immediate);
  PairRun rd = run_pair(ctx, delayed);

  for (std::size_t c = 0; c < ctx.calib.countries.size(); ++c) {
    const auto& code = ctx.calib.countries[c].code;
    const double gi = cumulative(ri.het.countries[c].pi_core) -
                      cumulative(ri.std_twin.countries[c].pi_core);
    const double ti = cumulative(ri.het.countries[c].pi_core);
    const double gd = cumulative(rd.het.countries[c].pi_core) -
                      cumulative(rd.std_twin.countries[c].pi_core);
    const double td = cumulative(rd.het.countries[c].pi_core);
    rep.rows.push_back({code,
                        {100.0 * gi, ti != 0.0 ? 100.0 * gi / ti : 0.0,
                         100.0 * gd, td != 0.0 ? 100.0 * gd / td : 0.0}});
  }
  return rep;
}

namespace {

UnionCalibration equalize_baskets(const UnionCalibration& u) {
  UnionCalibration out = u;
  for (auto& c : out.countries) {
    const double ae =
        c.group_mean([](const WorkerGroup& g) { return g.alpha_e; });
    const double ad =
        c.group_mean([](const WorkerGroup& g) { return g.alpha_d; });
    const double as =
        c.group_mean([](const WorkerGroup& g) { return g.alpha_s; });
    for (auto& g : c.groups) {
      g.alpha_e = ae;
      g.alpha_d = ad;
      g.alpha_s = as;
    }
  }
  return out;
}

UnionCalibration equalize_reset(const UnionCalibration& u) {
  UnionCalibration out = u;
  for (auto& c : out.countries) {
    const double tb = c.theta_bar();
    for (auto& g : c.groups) g.theta = tb;
  }
  return out;
}

// split every group across both sectors in population proportion, so the
// sectoral wage indexes see the population-average wage
UnionCalibration equalize_propagation(const UnionCalibration& u) {
  UnionCalibration out = u;
  for (auto& c : out.countries) {
    double srv = 0.0;
    for (const auto& g : c.groups)
      if (g.sector == Sector::services) srv += g.eta;
    std::vector<WorkerGroup> split;
    for (const auto& g : c.groups) {
      WorkerGroup gs = g, gd = g;
      gs.label = g.label + "_s";
      gs.eta = g.eta * srv;
      gs.sector = Sector::services;
      gd.label = g.label + "_d";
      gd.eta = g.eta * (1.0 - srv);
      gd.sector = Sector::goods;
      if (gs.eta > 0.0) split.push_back(gs);
      if (gd.eta > 0.0) split.push_back(gd);
    }
    c.groups = std::move(split);
  }
  return out;
}

}  // namespace

Report channel_decomposition(const Context& ctx,
                             const ShockScenario& scenario) {
  Report rep;
  rep.name = "channel-decomposition";
  rep.columns = {"cum_core", "delta_from_full"};

  ShockScenario lin = scenario;
  lin.nonlinear = false;

  auto cum_core = [&](const UnionCalibration& u) {
    auto r = sv::solve(u, lin, ctx.opt, ctx.demand);
    double cum = 0.0;
    for (std::size_t c = 0; c < u.countries.size(); ++c)
      cum += u.countries[c].gdp_weight * cumulative(r.countries[c].pi_core);
    return cum;
  };

  const double full = cum_core(ctx.calib);
  const double eqb = cum_core(equalize_baskets(ctx.calib));
  const double eqp = cum_core(equalize_propagation(ctx.calib));
  const double eqr = cum_core(equalize_reset(ctx.calib));
  const double all_eq = cum_core(sv::standard_twin_union(ctx.calib));

  rep.rows.push_back({"full", {100.0 * full, 0.0}});
  rep.rows.push_back({"equal_baskets", {100.0 * eqb, 100.0 * (eqb - full)}});
  rep.rows.push_back(
      {"equal_propagation", {100.0 * eqp, 100.0 * (eqp - full)}});
  rep.rows.push_back({"equal_reset", {100.0 * eqr, 100.0 * (eqr - full)}});
  rep.rows.push_back({"standard", {100.0 * all_eq, 100.0 * (all_eq - full)}});
  return rep;
}

Report estimate_psi(const Context& ctx, const ShockScenario& scenario) {
  Report rep;
  rep.name = "estimate-psi";
  rep.columns = {"scale", "gap", "mwsi", "residual_over_gap"};

  const double u_peak =
      *std::max_element(scenario.essentials_path.begin(),
                        scenario.essentials_path.end());
  // peak quarterly essentials inflation implied by the shock path
  double dpe = 0.0;
  for (std::size_t t = 1; t < scenario.essentials_path.size(); ++t)
    dpe = std::max(dpe, scenario.essentials_path[t] -
                            scenario.essentials_path[t - 1]);
  dpe = std::max(dpe, scenario.essentials_path[0]);

  const std::vector<double> scales = {0.01 / u_peak, 0.02 / u_peak,
                                      0.04 / u_peak};
  struct Obs {
    std::string code;
    double scale, gap, mwsi;
  };
  std::vector<Obs> obs;
  for (double s : scales) {
    PairRun r = run_pair(ctx, scaled(scenario, s));
    for (std::size_t c = 0; c < ctx.calib.countries.size(); ++c) {
      const double gap = cumulative(r.het.countries[c].pi_core) -
                         cumulative(r.std_twin.countries[c].pi_core);
      st::PriceChange dp{dpe * s, 0.0, 0.0};
      const double m = st::mwsi(ctx.calib.countries[c], dp,
                                ctx.calib.common.lambda_e);
      obs.push_back({ctx.calib.countries[c].code, s, gap, m});
    }
  }
  double num = 0.0, den = 0.0;
  for (const auto& o : obs) {
    num += o.gap * o.mwsi;
    den += o.mwsi * o.mwsi;
  }
  const double psi = den > 0.0 ? num / den : 0.0;
  double ss_res = 0.0, ss_tot = 0.0;
  for (const auto& o : obs) {
    ss_res += (o.gap - psi * o.mwsi) * (o.gap - psi * o.mwsi);
    ss_tot += o.gap * o.gap;
  }
  rep.scalars["psi"] = psi;
  rep.scalars["fit"] = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;

  // the first-order claim: deviations from the small-shock slope are
  // O(u^2), so residuals against psi_0 shrink as the shock shrinks
  double num0 = 0.0, den0 = 0.0;
  for (const auto& o : obs)
    if (o.scale == scales.front()) {
      num0 += o.gap * o.mwsi;
      den0 += o.mwsi * o.mwsi;
    }
  const double psi0 = den0 > 0.0 ? num0 / den0 : 0.0;
  rep.scalars["psi_small_shock"] = psi0;
  for (const auto& o : obs)
    rep.rows.push_back(
        {o.code + "@" + std::to_string(o.scale),
         {o.scale, o.gap, o.mwsi,
          o.gap != 0.0 ? std::abs(o.gap - psi0 * o.mwsi) / std::abs(o.gap)
                       : 0.0}});
  return rep;
}

Report oca_decomposition(const Context& ctx, const ShockScenario& scenario) {
  Report rep;
  rep.name = "oca";
  rep.columns = {"phi_star", "cum_rate_own", "cum_rate_union", "bias",
                 "omega_peak"};

  ShockScenario lin = scenario;
  lin.nonlinear = false;

  // union run under the common rule
  auto union_run = sv::solve(ctx.calib, lin, ctx.opt, ctx.demand);
  const double cum_rate_union = cumulative(union_run.i_union);

  std::vector<double> istar, Rc, thetaomega, gdp_w;
  for (std::size_t c = 0; c < ctx.calib.countries.size(); ++c) {
    UnionCalibration solo = ctx.calib;
    solo.countries = {ctx.calib.countries[c]};
    solo.countries[0].gdp_weight = 1.0;
    solo.countries[0].trade_shares.clear();
    solo.countries[0].trade_shares[solo.countries[0].code] = 1.0;

    double best_phi = 1.01, best_loss = 0.0, best_cum_rate = 0.0;
    bool first = true;
    for (double phi = 1.01; phi <= 5.0 + 1e-9; phi += 0.01) {
      ShockScenario s = lin;
      s.policy = PolicyRegime::constant(phi, scenario.policy.taylor_y);
      auto r = sv::solve(solo, s, ctx.opt, ctx.demand);
      const double loss =
          country_loss(solo.common, r.countries[0], r.T);
      if (first || loss < best_loss) {
        best_loss = loss;
        best_phi = phi;
        best_cum_rate = cumulative(r.i_union);
        first = false;
      }
    }
    const double om0 = peak(union_run.countries[c].omega);
    rep.rows.push_back({ctx.calib.countries[c].code,
                        {best_phi, best_cum_rate, cum_rate_union,
                         cum_rate_union - best_cum_rate, 100.0 * om0}});
    istar.push_back(best_cum_rate);
    gdp_w.push_back(ctx.calib.countries[c].gdp_weight);
    thetaomega.push_back(ctx.calib.countries[c].theta_bar() * om0);
  }

  // standard pass-through of the twin economy, per country
  auto twin_run =
      sv::run_standard_twin(ctx.calib, lin, ctx.opt, ctx.demand);
  const double u_peak =
      *std::max_element(scenario.essentials_path.begin(),
                        scenario.essentials_path.end());
  for (std::size_t c = 0; c < ctx.calib.countries.size(); ++c)
    Rc.push_back(cumulative(twin_run.countries[c].pi_core) / u_peak);

  // two-regressor projection of the optimal-rate variance
  const std::size_t N = istar.size();
  double wsum = 0.0;
  for (double w : gdp_w) wsum += w;
  auto wmean = [&](const std::vector<double>& v) {
    double m = 0.0;
    for (std::size_t c = 0; c < N; ++c) m += gdp_w[c] * v[c];
    return m / wsum;
  };
  const double mi = wmean(istar), mr = wmean(Rc), mo = wmean(thetaomega);
  double srr = 0.0, soo = 0.0, sro = 0.0, sir = 0.0, sio = 0.0, sii = 0.0;
  for (std::size_t c = 0; c < N; ++c) {
    const double w = gdp_w[c] / wsum;
    const double dr = Rc[c] - mr, doo = thetaomega[c] - mo,
                 di = istar[c] - mi;
    srr += w * dr * dr;
    soo += w * doo * doo;
    sro += w * dr * doo;
    sir += w * di * dr;
    sio += w * di * doo;
    sii += w * di * di;
  }
  const double det = srr * soo - sro * sro;
  double b_r = 0.0, b_o = 0.0;
  if (std::abs(det) > 1e-18) {
    b_r = (sir * soo - sio * sro) / det;
    b_o = (sio * srr - sir * sro) / det;
  }
  rep.scalars["var_istar"] = sii;
  rep.scalars["var_from_R"] = b_r * b_r * srr;
  rep.scalars["var_from_wedge"] = b_o * b_o * soo;
  return rep;
}

Report amplification_curve(const Context& ctx,
                           const std::vector<double>& peaks) {
  Report rep;
  rep.name = "amplification-curve";
  rep.columns = {"peak", "gap_nonlinear", "gap_linear", "ratio"};

  for (double pk : peaks) {
    ShockScenario nl;
    nl.essentials_path = ar1_shock_path(ctx.opt.T, pk, 0.88, 4);
    nl.policy = PolicyRegime::constant(1.5, 0.125);
    nl.nonlinear = true;
    ShockScenario lin = nl;
    lin.nonlinear = false;

    PairRun rn = run_pair(ctx, nl);
    PairRun rl = run_pair(ctx, lin);
    double gap_nl = 0.0, gap_lin = 0.0;
    for (std::size_t c = 0; c < ctx.calib.countries.size(); ++c) {
      const double w = ctx.calib.countries[c].gdp_weight;
      gap_nl += w * (cumulative(rn.het.countries[c].pi_core) -
                     cumulative(rn.std_twin.countries[c].pi_core));
      gap_lin += w * (cumulative(rl.het.countries[c].pi_core) -
                      cumulative(rl.std_twin.countries[c].pi_core));
    }
    rep.rows.push_back({std::to_string(pk),
                        {pk, 100.0 * gap_nl, 100.0 * gap_lin,
                         gap_lin != 0.0 ? gap_nl / gap_lin : 1.0}});
  }
  return rep;
}

Report portability_stats(const std::string& noneuro_csv, double psi) {
  Report rep;
  rep.name = "portability";
  rep.columns = {"rwei_index", "omega_pp", "predicted_gap"};

  auto t = csv::read_file(noneuro_csv);
  const int c_country = t.column("country");
  const int c_q1 = t.column("q1_share");
  const int c_q5 = t.column("q5_share");
  const int c_dth = t.column("dtheta_annual");
  const int c_om = t.column("omega_pp");
  if (c_country < 0 || c_q1 < 0 || c_q5 < 0 || c_dth < 0 || c_om < 0)
    throw std::runtime_error(noneuro_csv + ": missing portability columns");

  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const std::string code = t.cell(i, c_country);
    double index = 0.0;
    if (!t.cell(i, c_q1).empty()) {
      const double q1 = csv::to_double(t.cell(i, c_q1), noneuro_csv);
      const double q5 = csv::to_double(t.cell(i, c_q5), noneuro_csv);
      const double dth = csv::to_double(t.cell(i, c_dth), noneuro_csv) / 4.0;
      // two-type wedge proxy: equal population shares, bottom-type reset
      // probability theta_low + quarterly gap, 40 percent essentials shock
      const double theta_low = 0.05;
      const double tb = theta_low + 0.5 * dth;
      index = 100.0 * (0.25 / tb) * dth * (q1 - q5) * 0.40;
    }
    const double om = t.cell(i, c_om).empty()
                          ? 0.0
                          : csv::to_double(t.cell(i, c_om), noneuro_csv);
    rep.rows.push_back({code, {index, om, psi * om}});
  }
  return rep;
}

void write_report(const Report& r, const std::string& out_dir) {
  fs::create_directories(out_dir);
  {
    std::ofstream out((fs::path(out_dir) / (r.name + ".csv")).string());
    out.precision(17);
    out << "key";
    for (const auto& c : r.columns) out << "," << c;
    out << "\n";
    for (const auto& row : r.rows) {
      out << row.key;
      for (double v : row.values) out << "," << v;
      out << "\n";
    }
  }
  nlohmann::json j;
  j["name"] = r.name;
  j["columns"] = r.columns;
  for (const auto& row : r.rows) j["rows"][row.key] = row.values;
  for (const auto& [k, v] : r.scalars) j["scalars"][k] = v;
  std::ofstream out((fs::path(out_dir) / (r.name + ".json")).string());
  out << j.dump(2) << "\n";
}

void write_manifest(const Context& ctx, const ShockScenario& scenario,
                    const std::string& out_dir, double wall_seconds) {
  fs::create_directories(out_dir);
  nlohmann::json j;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(content_hash(ctx.calib)));
  j["calibration_hash"] = buf;
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(content_hash(scenario)));
  j["scenario_hash"] = buf;
  j["solver"] = {{"T", ctx.opt.T},
                 {"household_T", ctx.opt.household_T},
                 {"hank_demand", ctx.opt.hank_demand},
                 {"qn_tol", ctx.opt.qn_tol},
                 {"qn_damping", ctx.opt.qn_damping},
                 {"threads", ctx.opt.threads}};
  j["wall_seconds"] = wall_seconds;
  std::ofstream out((fs::path(out_dir) / "manifest.json").string());
  out << j.dump(2) << "\n";
}

}  // namespace hankwedge::xp
