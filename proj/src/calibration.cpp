#include "hankwedge/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "hankwedge/csv.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace hankwedge {

namespace {

constexpr double kShareTol = 1e-12;

[[noreturn]] void fail(const std::string& msg) { throw CalibrationError(msg); }
[[noreturn]] void fail_io(const std::string& msg) { throw IoError(msg); }

double get_num(const json& j, const std::string& key, const std::string& ctx) {
  if (!j.contains(key)) fail(ctx + ": missing key '" + key + "'");
  if (!j.at(key).is_number()) fail(ctx + ": key '" + key + "' not numeric");
  return j.at(key).get<double>();
}

}  // namespace

const char* sector_name(Sector s) {
  return s == Sector::services ? "services" : "goods";
}

Sector sector_from_string(const std::string& s) {
  if (s == "services") return Sector::services;
  if (s == "goods") return Sector::goods;
  fail("unknown sector '" + s + "' (expected services|goods)");
}

double CountryCalibration::self_trade_share() const {
  auto it = trade_shares.find(code);
  return it == trade_shares.end() ? 0.0 : it->second;
}

double CountryCalibration::theta_bar() const {
  return group_mean([](const WorkerGroup& g) { return g.theta; });
}

const CountryCalibration& UnionCalibration::country(
    const std::string& code) const {
  for (const auto& c : countries)
    if (c.code == code) return c;
  fail("no country '" + code + "' in calibration");
}

PolicyRegime PolicyRegime::constant(double phi_pi, double phi_y) {
  PolicyRegime r;
  r.taylor_pi_path = {phi_pi};
  r.taylor_y = phi_y;
  return r;
}

PolicyRegime PolicyRegime::delayed(double phi_pi_post, double phi_y,
                                   int delay) {
  PolicyRegime r;
  r.taylor_pi_path.assign(static_cast<std::size_t>(delay), 0.0);
  r.taylor_pi_path.push_back(phi_pi_post);
  r.taylor_y = phi_y;
  return r;
}

double reset_prob_from_duration(double duration_quarters) {
  if (!(duration_quarters > 0.0))
    fail("contract duration must be positive, got " +
         std::to_string(duration_quarters));
  double theta = 1.0 / duration_quarters;
  return std::clamp(theta, 1e-6, 0.999);
}

void compute_centrality(CountryCalibration& country) {
  // Left dominant eigenvector of the domestic 2x2 block: supplier centrality.
  const double a = country.services.xi_services;  // services -> services
  const double b = country.services.xi_goods;     // services uses goods
  const double c = country.goods.xi_services;     // goods uses services
  const double d = country.goods.xi_goods;
  const double disc = (a - d) * (a - d) + 4.0 * b * c;
  const double lam = 0.5 * ((a + d) + std::sqrt(std::max(disc, 0.0)));
  double es, eg;
  if (c > kShareTol || b > kShareTol) {
    // left eigenvector v of M: v M = lam v  =>  (a-lam) v_s + c v_g = 0
    es = c;
    eg = lam - a;
    if (std::abs(es) + std::abs(eg) < kShareTol) {
      es = lam - d;
      eg = b;
    }
  } else {
    es = a >= d ? 1.0 : 0.0;
    eg = a >= d ? 0.0 : 1.0;
    if (std::abs(a - d) < kShareTol) es = eg = 0.5;
  }
  const double sum = es + eg;
  if (sum <= 0.0) fail(country.code + ": degenerate I-O matrix");
  country.services.centrality = es / sum;
  country.goods.centrality = eg / sum;
}

namespace {

WorkerGroup interpolate_group(const WorkerGroup& lo, const WorkerGroup& hi,
                              const std::string& label, Sector sector) {
  WorkerGroup g;
  g.label = label;
  g.eta = 0.5 * (lo.eta + hi.eta);
  g.theta = 0.5 * (lo.theta + hi.theta);
  g.alpha_e = 0.5 * (lo.alpha_e + hi.alpha_e);
  g.alpha_d = 0.5 * (lo.alpha_d + hi.alpha_d);
  g.alpha_s = 0.5 * (lo.alpha_s + hi.alpha_s);
  double s = g.alpha_e + g.alpha_d + g.alpha_s;
  g.alpha_e /= s;
  g.alpha_d /= s;
  g.alpha_s /= s;
  g.phi = 0.5 * (lo.phi + hi.phi);
  g.sector = sector;
  return g;
}

std::vector<WorkerGroup> read_groups(const std::string& path,
                                     const CommonParams& common) {
  auto t = csv::read_file(path);
  for (const char* col : {"label", "eta", "theta", "alpha_e", "alpha_d",
                          "alpha_s", "sector", "phi"})
    if (t.column(col) < 0) fail(path + ": missing column '" + col + "'");
  std::vector<WorkerGroup> gs;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    WorkerGroup g;
    auto num = [&](const char* col) {
      return csv::to_double(t.cell(i, t.column(col)), path);
    };
    g.label = t.cell(i, t.column("label"));
    g.eta = num("eta");
    g.theta = num("theta");
    g.alpha_e = num("alpha_e");
    g.alpha_d = num("alpha_d");
    g.alpha_s = num("alpha_s");
    g.sector = sector_from_string(t.cell(i, t.column("sector")));
    const std::string& phis = t.cell(i, t.column("phi"));
    g.phi = phis.empty() ? common.phi_bar : csv::to_double(phis, path);
    int mpc_col = t.column("mpc");
    if (mpc_col >= 0 && !t.cell(i, mpc_col).empty())
      g.mpc = csv::to_double(t.cell(i, mpc_col), path);
    gs.push_back(std::move(g));
  }

  // Quintile files may carry only Q1/Q3/Q5; fill Q2 and Q4 linearly.
  auto find = [&](const char* lbl) {
    return std::find_if(gs.begin(), gs.end(),
                        [&](const WorkerGroup& g) { return g.label == lbl; });
  };
  auto q1 = find("Q1");
  auto q3 = find("Q3");
  auto q5 = find("Q5");
  const bool has_q2 = find("Q2") != gs.end();
  const bool has_q4 = find("Q4") != gs.end();
  if (q1 != gs.end() && q3 != gs.end() && q5 != gs.end() && !has_q2 &&
      !has_q4 && gs.size() == 3) {
    std::vector<WorkerGroup> full;
    full.push_back(*q1);
    // Q2 sits in the bottom block (services side), Q4 in the top block.
    full.push_back(interpolate_group(*q1, *q3, "Q2", q1->sector));
    full.push_back(*q3);
    full.push_back(interpolate_group(*q3, *q5, "Q4", q5->sector));
    full.push_back(*q5);
    double eta_sum = 0.0;
    for (const auto& g : full) eta_sum += g.eta;
    for (auto& g : full) g.eta /= eta_sum;
    gs = std::move(full);
  }
  return gs;
}

SectorParams read_sector_row(const csv::Table& t, std::size_t i,
                             const std::string& path) {
  SectorParams p;
  auto num = [&](const char* col) {
    int j = t.column(col);
    if (j < 0) fail(path + ": missing column '" + std::string(col) + "'");
    return csv::to_double(t.cell(i, j), path);
  };
  p.labor_share = num("labor_share");
  p.calvo_reset = num("calvo_reset");
  p.xi_services = num("xi_services");
  p.xi_goods = num("xi_goods");
  p.xi_essentials = num("xi_essentials");
  p.gdp_weight = num("gdp_weight");
  return p;
}

CommonParams read_common(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_io("missing file " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail(path + ": " + e.what());
  }
  CommonParams p;
  p.beta = get_num(j, "beta", path);
  p.sigma = get_num(j, "sigma", path);
  p.phi_n = get_num(j, "phi_n", path);
  p.chi = get_num(j, "chi", path);
  p.eps_w = get_num(j, "eps_w", path);
  p.eps_trade = get_num(j, "eps_trade", path);
  p.b_catchup = get_num(j, "b_catchup", path);
  p.lambda_e = get_num(j, "lambda_e", path);
  p.phi_bar = get_num(j, "phi_bar", path);
  p.rho_e = get_num(j, "rho_e", path);
  p.sigma_e = get_num(j, "sigma_e", path);
  p.n_e = static_cast<int>(get_num(j, "n_e", path));
  p.n_a = static_cast<int>(get_num(j, "n_a", path));
  p.a_max = get_num(j, "a_max", path);
  p.r_ss = get_num(j, "r_ss", path);
  p.taylor_pi = get_num(j, "taylor_pi", path);
  p.taylor_y = get_num(j, "taylor_y", path);
  p.horizon_T = static_cast<int>(get_num(j, "horizon_T", path));
  p.loss_weight_x = get_num(j, "loss_weight_x", path);
  return p;
}

}  // namespace

UnionCalibration load_union(const std::string& dir) {
  UnionCalibration u;
  const fs::path root(dir);
  if (!fs::exists(root / "common.json"))
    fail_io("missing file " + (root / "common.json").string());
  u.common = read_common((root / "common.json").string());

  const fs::path countries_csv = root / "countries.csv";
  if (!fs::exists(countries_csv))
    fail_io("missing file " + countries_csv.string());
  auto ct = csv::read_file(countries_csv.string());
  if (ct.column("code") < 0 || ct.column("gdp_weight") < 0)
    fail(countries_csv.string() + ": needs columns code,gdp_weight");

  for (std::size_t i = 0; i < ct.rows.size(); ++i) {
    CountryCalibration c;
    c.code = ct.cell(i, ct.column("code"));
    c.gdp_weight = csv::to_double(ct.cell(i, ct.column("gdp_weight")),
                                  countries_csv.string());
    const fs::path cdir = root / c.code;
    for (const char* f : {"groups.csv", "sectors.csv", "trade.csv"})
      if (!fs::exists(cdir / f))
        fail_io("missing file " + (cdir / f).string());

    c.groups = read_groups((cdir / "groups.csv").string(), u.common);

    auto st = csv::read_file((cdir / "sectors.csv").string());
    int sc = st.column("sector");
    if (sc < 0) fail((cdir / "sectors.csv").string() + ": missing 'sector'");
    bool got_s = false, got_g = false;
    for (std::size_t r = 0; r < st.rows.size(); ++r) {
      Sector s = sector_from_string(st.cell(r, sc));
      SectorParams p = read_sector_row(st, r, (cdir / "sectors.csv").string());
      if (s == Sector::services) {
        c.services = p;
        got_s = true;
      } else {
        c.goods = p;
        got_g = true;
      }
    }
    if (!got_s || !got_g)
      fail(c.code + ": sectors.csv must define both services and goods");

    auto tt = csv::read_file((cdir / "trade.csv").string());
    if (tt.column("partner") < 0 || tt.column("share") < 0)
      fail((cdir / "trade.csv").string() + ": needs columns partner,share");
    for (std::size_t r = 0; r < tt.rows.size(); ++r)
      c.trade_shares[tt.cell(r, tt.column("partner"))] = csv::to_double(
          tt.cell(r, tt.column("share")), (cdir / "trade.csv").string());

    compute_centrality(c);
    u.countries.push_back(std::move(c));
  }

  validate(u);
  return u;
}

void validate(const UnionCalibration& u) {
  if (u.common.beta <= 0.0 || u.common.beta >= 1.0)
    fail("beta must lie in (0,1)");
  for (double e : {u.common.sigma, u.common.eps_w, u.common.eps_trade})
    if (!(e > 0.0)) fail("elasticities must be positive");
  if (u.common.horizon_T < 80) fail("horizon_T must be at least 80");

  double wsum = 0.0;
  for (const auto& c : u.countries) {
    wsum += c.gdp_weight;
    double eta_sum = 0.0;
    for (const auto& g : c.groups) {
      const std::string who = c.code + "/" + g.label;
      if (!(g.eta > 0.0 && g.eta <= 1.0)) fail(who + ": eta out of (0,1]");
      if (!(g.theta > 0.0 && g.theta < 1.0))
        fail(who + ": theta out of (0,1)");
      if (g.alpha_e < 0.0 || g.alpha_d < 0.0 || g.alpha_s < 0.0)
        fail(who + ": negative expenditure share");
      const double s = g.alpha_e + g.alpha_d + g.alpha_s;
      if (std::abs(s - 1.0) > kShareTol)
        fail(who + ": expenditure shares sum to " + std::to_string(s) +
             ", expected 1");
      eta_sum += g.eta;
    }
    if (std::abs(eta_sum - 1.0) > kShareTol)
      fail(c.code + ": population shares sum to " + std::to_string(eta_sum));

    for (Sector s : {Sector::services, Sector::goods}) {
      const auto& p = c.sector(s);
      const std::string who = c.code + "/" + sector_name(s);
      if (!(p.labor_share > 0.0 && p.labor_share < 1.0))
        fail(who + ": labor_share out of (0,1)");
      if (!(p.calvo_reset > 0.0 && p.calvo_reset < 1.0))
        fail(who + ": calvo_reset out of (0,1)");
      const double xs = p.xi_services + p.xi_goods + p.xi_essentials;
      if (std::abs(xs - 1.0) > kShareTol)
        fail(who + ": I-O weights sum to " + std::to_string(xs));
    }
    if (!(c.services.labor_share > c.goods.labor_share))
      fail(c.code + ": services labor_share must exceed goods labor_share");

    if (!c.trade_shares.empty()) {
      double ts = 0.0;
      for (const auto& [k, v] : c.trade_shares) ts += v;
      if (std::abs(ts - 1.0) > kShareTol)
        fail(c.code + ": trade shares sum to " + std::to_string(ts));
    }
  }
  if (std::abs(wsum - 1.0) > 1e-9)
    fail("country gdp_weights sum to " + std::to_string(wsum));
}

std::vector<double> ar1_shock_path(int T, double peak, double persistence,
                                   int peak_quarter) {
  if (persistence < 0.0 || persistence >= 1.0)
    fail("shock persistence must lie in [0,1)");
  std::vector<double> u(static_cast<std::size_t>(T), 0.0);
  for (int t = 0; t < T; ++t) {
    if (t < peak_quarter)
      u[t] = peak * std::pow(2.0, t - peak_quarter);  // doubling ramp
    else
      u[t] = peak * std::pow(persistence, t - peak_quarter);
  }
  // taper the final stretch so the path is exactly zero at the horizon
  const int taper = std::min(8, T / 10);
  for (int k = 0; k < taper; ++k) {
    const int t = T - 1 - k;
    u[t] *= static_cast<double>(k) / taper;
  }
  return u;
}

std::vector<double> hump_shock_path(int T, double peak, double rise,
                                    double decay) {
  if (!(rise < decay && decay < 1.0 && rise >= 0.0))
    fail("hump shock needs 0 <= rise < decay < 1");
  std::vector<double> u(static_cast<std::size_t>(T), 0.0);
  double mx = 0.0;
  for (int t = 0; t < T; ++t) {
    u[t] = std::pow(decay, t) - std::pow(rise, t);
    mx = std::max(mx, u[t]);
  }
  for (auto& v : u) v *= peak / mx;
  const int taper = std::min(8, T / 10);
  for (int k = 0; k < taper; ++k) u[T - 1 - k] *= static_cast<double>(k) / taper;
  return u;
}

ShockScenario load_scenario(const std::string& path, int horizon_T) {
  std::ifstream in(path);
  if (!in) fail_io("missing file " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail(path + ": " + e.what());
  }
  ShockScenario s;
  if (j.contains("essentials_path")) {
    s.essentials_path = j.at("essentials_path").get<std::vector<double>>();
    s.essentials_path.resize(static_cast<std::size_t>(horizon_T), 0.0);
  } else if (j.contains("shock")) {
    const auto& sh = j.at("shock");
    const std::string kind = sh.value("kind", "ar1");
    if (kind == "ar1")
      s.essentials_path = ar1_shock_path(
          horizon_T, get_num(sh, "peak", path),
          sh.value("persistence", 0.88), static_cast<int>(sh.value("peak_quarter", 4.0)));
    else if (kind == "hump")
      s.essentials_path =
          hump_shock_path(horizon_T, get_num(sh, "peak", path),
                          sh.value("rise", 0.35), sh.value("decay", 0.88));
    else
      fail(path + ": unknown shock kind '" + kind + "'");
  } else {
    fail(path + ": needs essentials_path or shock");
  }
  for (double v : s.essentials_path)
    if (!std::isfinite(v)) fail(path + ": non-finite essentials_path entry");
  if (std::abs(s.essentials_path.back()) >= 1e-6)
    fail(path + ": essentials_path must decay below 1e-6 by the horizon");

  if (j.contains("policy")) {
    const auto& p = j.at("policy");
    if (p.contains("taylor_pi_path"))
      s.policy.taylor_pi_path =
          p.at("taylor_pi_path").get<std::vector<double>>();
    else {
      const int delay = static_cast<int>(p.value("delay", 0.0));
      const double phi_pi = p.value("taylor_pi", 1.5);
      s.policy = delay > 0 ? PolicyRegime::delayed(phi_pi, 0.125, delay)
                           : PolicyRegime::constant(phi_pi, 0.125);
    }
    s.policy.taylor_y = p.value("taylor_y", 0.125);
    s.policy.subsidy = p.value("subsidy", 0.0);
    if (p.contains("transfer")) {
      const auto& tr = p.at("transfer");
      const std::string kind = tr.value("kind", "none");
      if (kind == "uniform")
        s.policy.transfer.kind = TransferSpec::Kind::uniform;
      else if (kind == "targeted")
        s.policy.transfer.kind = TransferSpec::Kind::targeted;
      else if (kind != "none")
        fail(path + ": unknown transfer kind '" + kind + "'");
      s.policy.transfer.amount = tr.value("amount", 0.0);
      s.policy.transfer.target_group = tr.value("group", "");
      s.policy.transfer.duration = static_cast<int>(tr.value("duration", 12.0));
    }
  } else {
    s.policy = PolicyRegime::constant(1.5, 0.125);
  }
  for (double v : s.policy.taylor_pi_path)
    if (v < 0.0) fail(path + ": taylor_pi_path entries must be >= 0");
  if (s.policy.subsidy < 0.0 || s.policy.subsidy >= 1.0)
    fail(path + ": subsidy must lie in [0,1)");

  if (j.contains("indexation")) {
    const auto& ix = j.at("indexation");
    const std::string kind = ix.value("kind", "none");
    if (kind == "cpi")
      s.indexation.kind = Indexation::Kind::cpi;
    else if (kind == "type_specific")
      s.indexation.kind = Indexation::Kind::type_specific;
    else if (kind != "none")
      fail(path + ": unknown indexation kind '" + kind + "'");
    s.indexation.gamma = ix.value("gamma", 1.0);
    if (s.indexation.gamma < 0.0 || s.indexation.gamma > 1.0)
      fail(path + ": indexation gamma must lie in [0,1]");
  }
  s.nonlinear = j.value("nonlinear", false);
  return s;
}

void save_union(const UnionCalibration& u, const std::string& dir) {
  const fs::path root(dir);
  fs::create_directories(root);
  {
    json j;
    const auto& p = u.common;
    j["beta"] = p.beta;
    j["sigma"] = p.sigma;
    j["phi_n"] = p.phi_n;
    j["chi"] = p.chi;
    j["eps_w"] = p.eps_w;
    j["eps_trade"] = p.eps_trade;
    j["b_catchup"] = p.b_catchup;
    j["lambda_e"] = p.lambda_e;
    j["phi_bar"] = p.phi_bar;
    j["rho_e"] = p.rho_e;
    j["sigma_e"] = p.sigma_e;
    j["n_e"] = p.n_e;
    j["n_a"] = p.n_a;
    j["a_max"] = p.a_max;
    j["r_ss"] = p.r_ss;
    j["taylor_pi"] = p.taylor_pi;
    j["taylor_y"] = p.taylor_y;
    j["horizon_T"] = p.horizon_T;
    j["loss_weight_x"] = p.loss_weight_x;
    std::ofstream out(root / "common.json");
    out << j.dump(2) << "\n";
  }
  {
    csv::Writer w((root / "countries.csv").string());
    w.row("code", "gdp_weight");
    for (const auto& c : u.countries) w.row(c.code, c.gdp_weight);
  }
  for (const auto& c : u.countries) {
    fs::create_directories(root / c.code);
    {
      csv::Writer w((root / c.code / "groups.csv").string());
      w.row("label", "eta", "theta", "alpha_e", "alpha_d", "alpha_s", "sector",
            "phi", "mpc");
      for (const auto& g : c.groups)
        w.row(g.label, g.eta, g.theta, g.alpha_e, g.alpha_d, g.alpha_s,
              sector_name(g.sector), g.phi,
              g.mpc ? std::to_string(*g.mpc) : std::string());
    }
    {
      csv::Writer w((root / c.code / "sectors.csv").string());
      w.row("sector", "labor_share", "calvo_reset", "xi_services", "xi_goods",
            "xi_essentials", "gdp_weight");
      for (Sector s : {Sector::services, Sector::goods}) {
        const auto& p = c.sector(s);
        w.row(sector_name(s), p.labor_share, p.calvo_reset, p.xi_services,
              p.xi_goods, p.xi_essentials, p.gdp_weight);
      }
    }
    {
      csv::Writer w((root / c.code / "trade.csv").string());
      w.row("partner", "share");
      for (const auto& [k, v] : c.trade_shares) w.row(k, v);
    }
  }
}

CountryCalibration standard_twin(const CountryCalibration& c) {
  CountryCalibration t = c;
  WorkerGroup pooled;
  pooled.label = "pooled";
  pooled.eta = 1.0;
  pooled.theta = c.theta_bar();
  pooled.alpha_e = c.group_mean([](const WorkerGroup& g) { return g.alpha_e; });
  pooled.alpha_d = c.group_mean([](const WorkerGroup& g) { return g.alpha_d; });
  pooled.alpha_s = c.group_mean([](const WorkerGroup& g) { return g.alpha_s; });
  pooled.phi = 0.0;
  pooled.sector = Sector::services;
  double m = c.group_mean(
      [](const WorkerGroup& g) { return g.mpc ? *g.mpc : 0.0; });
  bool any_mpc =
      std::any_of(c.groups.begin(), c.groups.end(),
                  [](const WorkerGroup& g) { return g.mpc.has_value(); });
  if (any_mpc) pooled.mpc = m;
  t.groups = {pooled};
  return t;
}

CountryCalibration collapse_groups(const CountryCalibration& c, int n_groups) {
  if (n_groups <= 0 || n_groups > static_cast<int>(c.groups.size()))
    fail(c.code + ": cannot collapse " + std::to_string(c.groups.size()) +
         " groups to " + std::to_string(n_groups));
  if (n_groups == static_cast<int>(c.groups.size())) return c;
  if (n_groups == 1) return standard_twin(c);

  const int G = static_cast<int>(c.groups.size());
  // contiguous blocks, sized as evenly as possible
  std::vector<std::pair<int, int>> blocks;
  int base = G / n_groups, extra = G % n_groups, at = 0;
  for (int b = 0; b < n_groups; ++b) {
    int len = base + (b < extra ? 1 : 0);
    blocks.emplace_back(at, at + len);
    at += len;
  }
  CountryCalibration out = c;
  out.groups.clear();
  for (auto [lo, hi] : blocks) {
    WorkerGroup g;
    g.label = c.groups[lo].label +
              (hi - lo > 1 ? "-" + c.groups[hi - 1].label : "");
    double eta = 0.0;
    for (int i = lo; i < hi; ++i) eta += c.groups[i].eta;
    g.eta = eta;
    auto wmean = [&](auto&& f) {
      double acc = 0.0;
      for (int i = lo; i < hi; ++i) acc += c.groups[i].eta * f(c.groups[i]);
      return acc / eta;
    };
    g.theta = wmean([](const WorkerGroup& x) { return x.theta; });
    g.alpha_e = wmean([](const WorkerGroup& x) { return x.alpha_e; });
    g.alpha_d = wmean([](const WorkerGroup& x) { return x.alpha_d; });
    g.alpha_s = wmean([](const WorkerGroup& x) { return x.alpha_s; });
    g.phi = wmean([](const WorkerGroup& x) { return x.phi; });
    double sv = 0.0;
    for (int i = lo; i < hi; ++i)
      if (c.groups[i].sector == Sector::services) sv += c.groups[i].eta;
    g.sector = sv >= 0.5 * eta ? Sector::services : Sector::goods;
    out.groups.push_back(std::move(g));
  }
  return out;
}

namespace {

std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string canonical(const UnionCalibration& u) {
  std::ostringstream os;
  os.precision(17);
  const auto& p = u.common;
  os << p.beta << '|' << p.sigma << '|' << p.phi_n << '|' << p.chi << '|'
     << p.eps_w << '|' << p.eps_trade << '|' << p.b_catchup << '|'
     << p.lambda_e << '|' << p.phi_bar << '|' << p.rho_e << '|' << p.sigma_e
     << '|' << p.n_e << '|' << p.n_a << '|' << p.a_max << '|' << p.r_ss << '|'
     << p.taylor_pi << '|' << p.taylor_y << '|' << p.horizon_T << '|'
     << p.loss_weight_x << ';';
  for (const auto& c : u.countries) {
    os << c.code << ':' << c.gdp_weight << ':';
    for (const auto& g : c.groups)
      os << g.label << ',' << g.eta << ',' << g.theta << ',' << g.alpha_e
         << ',' << g.alpha_d << ',' << g.alpha_s << ','
         << sector_name(g.sector) << ',' << g.phi << ','
         << (g.mpc ? *g.mpc : -1.0) << '/';
    for (Sector s : {Sector::services, Sector::goods}) {
      const auto& q = c.sector(s);
      os << q.labor_share << ',' << q.calvo_reset << ',' << q.xi_services
         << ',' << q.xi_goods << ',' << q.xi_essentials << ',' << q.gdp_weight
         << '/';
    }
    for (const auto& [k, v] : c.trade_shares) os << k << '=' << v << '/';
    os << ';';
  }
  return os.str();
}

}  // namespace

std::uint64_t content_hash(const UnionCalibration& u) {
  return fnv1a(canonical(u));
}

std::uint64_t content_hash(const ShockScenario& s) {
  std::ostringstream os;
  os.precision(17);
  for (double v : s.essentials_path) os << v << ',';
  os << ';';
  for (double v : s.policy.taylor_pi_path) os << v << ',';
  os << s.policy.taylor_y << '|' << static_cast<int>(s.policy.transfer.kind)
     << '|' << s.policy.transfer.amount << '|' << s.policy.transfer.target_group
     << '|' << s.policy.transfer.duration << '|' << s.policy.subsidy << '|'
     << static_cast<int>(s.indexation.kind) << '|' << s.indexation.gamma << '|'
     << s.nonlinear;
  return fnv1a(os.str());
}

}  // namespace hankwedge
