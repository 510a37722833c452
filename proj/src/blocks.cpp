#include "hankwedge/blocks.hpp"

#include <cmath>
#include <stdexcept>

namespace hankwedge::blocks {

Mat lag_op(int T) {
  Mat L = Mat::Zero(T, T);
  for (int t = 1; t < T; ++t) L(t, t - 1) = 1.0;
  return L;
}

Mat lead_op(int T) {
  Mat L = Mat::Zero(T, T);
  for (int t = 0; t + 1 < T; ++t) L(t, t + 1) = 1.0;
  return L;
}

Mat diff_op(int T) { return Mat::Identity(T, T) - lag_op(T); }

Vec lag(const Vec& v) {
  Vec out = Vec::Zero(v.size());
  out.tail(v.size() - 1) = v.head(v.size() - 1);
  return out;
}

Vec lead(const Vec& v) {
  Vec out = Vec::Zero(v.size());
  out.head(v.size() - 1) = v.tail(v.size() - 1);
  return out;
}

Vec diff(const Vec& v) { return v - lag(v); }

WagePcParams apply_indexation(const Indexation& mode, WagePcParams base) {
  if (mode.gamma < 0.0 || mode.gamma > 1.0)
    throw std::invalid_argument("indexation gamma must lie in [0,1]");
  base.indexation = mode;
  return base;
}

Vec type_wage_pc_residual(const WagePcParams& p, const Vec& pi_w,
                          const Vec& omega_hat, const Vec& pi_exp_barg,
                          const Vec& pi_exp_own, const Vec& avg_pi) {
  const auto T = pi_w.size();
  if (omega_hat.size() != T || pi_exp_barg.size() != T ||
      pi_exp_own.size() != T || avg_pi.size() != T)
    throw std::invalid_argument("wage PC: path length mismatch");

  const double m = p.exp_coef();
  const double g = p.indexation.gamma;
  switch (p.indexation.kind) {
    case Indexation::Kind::none:
      return pi_w - p.beta * lead(pi_w) - p.kappa() * omega_hat -
             m * pi_exp_barg;
    case Indexation::Kind::cpi:
      // non-resetters receive g * lagged average inflation; the level
      // channel scales by (1-g) inside the experienced-inflation term while
      // the cross-sectional deviation is untouched
      return (pi_w - g * lag(avg_pi)) - p.beta * (lead(pi_w) - g * avg_pi) -
             p.kappa() * omega_hat - m * (pi_exp_barg - g * avg_pi);
    case Indexation::Kind::type_specific:
      return (pi_w - g * lag(pi_exp_own)) -
             p.beta * (lead(pi_w) - g * pi_exp_own) - p.kappa() * omega_hat -
             m * (1.0 - g) * pi_exp_barg;
  }
  throw std::logic_error("unreachable");
}

WagePcDecomposition aggregate_wage_pc(const CountryCalibration& country,
                                      const CommonParams& common,
                                      const Indexation& mode,
                                      const std::vector<Vec>& pi_w,
                                      const Vec& omega_hat,
                                      const std::vector<Vec>& pi_exp_barg,
                                      const std::vector<Vec>& pi_exp_own,
                                      const Vec& avg_pi) {
  const auto G = country.groups.size();
  if (pi_w.size() != G || pi_exp_barg.size() != G || pi_exp_own.size() != G)
    throw std::invalid_argument("aggregate wage PC: group count mismatch");
  const auto T = avg_pi.size();

  WagePcDecomposition out;
  out.aggregate_residual = Vec::Zero(T);
  out.gap_term = Vec::Zero(T);
  out.level_term = Vec::Zero(T);
  out.wedge_term = Vec::Zero(T);
  out.wedge_term_base = Vec::Zero(T);

  double m_bar = 0.0;
  for (const auto& g : country.groups)
    m_bar += g.eta * g.theta * (1.0 + g.phi);

  // scaling the mode applies to the experienced-inflation term: CPI
  // indexation nets gamma*avg_pi out of the level channel only, while
  // type-specific indexation scales level and composition alike
  const double wedge_scale =
      mode.kind == Indexation::Kind::type_specific ? 1.0 - mode.gamma : 1.0;

  for (std::size_t gi = 0; gi < G; ++gi) {
    const auto& g = country.groups[gi];
    WagePcParams p;
    p.beta = common.beta;
    p.theta = g.theta;
    p.phi = g.phi;
    p.indexation = mode;
    const Vec res = type_wage_pc_residual(p, pi_w[gi], omega_hat,
                                          pi_exp_barg[gi], pi_exp_own[gi],
                                          avg_pi);
    out.aggregate_residual += g.eta * res;
    out.gap_term += g.eta * p.kappa() * omega_hat;
    out.wedge_term +=
        wedge_scale * g.eta * p.exp_coef() * (pi_exp_barg[gi] - avg_pi);
    out.wedge_term_base +=
        wedge_scale * g.eta * g.theta * (pi_exp_barg[gi] - avg_pi);
  }
  switch (mode.kind) {
    case Indexation::Kind::none:
      out.level_term = m_bar * avg_pi;
      break;
    case Indexation::Kind::cpi:
      out.level_term = m_bar * (1.0 - mode.gamma) * avg_pi;
      break;
    case Indexation::Kind::type_specific:
      out.level_term = m_bar * (1.0 - mode.gamma) * avg_pi;
      break;
  }
  return out;
}

Vec expected_inflation(const Vec& pi_bar, const Vec& pi_exp, double phi) {
  return pi_bar + phi * pi_exp;
}

Vec sector_marginal_cost(const SectorPcParams& p, const Vec& wage,
                         const Vec& p_s, const Vec& p_d, const Vec& p_e) {
  const Vec bundle =
      p.xi_services * p_s + p.xi_goods * p_d + p.xi_essentials * p_e;
  return p.labor_share * wage + (1.0 - p.labor_share) * bundle;
}

Vec sector_price_residual(const SectorPcParams& p, const Vec& p_own,
                          const Vec& wage, const Vec& p_s, const Vec& p_d,
                          const Vec& p_e, const Vec& cost_shift) {
  const auto T = p_own.size();
  if (wage.size() != T || p_s.size() != T || p_d.size() != T ||
      p_e.size() != T)
    throw std::invalid_argument("sector PC: path length mismatch");
  const Vec pi = diff(p_own);
  const Vec mc = sector_marginal_cost(p, wage, p_s, p_d, p_e) - p_own;
  return pi - p.beta * lead(pi) - p.kappa_p() * mc - cost_shift;
}

Vec is_residual(double sigma, const Vec& x, const Vec& i, const Vec& pi,
                const Vec& r_n) {
  const auto T = x.size();
  if (i.size() != T || pi.size() != T || r_n.size() != T)
    throw std::invalid_argument("IS: path length mismatch");
  return x - lead(x) + (1.0 / sigma) * (i - lead(pi) - r_n);
}

Vec taylor_rate(const PolicyRegime& regime, const Vec& pi_core_union,
                const Vec& x_union) {
  const auto T = pi_core_union.size();
  Vec i(T);
  for (Eigen::Index t = 0; t < T; ++t)
    i(t) = regime.phi_pi_at(static_cast<int>(t)) * pi_core_union(t) +
           regime.taylor_y * x_union(t);
  return i;
}

std::vector<Vec> trade_demand(const std::vector<CountryCalibration>& countries,
                              const std::vector<Vec>& p_d, double eps_trade) {
  const std::size_t N = countries.size();
  if (p_d.size() != N)
    throw std::invalid_argument("trade: one goods-price path per country");
  std::vector<Vec> demand(N);
  for (std::size_t c = 0; c < N; ++c) {
    Vec d = Vec::Zero(p_d[c].size());
    for (std::size_t k = 0; k < N; ++k) {
      if (k == c) continue;
      auto it = countries[c].trade_shares.find(countries[k].code);
      if (it == countries[c].trade_shares.end()) continue;
      d += it->second * (p_d[k] - p_d[c]);
    }
    demand[c] = eps_trade * d;
  }
  return demand;
}

Vec nonlinear_reset(const Vec& w_star_lin, const Vec& p_idx, const Vec& w_lag,
                    double b_catchup) {
  Vec out = w_star_lin;
  for (Eigen::Index t = 0; t < out.size(); ++t)
    out(t) += b_catchup * std::max(p_idx(t) - w_lag(t), 0.0);
  return out;
}

Vec catchup_term(double theta, double beta, double b_catchup,
                 const Vec& p_idx, const Vec& w_level) {
  // Quasi-differencing the wage index with the catch-up added to the reset
  // wage leaves two terms in the inflation equation: a contemporaneous push
  // theta/(1-theta) Delta_t and an anticipation offset -beta theta
  // Delta_{t+1}. Delta is the superlinear remainder of b' max{gap, 0} in
  // level relatives: its linear-in-gap component is part of the linearized
  // dynamics, so only the convex excess distinguishes the nonlinear model.
  const auto T = p_idx.size();
  Vec out = Vec::Zero(T);
  if (b_catchup == 0.0) return out;
  const double Theta = 1.0 - theta;
  Vec delta(T);
  for (Eigen::Index t = 0; t < T; ++t) {
    const double w_prev = t > 0 ? w_level(t - 1) : 0.0;
    const double gap = p_idx(t) - w_prev;
    // superlinear remainder of the catch-up rule: the part of
    // b' max{gap, 0} the linearized dynamics cannot absorb
    delta(t) = gap > 0.0 ? b_catchup * (std::expm1(gap) - gap) : 0.0;
  }
  for (Eigen::Index t = 0; t < T; ++t) {
    out(t) = theta / Theta * delta(t);
    if (t + 1 < T) out(t) -= beta * theta * delta(t + 1);
  }
  return out;
}

FiscalPaths fiscal_apply(const PolicyRegime& regime,
                         const CountryCalibration& country, int T) {
  FiscalPaths out;
  const auto G = country.groups.size();
  out.transfer.assign(G, Vec::Zero(T));
  out.tax = Vec::Zero(T);
  out.subsidy = Vec::Zero(T);

  const auto& tr = regime.transfer;
  const int dur = std::min(tr.duration, T);
  if (tr.kind != TransferSpec::Kind::none && tr.amount != 0.0) {
    std::vector<double> weight(G, 0.0);
    if (tr.kind == TransferSpec::Kind::uniform) {
      for (std::size_t g = 0; g < G; ++g) weight[g] = 1.0;
    } else {
      bool found = false;
      if (tr.target_group == "@bottom") {
        // the group with the largest essentials share stands in for the
        // bottom of the expenditure distribution
        std::size_t arg = 0;
        for (std::size_t g = 1; g < G; ++g)
          if (country.groups[g].alpha_e > country.groups[arg].alpha_e)
            arg = g;
        weight[arg] = 1.0;
        found = true;
      }
      for (std::size_t g = 0; !found && g < G; ++g)
        if (country.groups[g].label == tr.target_group) {
          weight[g] = 1.0;
          found = true;
        }
      if (!found)
        throw std::invalid_argument("transfer target group '" +
                                    tr.target_group + "' not in " +
                                    country.code);
    }
    // per-period outlay per capita, financed by an equal lump-sum tax
    double outlay = 0.0;
    for (std::size_t g = 0; g < G; ++g)
      outlay += country.groups[g].eta * weight[g] * tr.amount;
    for (int t = 0; t < dur; ++t) out.tax(t) = outlay;
    for (std::size_t g = 0; g < G; ++g)
      for (int t = 0; t < dur; ++t)
        out.transfer[g](t) = weight[g] * tr.amount - outlay;
  }
  if (regime.subsidy > 0.0) {
    // financed by a uniform lump-sum tax equal to the essentials outlay
    double abar_e = 0.0;
    for (const auto& g : country.groups) abar_e += g.eta * g.alpha_e;
    for (int t = 0; t < dur; ++t) {
      out.subsidy(t) = regime.subsidy;
      const double cost = regime.subsidy * abar_e;
      out.tax(t) += cost;
      for (std::size_t g = 0; g < G; ++g) out.transfer[g](t) -= cost;
    }
  }
  return out;
}

}  // namespace hankwedge::blocks
