#include "hankwedge/solver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <random>
#include <stdexcept>

#include "hankwedge/csv.hpp"

namespace hankwedge::solver {

namespace blk = hankwedge::blocks;
using blk::lag_op;
using blk::lead_op;

namespace {

// Linear functional of all unknown path blocks plus the essentials path,
// with a concrete exogenous remainder. The assembly walks the DAG forward,
// accumulating chain-rule products into these.
struct PathExpr {
  std::map<int, Mat> d;
  Vec z;

  explicit PathExpr(int T) : z(Vec::Zero(T)) {}
  static PathExpr block(int T, int b) {
    PathExpr e(T);
    e.d.emplace(b, Mat::Identity(T, T));
    return e;
  }
  PathExpr& add(const PathExpr& o, double c = 1.0) {
    for (const auto& [b, M] : o.d) {
      auto it = d.find(b);
      if (it == d.end())
        d.emplace(b, c * M);
      else
        it->second += c * M;
    }
    z += c * o.z;
    return *this;
  }
  PathExpr& add_z(const Vec& v, double c = 1.0) {
    z += c * v;
    return *this;
  }
  // e <- M e
  PathExpr& lmul(const Mat& M) {
    for (auto& [b, Mb] : d) Mb = M * Mb;
    z = M * z;
    return *this;
  }
  PathExpr& scale(double c) {
    for (auto& [b, Mb] : d) Mb *= c;
    z *= c;
    return *this;
  }
  Vec eval(const std::vector<Vec>& paths) const {
    Vec out = z;
    for (const auto& [b, M] : d) out.noalias() += M * paths[b];
    return out;
  }
};

struct GroupCoef {
  double eta, theta, phi, kappa, m;  // m = theta (1+phi)
  double alpha_e, alpha_d, alpha_s;
  Sector sector;
  double mpc;
};

struct CountryLayout {
  int first_block = 0;  // w blocks first, then p_d, p_s
  int n_groups = 0;
  int wage_block(int g) const { return first_block + g; }
  int pd_block() const { return first_block + n_groups; }
  int ps_block() const { return first_block + n_groups + 1; }
};

}  // namespace

struct System::Impl {
  int T = 0;
  int nb = 0;       // unknown blocks
  int u_block = 0;  // extra differentiation block for the essentials path
  const UnionCalibration* calib = nullptr;
  PolicyRegime regime;
  Indexation index;
  SolverOptions opt;
  std::shared_ptr<const HouseholdDemand> demand;

  std::vector<CountryLayout> layout;
  std::vector<std::vector<GroupCoef>> coef;  // per country per group
  std::vector<double> sigma_eff;             // analytic-IS curvature
  Mat D, Sp, Sm, CumF, Phi;
  std::vector<Mat> B;  // x response to the rate path, per country
  Eigen::PartialPivLU<Mat> M_lu;

  // HANK demand operators: income loop (I - J_y)^{-1} and input loadings
  Eigen::PartialPivLU<Mat> Gw_lu;
  Mat Bw, Br, BT;

  double cbar = 1.0;

  struct Intermediates {
    std::vector<std::vector<Vec>> pi_exp, pi_exp_barg, p_idx, pi_w;
    std::vector<Vec> avg_pi, avg_pi_barg, pi_core, pi_cpi, w_srv, w_gds, x,
        trade;
    Vec i, pi_core_union, x_union;
  };

  int rows() const { return nb * T; }

  std::vector<Vec> split(const Vec& U, const Vec& u) const {
    std::vector<Vec> paths(nb + 1);
    for (int b = 0; b < nb; ++b) paths[b] = U.segment(b * T, T);
    paths[nb] = u;
    return paths;
  }

  // ---- concrete forward pass ------------------------------------------

  Intermediates forward(const std::vector<Vec>& paths,
                        const ExogenousPaths& exog) const {
    const auto& cs = calib->countries;
    const std::size_t N = cs.size();
    Intermediates im;
    im.pi_exp.resize(N);
    im.pi_exp_barg.resize(N);
    im.p_idx.resize(N);
    im.pi_w.resize(N);
    im.avg_pi.resize(N);
    im.avg_pi_barg.resize(N);
    im.pi_core.resize(N);
    im.pi_cpi.resize(N);
    im.w_srv.resize(N);
    im.w_gds.resize(N);
    im.x.resize(N);
    im.trade.resize(N);

    const Vec& u = paths[u_block];
    std::vector<Vec> p_d_all(N);
    for (std::size_t c = 0; c < N; ++c)
      p_d_all[c] = paths[layout[c].pd_block()];

    for (std::size_t c = 0; c < N; ++c) {
      const auto& country = cs[c];
      const auto& L = layout[c];
      const int G = L.n_groups;
      const Vec p_e_eff = u - exog.fiscal[c].subsidy;
      const Vec& p_d = paths[L.pd_block()];
      const Vec& p_s = paths[L.ps_block()];

      im.pi_exp[c].resize(G);
      im.pi_exp_barg[c].resize(G);
      im.p_idx[c].resize(G);
      im.pi_w[c].resize(G);
      im.avg_pi[c] = Vec::Zero(T);
      im.avg_pi_barg[c] = Vec::Zero(T);
      double abar_e = 0.0, abar_d = 0.0, abar_s = 0.0;
      for (int g = 0; g < G; ++g) {
        const auto& gc = coef[c][g];
        const Vec& w = paths[L.wage_block(g)];
        im.pi_w[c][g] = blk::diff(w);
        im.pi_exp[c][g] = calib->common.lambda_e * gc.alpha_e *
                              blk::diff(p_e_eff) +
                          gc.alpha_d * blk::diff(p_d) +
                          gc.alpha_s * blk::diff(p_s);
        // cost-of-living compensation enters wage bargaining as the change
        // in the compensation level, in experienced-inflation units
        im.pi_exp_barg[c][g] =
            im.pi_exp[c][g] - blk::diff(exog.fiscal[c].transfer[g]) / cbar;
        im.p_idx[c][g] =
            gc.alpha_e * p_e_eff + gc.alpha_d * p_d + gc.alpha_s * p_s;
        im.avg_pi[c] += gc.eta * im.pi_exp[c][g];
        im.avg_pi_barg[c] += gc.eta * im.pi_exp_barg[c][g];
        abar_e += gc.eta * gc.alpha_e;
        abar_d += gc.eta * gc.alpha_d;
        abar_s += gc.eta * gc.alpha_s;
      }
      im.pi_core[c] = country.services.gdp_weight * blk::diff(p_s) +
                      country.goods.gdp_weight * blk::diff(p_d);
      im.pi_cpi[c] = blk::diff(abar_e * p_e_eff + abar_d * p_d + abar_s * p_s);

      double eta_srv = 0.0, eta_gds = 0.0;
      im.w_srv[c] = Vec::Zero(T);
      im.w_gds[c] = Vec::Zero(T);
      for (int g = 0; g < G; ++g) {
        const auto& gc = coef[c][g];
        if (gc.sector == Sector::services) {
          im.w_srv[c] += gc.eta * paths[L.wage_block(g)];
          eta_srv += gc.eta;
        } else {
          im.w_gds[c] += gc.eta * paths[L.wage_block(g)];
          eta_gds += gc.eta;
        }
      }
      Vec w_all = Vec::Zero(T);
      for (int g = 0; g < G; ++g)
        w_all += coef[c][g].eta * paths[L.wage_block(g)];
      im.w_srv[c] = eta_srv > 0.0 ? Vec(im.w_srv[c] / eta_srv) : w_all;
      im.w_gds[c] = eta_gds > 0.0 ? Vec(im.w_gds[c] / eta_gds) : w_all;
    }

    // trade demand enters the gap scaled by the goods GDP weight
    auto raw_demand = blk::trade_demand(
        cs, p_d_all, calib->common.eps_trade);
    for (std::size_t c = 0; c < N; ++c)
      im.trade[c] = cs[c].goods.gdp_weight * raw_demand[c];

    // demand block without the common-rate contribution
    std::vector<Vec> x_pre(N);
    for (std::size_t c = 0; c < N; ++c) {
      const auto& L = layout[c];
      if (opt.hank_demand) {
        const Vec& p_d = paths[L.pd_block()];
        const Vec& p_s = paths[L.ps_block()];
        const Vec p_e_eff = paths[u_block] - exog.fiscal[c].subsidy;
        // real-income wedge: GDP deflator minus the population CPI level
        double abar_e = 0.0, abar_d = 0.0, abar_s = 0.0;
        for (int g = 0; g < L.n_groups; ++g) {
          abar_e += coef[c][g].eta * coef[c][g].alpha_e;
          abar_d += coef[c][g].eta * coef[c][g].alpha_d;
          abar_s += coef[c][g].eta * coef[c][g].alpha_s;
        }
        const Vec q = cs[c].goods.gdp_weight * p_d +
                      cs[c].services.gdp_weight * p_s -
                      (abar_e * p_e_eff + abar_d * p_d + abar_s * p_s);
        // core-deflated Euler: with the natural rate held fixed, keeping
        // the exogenous essentials swing inside the Fisher term would count
        // the supply shock twice on the demand side
        Vec rhs = Br * Vec(-(Sp * im.pi_core[c])) + Bw * q + im.trade[c];
        for (int g = 0; g < L.n_groups; ++g)
          rhs += coef[c][g].eta * (BT * exog.fiscal[c].transfer[g]);
        x_pre[c] = Gw_lu.solve(rhs);
      } else {
        Vec zvec = (1.0 / sigma_eff[c]) * (Sp * im.pi_core[c]);
        for (int g = 0; g < L.n_groups; ++g)
          zvec += coef[c][g].eta * coef[c][g].mpc *
                  exog.fiscal[c].transfer[g];
        x_pre[c] = im.trade[c] + CumF * zvec;
      }
    }

    Vec rhs = Vec::Zero(T);
    im.pi_core_union = Vec::Zero(T);
    for (std::size_t c = 0; c < N; ++c) {
      im.pi_core_union += cs[c].gdp_weight * im.pi_core[c];
      rhs += regime.taylor_y * cs[c].gdp_weight * x_pre[c];
    }
    rhs += Phi * im.pi_core_union;
    im.i = M_lu.solve(rhs);

    im.x_union = Vec::Zero(T);
    for (std::size_t c = 0; c < N; ++c) {
      im.x[c] = B[c] * im.i + x_pre[c];
      im.x_union += cs[c].gdp_weight * im.x[c];
    }
    return im;
  }

  // Derivative of the catch-up term at given paths, added on top of F_X.
  // The active-set pattern and the exp factor vary little across iterations,
  // so one augmentation at the linear solution is enough for the
  // quasi-Newton step to contract.
  void augment_catchup(Mat& J, const std::vector<Vec>& paths,
                       const ExogenousPaths& exog) const {
    const double bprime = calib->common.b_catchup;
    if (bprime == 0.0) return;
    const Vec& u = paths[u_block];
    for (std::size_t c = 0; c < calib->countries.size(); ++c) {
      const auto& L = layout[c];
      const Vec p_e_eff = u - exog.fiscal[c].subsidy;
      for (int g = 0; g < L.n_groups; ++g) {
        const auto& gc = coef[c][g];
        const Vec& w = paths[L.wage_block(g)];
        const Vec p_idx = gc.alpha_e * p_e_eff +
                          gc.alpha_d * paths[L.pd_block()] +
                          gc.alpha_s * paths[L.ps_block()];
        const int row0 = L.wage_block(g) * T;
        const double beta = calib->common.beta;
        const double Theta = 1.0 - gc.theta;
        for (int t = 0; t < T; ++t) {
          const double w_prev = t > 0 ? w(t - 1) : 0.0;
          const double gap = p_idx(t) - w_prev;
          if (gap <= 0.0) continue;
          const double slope = bprime * std::expm1(gap);
          // residual -= theta/Theta Delta_t - beta theta Delta_{t+1} with
          // dDelta_t/dp_idx_t = slope, dDelta_t/dw_{t-1} = -slope
          const double c_now = gc.theta / Theta * slope;
          J(row0 + t, L.pd_block() * T + t) -= c_now * gc.alpha_d;
          J(row0 + t, L.ps_block() * T + t) -= c_now * gc.alpha_s;
          if (t > 0) J(row0 + t, L.wage_block(g) * T + t - 1) += c_now;
          if (t > 0) {
            const double c_next = beta * gc.theta * slope;
            J(row0 + t - 1, L.pd_block() * T + t) += c_next * gc.alpha_d;
            J(row0 + t - 1, L.ps_block() * T + t) += c_next * gc.alpha_s;
            J(row0 + t - 1, L.wage_block(g) * T + t - 1) -= c_next;
          }
        }
      }
    }
  }

  Vec stack_residuals(const std::vector<Vec>& paths, const ExogenousPaths& exog,
                      const Intermediates& im, bool nonlinear) const {
    const auto& cs = calib->countries;
    Vec R(rows());
    // the gap enters each type's kappa_g term one for one, so the aggregate
    // marginal-cost term is exactly kappa_tilde * x
    const double sx = 1.0;
    for (std::size_t c = 0; c < cs.size(); ++c) {
      const auto& L = layout[c];
      const Vec omega_hat = sx * im.x[c];
      for (int g = 0; g < L.n_groups; ++g) {
        const auto& gc = coef[c][g];
        blk::WagePcParams wp;
        wp.beta = calib->common.beta;
        wp.theta = gc.theta;
        wp.phi = gc.phi;
        wp.indexation = index;
        Vec res = blk::type_wage_pc_residual(wp, im.pi_w[c][g], omega_hat,
                                             im.pi_exp_barg[c][g],
                                             im.pi_exp[c][g], im.avg_pi[c]);
        if (nonlinear && calib->common.b_catchup != 0.0)
          res -= blk::catchup_term(gc.theta, calib->common.beta,
                                   calib->common.b_catchup, im.p_idx[c][g],
                                   paths[L.wage_block(g)]);
        R.segment(L.wage_block(g) * T, T) = res;
      }
      for (Sector s : {Sector::goods, Sector::services}) {
        const auto& sp = cs[c].sector(s);
        blk::SectorPcParams pp;
        pp.beta = calib->common.beta;
        pp.calvo_reset = sp.calvo_reset;
        pp.labor_share = sp.labor_share;
        pp.xi_services = sp.xi_services;
        pp.xi_goods = sp.xi_goods;
        pp.xi_essentials = sp.xi_essentials;
        const Vec& own =
            paths[s == Sector::goods ? L.pd_block() : L.ps_block()];
        const Vec& wage = s == Sector::goods ? im.w_gds[c] : im.w_srv[c];
        const Vec zero = Vec::Zero(T);
        Vec res = blk::sector_price_residual(
            pp, own, wage, paths[L.ps_block()], paths[L.pd_block()],
            paths[u_block], zero);
        const int row = s == Sector::goods ? L.pd_block() : L.ps_block();
        R.segment(row * T, T) = res;
      }
    }
    return R;
  }

  // ---- operator-composition pass (mirrors forward() symbolically) ------

  void assemble(Mat& F_X, Mat& F_Z, Vec& z0, const ExogenousPaths& exog) {
    const auto& cs = calib->countries;
    const std::size_t N = cs.size();
    const Mat I = Mat::Identity(T, T);
    const Mat Dm = blk::diff_op(T);

    std::vector<std::vector<PathExpr>> pi_exp(N), pi_exp_barg(N), p_idx(N);
    std::vector<PathExpr> avg_pi, pi_core, pi_cpi, w_srv, w_gds, trade, x_pre;
    avg_pi.assign(N, PathExpr(T));
    pi_core.assign(N, PathExpr(T));
    pi_cpi.assign(N, PathExpr(T));
    w_srv.assign(N, PathExpr(T));
    w_gds.assign(N, PathExpr(T));
    trade.assign(N, PathExpr(T));
    x_pre.assign(N, PathExpr(T));

    for (std::size_t c = 0; c < N; ++c) {
      const auto& L = layout[c];
      const int G = L.n_groups;
      PathExpr p_e_eff = PathExpr::block(T, u_block);
      p_e_eff.add_z(exog.fiscal[c].subsidy, -1.0);

      double abar_e = 0.0, abar_d = 0.0, abar_s = 0.0;
      for (int g = 0; g < G; ++g) {
        const auto& gc = coef[c][g];
        PathExpr pe(T);
        pe.add(p_e_eff, calib->common.lambda_e * gc.alpha_e);
        pe.d[L.pd_block()] = gc.alpha_d * I;
        pe.d[L.ps_block()] = gc.alpha_s * I;
        pe.lmul(Dm);
        pi_exp[c].push_back(pe);
        PathExpr peb = pe;
        peb.add_z(blk::diff(exog.fiscal[c].transfer[g]), -1.0 / cbar);
        pi_exp_barg[c].push_back(peb);

        PathExpr pi(T);
        pi.add(p_e_eff, gc.alpha_e);
        pi.d[L.pd_block()] = gc.alpha_d * I;
        pi.d[L.ps_block()] = gc.alpha_s * I;
        p_idx[c].push_back(pi);

        avg_pi[c].add(pe, gc.eta);
        abar_e += gc.eta * gc.alpha_e;
        abar_d += gc.eta * gc.alpha_d;
        abar_s += gc.eta * gc.alpha_s;
      }
      pi_core[c].d[L.ps_block()] = cs[c].services.gdp_weight * Dm;
      pi_core[c].d[L.pd_block()] = cs[c].goods.gdp_weight * Dm;
      pi_cpi[c].add(p_e_eff, abar_e);
      pi_cpi[c].d[L.pd_block()] = abar_d * I;
      pi_cpi[c].d[L.ps_block()] = abar_s * I;
      pi_cpi[c].lmul(Dm);

      double eta_srv = 0.0, eta_gds = 0.0;
      for (int g = 0; g < G; ++g) {
        if (coef[c][g].sector == Sector::services)
          eta_srv += coef[c][g].eta;
        else
          eta_gds += coef[c][g].eta;
      }
      for (int g = 0; g < G; ++g) {
        const auto& gc = coef[c][g];
        if (gc.sector == Sector::services && eta_srv > 0.0)
          w_srv[c].d[L.wage_block(g)] = (gc.eta / eta_srv) * I;
        if (gc.sector == Sector::goods && eta_gds > 0.0)
          w_gds[c].d[L.wage_block(g)] = (gc.eta / eta_gds) * I;
        if (eta_srv == 0.0) w_srv[c].d[L.wage_block(g)] = gc.eta * I;
        if (eta_gds == 0.0) w_gds[c].d[L.wage_block(g)] = gc.eta * I;
      }
    }

    for (std::size_t c = 0; c < N; ++c) {
      for (std::size_t k = 0; k < N; ++k) {
        if (k == c) continue;
        auto it = cs[c].trade_shares.find(cs[k].code);
        if (it == cs[c].trade_shares.end()) continue;
        const double w =
            calib->common.eps_trade * cs[c].goods.gdp_weight * it->second;
        auto add_to = [&](int b, double coefv) {
          auto f = trade[c].d.find(b);
          if (f == trade[c].d.end())
            trade[c].d.emplace(b, coefv * I);
          else
            f->second += coefv * I;
        };
        add_to(layout[k].pd_block(), w);
        add_to(layout[c].pd_block(), -w);
      }
    }

    for (std::size_t c = 0; c < N; ++c) {
      const auto& L = layout[c];
      if (opt.hank_demand) {
        PathExpr p_e_eff = PathExpr::block(T, u_block);
        p_e_eff.add_z(exog.fiscal[c].subsidy, -1.0);
        double abar_e = 0.0, abar_d = 0.0, abar_s = 0.0;
        for (int g = 0; g < L.n_groups; ++g) {
          abar_e += coef[c][g].eta * coef[c][g].alpha_e;
          abar_d += coef[c][g].eta * coef[c][g].alpha_d;
          abar_s += coef[c][g].eta * coef[c][g].alpha_s;
        }
        PathExpr q(T);
        q.add(p_e_eff, -abar_e);
        auto addq = [&](int b, double coefv) {
          auto f = q.d.find(b);
          if (f == q.d.end())
            q.d.emplace(b, coefv * I);
          else
            f->second += coefv * I;
        };
        addq(L.pd_block(), cs[c].goods.gdp_weight - abar_d);
        addq(L.ps_block(), cs[c].services.gdp_weight - abar_s);

        PathExpr rhs = pi_core[c];
        rhs.lmul(Sp).scale(-1.0).lmul(Br);
        rhs.add(PathExpr(q).lmul(Bw));
        rhs.add(trade[c]);
        for (int g = 0; g < L.n_groups; ++g)
          rhs.add_z(BT * exog.fiscal[c].transfer[g], coef[c][g].eta);
        for (auto& [b, Mb] : rhs.d) Mb = Gw_lu.solve(Mb);
        rhs.z = Gw_lu.solve(rhs.z);
        x_pre[c] = std::move(rhs);
      } else {
        PathExpr zexpr = pi_core[c];
        zexpr.lmul(Sp).scale(1.0 / sigma_eff[c]);
        for (int g = 0; g < L.n_groups; ++g)
          zexpr.add_z(exog.fiscal[c].transfer[g],
                      coef[c][g].eta * coef[c][g].mpc);
        x_pre[c].add(trade[c]);
        x_pre[c].add(zexpr.lmul(CumF));
      }
    }

    PathExpr pi_core_u(T), rhs(T);
    for (std::size_t c = 0; c < N; ++c) {
      pi_core_u.add(pi_core[c], cs[c].gdp_weight);
      rhs.add(x_pre[c], regime.taylor_y * cs[c].gdp_weight);
    }
    rhs.add(PathExpr(pi_core_u).lmul(Phi));
    PathExpr i_expr = rhs;
    {  // apply M^{-1}
      for (auto& [b, Mb] : i_expr.d) Mb = M_lu.solve(Mb);
      i_expr.z = M_lu.solve(i_expr.z);
    }

    std::vector<PathExpr> x(N, PathExpr(T));
    for (std::size_t c = 0; c < N; ++c) {
      x[c] = PathExpr(i_expr).lmul(B[c]);
      x[c].add(x_pre[c]);
    }

    // residual rows
    F_X = Mat::Zero(rows(), rows());
    F_Z = Mat::Zero(rows(), T);
    z0 = Vec::Zero(rows());
    const double sx = 1.0;  // gap coupling, see stack_residuals
    const double beta = calib->common.beta;
    const double gam = index.gamma;

    auto emit = [&](int row_block, const PathExpr& e) {
      for (const auto& [b, M] : e.d) {
        if (b == u_block)
          F_Z.middleRows(row_block * T, T) += M;
        else
          F_X.block(row_block * T, b * T, T, T) += M;
      }
      z0.segment(row_block * T, T) += e.z;
    };
    (void)0;

    for (std::size_t c = 0; c < N; ++c) {
      const auto& L = layout[c];
      for (int g = 0; g < L.n_groups; ++g) {
        const auto& gc = coef[c][g];
        PathExpr res(T);
        PathExpr pi_w = PathExpr::block(T, L.wage_block(g));
        pi_w.lmul(Dm);
        res.add(PathExpr(pi_w).lmul(Mat(I - beta * Sp)));
        res.add(PathExpr(x[c]).scale(-gc.kappa * sx));
        switch (index.kind) {
          case Indexation::Kind::none:
            res.add(pi_exp_barg[c][g], -gc.m);
            break;
          case Indexation::Kind::cpi:
            res.add(PathExpr(avg_pi[c]).lmul(Mat(gam * (beta * I - Sm))));
            res.add(pi_exp_barg[c][g], -gc.m);
            res.add(avg_pi[c], gc.m * gam);
            break;
          case Indexation::Kind::type_specific:
            res.add(PathExpr(pi_exp[c][g]).lmul(Mat(gam * (beta * I - Sm))));
            res.add(pi_exp_barg[c][g], -gc.m * (1.0 - gam));
            break;
        }
        emit(L.wage_block(g), res);
      }
      for (Sector s : {Sector::goods, Sector::services}) {
        const auto& sp = cs[c].sector(s);
        blk::SectorPcParams pp;
        pp.beta = beta;
        pp.calvo_reset = sp.calvo_reset;
        pp.labor_share = sp.labor_share;
        const double kp = pp.kappa_p();
        const int own = s == Sector::goods ? L.pd_block() : L.ps_block();
        PathExpr res = PathExpr::block(T, own);
        res.lmul(Mat((I - beta * Sp) * Dm));
        PathExpr mc(T);
        mc.add(s == Sector::goods ? w_gds[c] : w_srv[c], sp.labor_share);
        const double il = 1.0 - sp.labor_share;
        auto addp = [&](int b, double coefv) {
          auto f = mc.d.find(b);
          if (f == mc.d.end())
            mc.d.emplace(b, coefv * I);
          else
            f->second += coefv * I;
        };
        addp(L.ps_block(), il * sp.xi_services);
        addp(L.pd_block(), il * sp.xi_goods);
        addp(u_block, il * sp.xi_essentials);
        addp(own, -1.0);
        res.add(mc, -kp);
        emit(own, res);
      }
    }
  }
};

// ---------------------------------------------------------------------------

HouseholdDemand build_household_demand(const CommonParams& common,
                                       const SolverOptions& opt,
                                       std::uint64_t calib_key) {
  hh::HouseholdParams p;
  p.beta = common.beta;
  p.sigma = common.sigma;
  p.r_ss = common.r_ss;
  p.wage = 1.0;
  p.income = hh::rouwenhorst(common.rho_e, common.sigma_e, common.n_e);
  p.grid = hh::AssetGrid::make(common.n_a, common.a_max);

  HouseholdDemand d;
  d.ss = hh::solve_steady_state(p);
  d.mpc = d.ss.mpc;

  const int Th = std::max(opt.household_T, opt.T);
  hh::JacobianSet js;
  const std::string cache = opt.cache_dir;
  if (!cache.empty() && hh::load_cached_jacobians(cache, calib_key, Th, js)) {
    // cache hit
  } else {
    js = hh::fake_news_jacobians(d.ss, Th);
    if (!cache.empty()) hh::store_cached_jacobians(cache, calib_key, js);
  }
  const int T = opt.T;
  d.C_r = js.C_r.topLeftCorner(T, T);
  d.C_w = js.C_w.topLeftCorner(T, T);
  d.C_T = js.C_T.topLeftCorner(T, T);
  d.A_r = js.A_r.topLeftCorner(T, T);
  d.A_w = js.A_w.topLeftCorner(T, T);
  d.A_T = js.A_T.topLeftCorner(T, T);
  return d;
}

System::System(const UnionCalibration& calib, const PolicyRegime& regime,
               const Indexation& indexation, const SolverOptions& opt,
               std::shared_ptr<const HouseholdDemand> demand)
    : calib_(&calib), regime_(regime), index_(indexation), opt_(opt) {
  if (opt.hank_demand && !demand)
    throw std::invalid_argument(
        "HANK demand mode needs household Jacobians (or select analytic-IS)");

  impl_ = std::make_shared<Impl>();
  Impl& im = *impl_;
  im.T = opt.T;
  im.calib = calib_;
  im.regime = regime_;
  im.index = index_;
  im.opt = opt_;
  im.demand = demand;

  const int T = opt.T;
  int off = 0;
  for (const auto& c : calib.countries) {
    CountryLayout L;
    L.first_block = off;
    L.n_groups = static_cast<int>(c.groups.size());
    im.layout.push_back(L);
    off += L.n_groups + 2;

    std::vector<GroupCoef> gs;
    for (const auto& g : c.groups) {
      GroupCoef gc;
      gc.eta = g.eta;
      gc.theta = g.theta;
      gc.phi = g.phi;
      const double Theta = 1.0 - g.theta;
      gc.kappa = g.theta * (1.0 - calib.common.beta * Theta) / Theta;
      gc.m = g.theta * (1.0 + g.phi);
      gc.alpha_e = g.alpha_e;
      gc.alpha_d = g.alpha_d;
      gc.alpha_s = g.alpha_s;
      gc.sector = g.sector;
      gc.mpc = g.mpc ? *g.mpc : (demand ? demand->mpc : 0.0);
      gs.push_back(gc);
    }
    im.coef.push_back(std::move(gs));
    im.sigma_eff.push_back(calib.common.sigma);
  }
  im.nb = off;
  im.u_block = off;
  n_ = off * T;

  im.D = blk::diff_op(T);
  im.Sp = lead_op(T);
  im.Sm = lag_op(T);
  im.CumF = Mat::Zero(T, T);
  for (int t = 0; t < T; ++t)
    for (int s = t; s < T; ++s) im.CumF(t, s) = 1.0;
  im.Phi = Mat::Zero(T, T);
  for (int t = 0; t < T; ++t) im.Phi(t, t) = regime.phi_pi_at(t);

  im.cbar = opt.hank_demand ? demand->ss.C_ss : 1.0;
  const Mat I = Mat::Identity(T, T);
  if (opt.hank_demand) {
    // goods-market closure: household income moves with aggregate output,
    // so consumption solves (I - J_y) x = J_r r + J_y q + J_T transfers,
    // with q the real-income wedge between the GDP deflator and the CPI
    im.Gw_lu.compute(I - (1.0 / im.cbar) * demand->C_w);
    im.Bw = (1.0 / im.cbar) * demand->C_w;
    im.Br = (1.0 / im.cbar) * demand->C_r;
    im.BT = (1.0 / im.cbar) * demand->C_T;
  }
  Mat Bsum = Mat::Zero(T, T);
  for (std::size_t c = 0; c < calib.countries.size(); ++c) {
    Mat Bc = opt.hank_demand ? Mat(im.Gw_lu.solve(im.Br))
                             : Mat(-(1.0 / im.sigma_eff[c]) * im.CumF);
    Bsum += calib.countries[c].gdp_weight * Bc;
    im.B.push_back(std::move(Bc));
  }
  im.M_lu.compute(I - regime.taylor_y * Bsum);

  ExogenousPaths dummy;
  dummy.u = Vec::Zero(T);
  dummy.fiscal.resize(calib.countries.size());
  for (std::size_t c = 0; c < calib.countries.size(); ++c) {
    PolicyRegime none;
    dummy.fiscal[c] =
        blk::fiscal_apply(none, calib.countries[c], T);
  }
  im.assemble(F_X_, F_Z_, z0_, dummy);

  lu_.compute(F_X_);

  // cheap condition estimate: a couple of solves against random unit-norm
  // vectors, plus a residual check that flags outright singularity
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> Nd(0.0, 1.0);
  Vec b(n_);
  for (int k = 0; k < n_; ++k) b(k) = Nd(rng);
  b /= b.lpNorm<Eigen::Infinity>();
  Vec y = lu_.solve(b);
  const double resid = (F_X_ * y - b).lpNorm<Eigen::Infinity>();
  singular_ = !(resid < 1e-6) || !y.allFinite();
  const double nf = F_X_.lpNorm<Eigen::Infinity>();
  rcond_ = singular_ ? 0.0
                     : 1.0 / std::max(1.0, nf * y.lpNorm<Eigen::Infinity>());

  // Indeterminacy guard. Truncation pins the transition through initial and
  // terminal conditions even when policy never responds, but the limit model
  // has no nominal anchor with phi_pi = phi_y = 0 held forever; refuse to
  // report such a transition as an equilibrium.
  const double phi_pi_tail =
      regime.taylor_pi_path.empty() ? 0.0 : regime.taylor_pi_path.back();
  if (phi_pi_tail == 0.0 && regime.taylor_y == 0.0) singular_ = true;
}

Vec System::residuals(const Vec& U, const ExogenousPaths& exog,
                      bool nonlinear) const {
  const auto paths = impl_->split(U, exog.u);
  const auto im = impl_->forward(paths, exog);
  return impl_->stack_residuals(paths, exog, im, nonlinear);
}

ExogenousPaths System::make_exog(const ShockScenario& scenario) const {
  ExogenousPaths e;
  const int T = opt_.T;
  e.u = Vec::Zero(T);
  for (int t = 0; t < T && t < static_cast<int>(scenario.essentials_path.size());
       ++t)
    e.u(t) = scenario.essentials_path[t];
  for (const auto& c : calib_->countries)
    e.fiscal.push_back(blk::fiscal_apply(scenario.policy, c, T));
  return e;
}

TransitionResult System::result_from_unknowns(const Vec& U,
                                              const ExogenousPaths& exog) const {
  const Impl& im = *impl_;
  const auto paths = im.split(U, exog.u);
  const auto f = im.forward(paths, exog);

  TransitionResult out;
  out.T = opt_.T;
  out.i_union = f.i;
  out.pi_core_union = f.pi_core_union;
  out.x_union = f.x_union;

  // ex-post consistency of the implicit policy block
  Vec taylor = blk::taylor_rate(regime_, f.pi_core_union, f.x_union);
  out.policy_residual = (f.i - taylor).lpNorm<Eigen::Infinity>();

  for (std::size_t c = 0; c < calib_->countries.size(); ++c) {
    const auto& country = calib_->countries[c];
    const auto& L = im.layout[c];
    CountryResult r;
    r.code = country.code;
    for (int g = 0; g < L.n_groups; ++g)
      r.wages.push_back(paths[L.wage_block(g)]);
    r.p_d = paths[L.pd_block()];
    r.p_s = paths[L.ps_block()];
    r.pi_core = f.pi_core[c];
    r.x = f.x[c];
    r.avg_pi = f.avg_pi[c];
    r.pi_exp = f.pi_exp[c];
    r.pi_w = Vec::Zero(opt_.T);
    for (int g = 0; g < L.n_groups; ++g)
      r.pi_w += im.coef[c][g].eta * f.pi_w[c][g];

    const double tb = country.theta_bar();
    r.rwei = Vec::Zero(opt_.T);
    for (int g = 0; g < L.n_groups; ++g)
      r.rwei += im.coef[c][g].eta * im.coef[c][g].theta / tb * f.pi_exp[c][g];
    r.omega = r.rwei - r.avg_pi;
    r.wedge_term = Vec::Zero(opt_.T);
    const double wedge_scale = index_.kind == Indexation::Kind::type_specific
                                   ? 1.0 - index_.gamma
                                   : 1.0;
    for (int g = 0; g < L.n_groups; ++g)
      r.wedge_term += wedge_scale * im.coef[c][g].eta * im.coef[c][g].m *
                      (f.pi_exp_barg[c][g] - f.avg_pi_barg[c]);
    out.countries.push_back(std::move(r));
  }
  return out;
}

TransitionResult System::solve_linear(const ExogenousPaths& exog) const {
  if (singular_)
    throw std::runtime_error(
        "singular sequence-space system (condition estimate " +
        std::to_string(rcond_) + "); no determinate transition");
  // fiscal paths enter the residual stack linearly but outside F_Z, so the
  // affine constant comes from one evaluation at U = 0
  Vec base = residuals(Vec::Zero(n_), exog, false);
  Vec U = lu_.solve(-base);
  TransitionResult out = result_from_unknowns(U, exog);
  out.iterations = 1;
  out.residual_norm = residuals(U, exog, false).lpNorm<Eigen::Infinity>();
  out.nonlinear = false;
  return out;
}

TransitionResult System::solve_nonlinear(const ExogenousPaths& exog) const {
  if (singular_)
    throw std::runtime_error(
        "singular sequence-space system (condition estimate " +
        std::to_string(rcond_) + "); no determinate transition");
  Vec U = lu_.solve(-residuals(Vec::Zero(n_), exog, false));

  // Newton matrix: F_X plus the catch-up slopes at the linear solution,
  // factorized once and reused across iterations. The plain F_X step does
  // not contract here: the wage-level response to a persistent wage-push
  // residual is two orders of magnitude larger than the push itself.
  Mat J = F_X_;
  impl_->augment_catchup(J, impl_->split(U, exog.u), exog);
  Eigen::PartialPivLU<Mat> lu_nl(J);

  double hnorm = residuals(U, exog, true).lpNorm<Eigen::Infinity>();
  int it = 0;
  for (; it < opt_.qn_max_iter && std::isfinite(hnorm); ++it) {
    Vec H = residuals(U, exog, true);
    hnorm = H.lpNorm<Eigen::Infinity>();
    if (hnorm < opt_.qn_tol) break;
    const Vec dU = lu_nl.solve(H);
    double step = hnorm > opt_.qn_damping_threshold ? opt_.qn_damping : 1.0;
    // backtracking safeguard
    double next = hnorm;
    for (int bt = 0; bt < 10; ++bt) {
      next = residuals(U - step * dU, exog, true).lpNorm<Eigen::Infinity>();
      if (std::isfinite(next) && next < hnorm) break;
      step *= 0.5;
    }
    U -= step * dU;
    // slow progress means the catch-up active set drifted away from the
    // point the Newton matrix was built at; rebuild it there and retry
    if (std::isfinite(next) && next > 0.5 * hnorm && next >= opt_.qn_tol) {
      J = F_X_;
      impl_->augment_catchup(J, impl_->split(U, exog.u), exog);
      lu_nl.compute(std::move(J));
    }
    hnorm = next;
  }
  if (!(hnorm < opt_.qn_tol))
    throw std::runtime_error(
        "quasi-Newton did not reach tolerance; final residual " +
        std::to_string(hnorm));
  TransitionResult out = result_from_unknowns(U, exog);
  out.iterations = it + 1;
  out.residual_norm = hnorm;
  out.nonlinear = true;
  return out;
}

TransitionResult System::solve_pinned_prices(
    const ExogenousPaths& exog, const std::vector<Vec>& p_d,
    const std::vector<Vec>& p_s) const {
  const Impl& im = *impl_;
  const int T = opt_.T;
  const std::size_t N = calib_->countries.size();
  if (p_d.size() != N || p_s.size() != N)
    throw std::invalid_argument("pinned prices: one path pair per country");

  std::vector<int> wage_blocks;
  for (std::size_t c = 0; c < N; ++c)
    for (int g = 0; g < im.layout[c].n_groups; ++g)
      wage_blocks.push_back(im.layout[c].wage_block(g));
  const int nw = static_cast<int>(wage_blocks.size());

  Vec U = Vec::Zero(n_);
  for (std::size_t c = 0; c < N; ++c) {
    U.segment(im.layout[c].pd_block() * T, T) = p_d[c];
    U.segment(im.layout[c].ps_block() * T, T) = p_s[c];
  }

  // residuals at zero wages with pinned prices give the reduced-system rhs
  Vec base = residuals(U, exog, false);
  Mat A(nw * T, nw * T);
  Vec rhs(nw * T);
  for (int i = 0; i < nw; ++i) {
    rhs.segment(i * T, T) = -base.segment(wage_blocks[i] * T, T);
    for (int j = 0; j < nw; ++j)
      A.block(i * T, j * T, T, T) =
          F_X_.block(wage_blocks[i] * T, wage_blocks[j] * T, T, T);
  }
  Vec w = Eigen::PartialPivLU<Mat>(A).solve(rhs);
  for (int i = 0; i < nw; ++i)
    U.segment(wage_blocks[i] * T, T) = w.segment(i * T, T);

  TransitionResult out = result_from_unknowns(U, exog);
  out.iterations = 1;
  Vec res = residuals(U, exog, false);
  double mx = 0.0;
  for (int i = 0; i < nw; ++i)
    mx = std::max(mx,
                  res.segment(wage_blocks[i] * T, T).lpNorm<Eigen::Infinity>());
  out.residual_norm = mx;
  return out;
}

TransitionResult solve(const UnionCalibration& calib,
                       const ShockScenario& scenario, const SolverOptions& opt,
                       std::shared_ptr<const HouseholdDemand> demand) {
  System sys(calib, scenario.policy, scenario.indexation, opt, demand);
  const auto exog = sys.make_exog(scenario);
  return scenario.nonlinear ? sys.solve_nonlinear(exog)
                            : sys.solve_linear(exog);
}

UnionCalibration standard_twin_union(const UnionCalibration& calib) {
  UnionCalibration twin = calib;
  twin.common.b_catchup = 0.0;
  for (auto& c : twin.countries) c = standard_twin(c);
  return twin;
}

TransitionResult run_standard_twin(const UnionCalibration& calib,
                                   const ShockScenario& scenario,
                                   const SolverOptions& opt,
                                   std::shared_ptr<const HouseholdDemand> demand) {
  return solve(standard_twin_union(calib), scenario, opt, demand);
}

void write_result_csv(const TransitionResult& r, const std::string& path) {
  csv::Writer w(path);
  w.row("country", "variable", "quarter", "value");
  auto series = [&](const std::string& cc, const std::string& var,
                    const Vec& v) {
    for (int t = 0; t < v.size(); ++t) w.row(cc, var, t, v(t));
  };
  series("union", "i", r.i_union);
  series("union", "pi_core", r.pi_core_union);
  series("union", "x", r.x_union);
  for (const auto& c : r.countries) {
    series(c.code, "pi_core", c.pi_core);
    series(c.code, "pi_w", c.pi_w);
    series(c.code, "x", c.x);
    series(c.code, "omega", c.omega);
    series(c.code, "rwei", c.rwei);
    series(c.code, "avg_pi", c.avg_pi);
    series(c.code, "p_d", c.p_d);
    series(c.code, "p_s", c.p_s);
  }
}

void write_result_json(const TransitionResult& r, const std::string& path) {
  nlohmann::json j;
  j["T"] = r.T;
  j["iterations"] = r.iterations;
  j["residual_norm"] = r.residual_norm;
  j["policy_residual"] = r.policy_residual;
  j["nonlinear"] = r.nonlinear;
  auto vec = [](const Vec& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  j["union"] = {{"i", vec(r.i_union)},
                {"pi_core", vec(r.pi_core_union)},
                {"x", vec(r.x_union)}};
  for (const auto& c : r.countries) {
    nlohmann::json jc;
    jc["pi_core"] = vec(c.pi_core);
    jc["pi_w"] = vec(c.pi_w);
    jc["x"] = vec(c.x);
    jc["omega"] = vec(c.omega);
    jc["rwei"] = vec(c.rwei);
    jc["avg_pi"] = vec(c.avg_pi);
    j["countries"][c.code] = std::move(jc);
  }
  std::ofstream out(path);
  out << j.dump(2) << "\n";
}

}  // namespace hankwedge::solver
