#pragma once
#include <Eigen/Dense>
#include <vector>

#include "hankwedge/calibration.hpp"

// Analytic sequence-space blocks. Every function here is linear in its path
// arguments (the catch-up term being the one deliberate exception) and has a
// closed-form T x T Jacobian built from lag/lead/diagonal operators.
namespace hankwedge::blocks {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// ---- path operators --------------------------------------------------------

// (lag v)_t = v_{t-1}, zero at t=0 (steady state before the shock)
Mat lag_op(int T);
// (lead v)_t = v_{t+1}, zero at t=T-1 (back at steady state after T)
Mat lead_op(int T);
// first difference I - lag: log level -> inflation
Mat diff_op(int T);

Vec lag(const Vec& v);
Vec lead(const Vec& v);
Vec diff(const Vec& v);

// ---- wage Phillips curve ---------------------------------------------------

struct WagePcParams {
  double beta = 0.99;
  double theta = 0.25;  // wage reset probability
  double phi = 0.0;     // expectation sensitivity
  Indexation indexation;

  double kappa() const {
    const double Theta = 1.0 - theta;
    return theta * (1.0 - beta * Theta) / Theta;
  }
  // experienced-inflation coefficient; expectation feedback scales it
  double exp_coef() const { return theta * (1.0 + phi); }
};

WagePcParams apply_indexation(const Indexation& mode, WagePcParams base);

// Residual of the type wage Phillips curve, all paths length T:
//   pi_w_t - beta pi_w_{t+1} - kappa omega_hat_t - theta(1+phi) pi_exp_t
// adjusted by the indexation mode. `pi_exp_barg` is experienced inflation
// net of any cost-of-living transfer offset; `pi_exp_own` and `avg_pi` feed
// the indexation terms.
Vec type_wage_pc_residual(const WagePcParams& p, const Vec& pi_w,
                          const Vec& omega_hat, const Vec& pi_exp_barg,
                          const Vec& pi_exp_own, const Vec& avg_pi);

struct WagePcDecomposition {
  Vec aggregate_residual;
  Vec gap_term;         // sum_g eta_g kappa_g omega_hat
  Vec level_term;       // (sum_g eta_g m_g) avg_pi
  Vec wedge_term;       // sum_g eta_g m_g (pi_exp_g - avg_pi), as applied
  Vec wedge_term_base;  // theta_bar * Omega, amplifier factored out
};

// Population aggregation of the type residuals plus the level/composition
// split of the experienced-inflation term.
WagePcDecomposition aggregate_wage_pc(const CountryCalibration& country,
                                      const CommonParams& common,
                                      const Indexation& mode,
                                      const std::vector<Vec>& pi_w,
                                      const Vec& omega_hat,
                                      const std::vector<Vec>& pi_exp_barg,
                                      const std::vector<Vec>& pi_exp_own,
                                      const Vec& avg_pi);

// E_g[pi_{t+1}] = common signal + phi * experienced inflation
Vec expected_inflation(const Vec& pi_bar, const Vec& pi_exp, double phi);

// ---- sectoral pricing ------------------------------------------------------

struct SectorPcParams {
  double beta = 0.99;
  double calvo_reset = 0.25;  // price reset probability
  double labor_share = 0.5;
  double xi_services = 0.0;
  double xi_goods = 0.0;
  double xi_essentials = 0.0;

  // slope of the sectoral Phillips curve in terms of the stickiness
  // probability 1 - calvo_reset
  double kappa_p() const {
    const double stick = 1.0 - calvo_reset;
    return calvo_reset * (1.0 - beta * stick) / stick;
  }
};

Vec sector_marginal_cost(const SectorPcParams& p, const Vec& wage,
                         const Vec& p_s, const Vec& p_d, const Vec& p_e);

// pi_j - beta pi_j' - kappa_p mc_j (- cost_shift); p_own selects this
// sector's price among (p_s, p_d).
Vec sector_price_residual(const SectorPcParams& p, const Vec& p_own,
                          const Vec& wage, const Vec& p_s, const Vec& p_d,
                          const Vec& p_e, const Vec& cost_shift);

// ---- demand and policy -----------------------------------------------------

// x_t - x_{t+1} + (1/sigma)(i_t - pi_{t+1} - r_n_t)
Vec is_residual(double sigma, const Vec& x, const Vec& i, const Vec& pi,
                const Vec& r_n);

// i_t = phi_pi(t) pi_core_union_t + phi_y x_union_t, in deviations
Vec taylor_rate(const PolicyRegime& regime, const Vec& pi_core_union,
                const Vec& x_union);

// Log export-demand shift for each country: eps_trade times the trade-share
// weighted average of partner goods prices relative to own.
std::vector<Vec> trade_demand(const std::vector<CountryCalibration>& countries,
                              const std::vector<Vec>& p_d, double eps_trade);

// ---- nonlinearities and fiscal ---------------------------------------------

// w*_t = w*_lin_t + b' max{p_idx_t - w_{t-1}, 0}
Vec nonlinear_reset(const Vec& w_star_lin, const Vec& p_idx, const Vec& w_lag,
                    double b_catchup);

// Catch-up contribution to type wage inflation used by the nonlinear
// solver: quasi-differenced form of the reset-wage add-on b' max{gap, 0},
// with the gap in level relatives so small shocks collapse to the linear
// model.
Vec catchup_term(double theta, double beta, double b_catchup, const Vec& p_idx,
                 const Vec& w_level);

struct FiscalPaths {
  std::vector<Vec> transfer;  // per group, net of the lump-sum tax
  Vec tax;                    // per-capita lump-sum tax
  Vec subsidy;                // essentials log-price reduction
};

// Balanced-budget transfer/tax paths plus the effective essentials price
// reduction. `active` marks quarters the instruments are on.
FiscalPaths fiscal_apply(const PolicyRegime& regime,
                         const CountryCalibration& country, int T);

}  // namespace hankwedge::blocks
