#pragma once
#include <Eigen/Dense>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "hankwedge/blocks.hpp"
#include "hankwedge/calibration.hpp"
#include "hankwedge/household.hpp"

// Sequence-space composition of the analytic blocks and the household
// Jacobians into one union-wide linear system F_X U + F_Z u + z = 0, plus
// the quasi-Newton driver for the nonlinear catch-up variant. Unknowns are
// per-country per-group log wage levels and the two sector log price levels;
// targets are the matching Phillips-curve residuals. The nominal rate, the
// output gap and all price indexes are intermediate outputs of the forward
// pass.
namespace hankwedge::solver {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct SolverOptions {
  int T = 80;             // system horizon
  int household_T = 300;  // fake-news horizon; truncated down to T
  bool hank_demand = false;  // true: household-Jacobian demand block
  double qn_tol = 1e-10;
  double qn_damping = 0.3;
  double qn_damping_threshold = 0.05;
  int qn_max_iter = 200;
  int threads = 1;
  std::string cache_dir;  // optional household-Jacobian cache
};

// Demand-side inputs shared by every group of every country: the household
// problem is identical across them (symmetric steady state, common wage
// normalization), so one Jacobian set serves the whole union.
struct HouseholdDemand {
  hh::HouseholdSteadyState ss;
  Mat C_r, C_w, C_T;  // truncated to the system horizon
  Mat A_r, A_w, A_T;
  double mpc = 0.0;
};

HouseholdDemand build_household_demand(const CommonParams& common,
                                       const SolverOptions& opt,
                                       std::uint64_t calib_key);

struct CountryResult {
  std::string code;
  std::vector<Vec> wages;  // per group, log levels
  Vec p_d, p_s;
  Vec pi_core;
  Vec pi_w;  // aggregate wage inflation
  Vec x;
  Vec avg_pi;       // population-weighted experienced inflation
  Vec rwei;         // reset-weighted experienced inflation
  Vec omega;        // rwei - avg_pi, quarter by quarter
  Vec wedge_term;   // composition term as applied in the wage block
  std::vector<Vec> pi_exp;  // per group
};

struct TransitionResult {
  int T = 0;
  std::vector<CountryResult> countries;
  Vec i_union;
  Vec pi_core_union;
  Vec x_union;
  int iterations = 0;          // quasi-Newton steps (1 for linear)
  double residual_norm = 0.0;  // final stacked-residual sup norm
  double policy_residual = 0.0;  // ex-post Taylor/IS consistency check
  bool nonlinear = false;
};

// Exogenous per-country fiscal paths plus the union essentials shock.
struct ExogenousPaths {
  Vec u;  // essentials log price
  std::vector<blocks::FiscalPaths> fiscal;  // per country
};

class System {
 public:
  // Forward accumulation of the block Jacobians along the DAG; factorizes
  // F_X once. `demand` may be null in analytic-IS mode.
  System(const UnionCalibration& calib, const PolicyRegime& regime,
         const Indexation& indexation, const SolverOptions& opt,
         std::shared_ptr<const HouseholdDemand> demand);

  int T() const { return opt_.T; }
  int unknowns() const { return n_; }
  const Mat& F_X() const { return F_X_; }
  const Mat& F_Z() const { return F_Z_; }
  double condition_estimate() const { return rcond_; }

  // Stacked residuals of the affine system at given unknown paths; also the
  // quasi-Newton objective when `nonlinear` adds the catch-up term.
  Vec residuals(const Vec& U, const ExogenousPaths& exog,
                bool nonlinear) const;

  TransitionResult solve_linear(const ExogenousPaths& exog) const;
  TransitionResult solve_nonlinear(const ExogenousPaths& exog) const;

  // Solve with the sector price paths pinned exogenously (wage unknowns
  // only); used by equal-experience shock compositions.
  TransitionResult solve_pinned_prices(const ExogenousPaths& exog,
                                       const std::vector<Vec>& p_d,
                                       const std::vector<Vec>& p_s) const;

  TransitionResult result_from_unknowns(const Vec& U,
                                        const ExogenousPaths& exog) const;

  ExogenousPaths make_exog(const ShockScenario& scenario) const;

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
  const UnionCalibration* calib_;
  PolicyRegime regime_;
  Indexation index_;
  SolverOptions opt_;
  int n_ = 0;
  Mat F_X_, F_Z_;
  Vec z0_;
  Eigen::PartialPivLU<Mat> lu_;
  double rcond_ = 0.0;
  bool singular_ = false;

 public:
  bool singular() const { return singular_; }
};

// Convenience wrapper: assemble and solve one scenario.
TransitionResult solve(const UnionCalibration& calib,
                       const ShockScenario& scenario, const SolverOptions& opt,
                       std::shared_ptr<const HouseholdDemand> demand);

// Pooled-group counterpart of the calibration (common basket and reset
// probability, no expectation feedback, no catch-up), solved under the same
// scenario.
UnionCalibration standard_twin_union(const UnionCalibration& calib);
TransitionResult run_standard_twin(const UnionCalibration& calib,
                                   const ShockScenario& scenario,
                                   const SolverOptions& opt,
                                   std::shared_ptr<const HouseholdDemand> demand);

// Long-format CSV (country,variable,quarter,value) and JSON serialization.
void write_result_csv(const TransitionResult& r, const std::string& path);
void write_result_json(const TransitionResult& r, const std::string& path);

}  // namespace hankwedge::solver
