#pragma once
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "hankwedge/calibration.hpp"
#include "hankwedge/solver.hpp"
#include "hankwedge/suffstats.hpp"

// Scenario runner: paired heterogeneous/standard-twin experiments, policy
// comparisons, decompositions, and the derived cross-country coefficients.
// Every experiment is a pure function of (calibration, scenario, options);
// rerunning writes byte-identical reports.
namespace hankwedge::xp {

struct Context {
  UnionCalibration calib;
  solver::SolverOptions opt;
  std::shared_ptr<const solver::HouseholdDemand> demand;

  static Context make(UnionCalibration calib, solver::SolverOptions opt);
};

struct Row {
  std::string key;  // country code or regime label
  std::vector<double> values;
};

struct Report {
  std::string name;
  std::vector<std::string> columns;  // excluding the key column
  std::vector<Row> rows;
  std::map<std::string, double> scalars;  // derived coefficients

  double value(const std::string& key, const std::string& column) const;
};

// cumulative sums run over quarters [0, window)
inline constexpr int kCumWindow = 40;

double cumulative(const solver::Vec& path, int window = kCumWindow);
// first quarter after the peak at which the path falls to half the peak or
// below; -1 when it never does
int half_life(const solver::Vec& path);
// discounted union loss sum_c w_c sum_t beta^t (pi_core^2 + weight_x x^2)
double welfare_loss(const UnionCalibration& calib,
                    const solver::TransitionResult& r);

// Table-style experiments ----------------------------------------------------

// Heterogeneous vs standard-twin transition per country: peak core, peak
// wedge, cumulative het-std gap, half-lives, and the derived pass-through
// coefficients R_c, S_c, rho_omega and the psi regression inputs.
Report wedge_table(const Context& ctx, const ShockScenario& scenario);

// Wedge and gap under energy / food / uniform / non-essentials shocks. The
// uniform and non-essentials rows pin the sector prices so that every group
// experiences identical (resp. non-essentials-only) inflation.
Report shock_composition(const Context& ctx, const ShockScenario& scenario);

// Synthetic steep-gradient economy against its pooled twin with identical
// aggregate openness and reset frequency.
Report same_openness(const Context& ctx, const ShockScenario& scenario);

// Four policy regimes, welfare-ranked, loss normalized by regime (a).
Report policy_matrix(const Context& ctx, const ShockScenario& scenario);

// none / full-CPI / type-specific indexation comparison.
Report indexation_table(const Context& ctx, const ShockScenario& scenario);

// Immediate vs delayed monetary response.
Report delayed_policy(const Context& ctx, const ShockScenario& scenario);

// One-at-a-time heterogeneity shutdowns (linearized, rescaled).
Report channel_decomposition(const Context& ctx, const ShockScenario& scenario);

// Through-origin regression of the het-std cumulative gap on MWSI across
// countries and shock scales.
Report estimate_psi(const Context& ctx, const ShockScenario& scenario);

// Country-optimal Taylor coefficients by grid search plus the two-regressor
// split of the optimal-rate variance.
Report oca_decomposition(const Context& ctx, const ShockScenario& scenario);

// Nonlinear over linear cumulative-gap ratio across shock peaks.
Report amplification_curve(const Context& ctx,
                           const std::vector<double>& peaks);

// Reset-heterogeneity statistics for the bundled non-euro-area data plus the
// predicted gap at a given structural coefficient.
Report portability_stats(const std::string& noneuro_csv, double psi);

// I/O -------------------------------------------------------------------------

void write_report(const Report& r, const std::string& out_dir);
void write_manifest(const Context& ctx, const ShockScenario& scenario,
                    const std::string& out_dir, double wall_seconds);

}  // namespace hankwedge::xp
