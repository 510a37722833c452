#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "hankwedge/experiments.hpp"

using namespace hankwedge;
namespace xp = hankwedge::xp;
namespace sv = hankwedge::solver;

namespace {

const std::string kData = HW_DATA_DIR;

// figure-4 calibration with the household block; shared across cases
const xp::Context& f4_ctx() {
  static xp::Context ctx = [] {
    sv::SolverOptions opt;
    opt.T = 80;
    opt.household_T = 160;
    opt.hank_demand = true;
    return xp::Context::make(load_union(kData + "/figure4"), opt);
  }();
  return ctx;
}

ShockScenario baseline(int T, double peak, bool nonlinear) {
  ShockScenario s;
  s.essentials_path = ar1_shock_path(T, peak, 0.88, 4);
  s.policy = PolicyRegime::constant(1.5, 0.125);
  s.nonlinear = nonlinear;
  return s;
}

}  // namespace

TEST_CASE("wedge table: positive gaps, sane derived coefficients") {
  auto rep = xp::wedge_table(f4_ctx(), baseline(80, 0.25, true));
  REQUIRE(rep.rows.size() == 1);
  CHECK(rep.value("F4", "cum_gap") > 0.0);
  CHECK(rep.value("F4", "peak_omega") > 0.0);
  CHECK(rep.value("F4", "peak_core_het") > rep.value("F4", "peak_core_std"));
  CHECK(rep.value("F4", "R_c") != 0.0);
  CHECK(rep.value("F4", "rho_omega") > 0.0);
  CHECK(rep.value("F4", "rho_omega") < 1.0);
}

TEST_CASE("shock composition: signs follow the basket gradients") {
  auto rep = xp::shock_composition(f4_ctx(), baseline(80, 0.25, true));
  const double om_energy = rep.value("energy", "peak_omega");
  const double om_food = rep.value("food", "peak_omega");
  CHECK(om_energy > om_food);
  CHECK(om_food > 0.0);
  CHECK(rep.value("energy", "cum_gap") > 0.0);
  // uniform: identically zero wedge and gap
  CHECK(std::abs(rep.value("uniform", "peak_omega")) < 1e-10);
  CHECK(std::abs(rep.value("uniform", "cum_gap")) < 1e-10);
  // non-essentials shock flips the wedge sign
  CHECK(rep.value("nonessentials", "peak_omega") < 0.0);
}

TEST_CASE("same openness: pooled twin has no wedge, the gradient economy does") {
  auto rep = xp::same_openness(f4_ctx(), baseline(80, 0.25, true));
  CHECK(rep.value("A", "import_share") ==
        doctest::Approx(rep.value("B", "import_share")).epsilon(1e-12));
  CHECK(rep.value("A", "theta_bar") ==
        doctest::Approx(0.17).epsilon(1e-12));
  CHECK(rep.value("B", "peak_omega") < 1e-10);
  CHECK(rep.value("A", "peak_omega") > 0.0);
  CHECK(rep.scalars.at("gap") > 0.0);
}

TEST_CASE("policy matrix: subsidy regime beats aggressive tightening") {
  auto rep = xp::policy_matrix(f4_ctx(), baseline(80, 0.25, true));
  CHECK(rep.value("a", "normalized_loss") == doctest::Approx(1.0));
  CHECK(rep.value("d", "normalized_loss") < rep.value("a", "normalized_loss"));
  CHECK(rep.value("d", "cum_core_union") < rep.value("a", "cum_core_union"));

  // zero shock: all losses zero
  ShockScenario zero;
  zero.essentials_path.assign(80, 0.0);
  zero.policy = PolicyRegime::constant(1.5, 0.125);
  auto rz = xp::policy_matrix(f4_ctx(), zero);
  for (const char* k : {"a", "b", "c", "d"})
    CHECK(std::abs(rz.value(k, "welfare_loss")) < 1e-20);
}

TEST_CASE("indexation table: composition channel survives cpi indexation") {
  auto rep = xp::indexation_table(f4_ctx(), baseline(80, 0.25, false));
  const double base = rep.value("none", "wedge_term_on_baseline");
  CHECK(std::abs(rep.value("cpi", "wedge_term_on_baseline") - base) < 1e-9);
  CHECK(std::abs(rep.value("type_specific", "wedge_term_on_baseline")) <
        1e-12);
  CHECK(rep.value("cpi", "cum_gap") <= rep.value("none", "cum_gap") + 1e-9);
  CHECK(std::abs(rep.value("type_specific", "peak_wedge_term")) < 1e-12);
}

TEST_CASE("delayed policy amplifies the gap") {
  auto rep = xp::delayed_policy(f4_ctx(), baseline(80, 0.40, true));
  CHECK(rep.value("F4", "cum_gap_delayed") >
        rep.value("F4", "cum_gap_immediate"));
  CHECK(rep.value("F4", "cum_gap_immediate") > 0.0);
}

TEST_CASE("channel decomposition: each shutdown narrows the gap") {
  auto rep = xp::channel_decomposition(f4_ctx(), baseline(80, 0.25, false));
  const double full = rep.value("full", "cum_core");
  const double std_cum = rep.value("standard", "cum_core");
  const double gap_full = full - std_cum;
  CHECK(gap_full > 0.0);
  // on the two-type toy the basket and reset shutdowns must narrow the
  // gap; the propagation channel is sign-ambiguous under full sector
  // segregation, so its direction is asserted only in the bundled reports
  CHECK(rep.value("equal_baskets", "delta_from_full") < 0.0);
  CHECK(rep.value("equal_reset", "delta_from_full") < 0.0);
}

TEST_CASE("psi regression: positive slope, first-order error shrinks") {
  auto rep = xp::estimate_psi(f4_ctx(), baseline(80, 0.25, true));
  CHECK(rep.scalars.at("psi") > 0.0);
  CHECK(rep.scalars.at("fit") > 0.9);
  // deviations from the small-shock slope are second order: the residual
  // share rises with the scale, i.e. falls as the shock shrinks
  double r1 = 0.0, r4 = 0.0;
  for (const auto& row : rep.rows) {
    if (row.values[0] == doctest::Approx(0.01 / 0.25))
      r1 = row.values[3];
    if (row.values[0] == doctest::Approx(0.04 / 0.25))
      r4 = row.values[3];
  }
  CHECK(r1 <= r4 + 1e-12);
  CHECK(rep.scalars.count("psi_small_shock") == 1);
}

TEST_CASE("amplification curve: ratio starts near one and rises") {
  auto rep = xp::amplification_curve(f4_ctx(), {0.01, 0.10, 0.25});
  REQUIRE(rep.rows.size() == 3);
  const double r0 = rep.rows[0].values[3];
  const double r1 = rep.rows[1].values[3];
  const double r2 = rep.rows[2].values[3];
  CHECK(std::abs(r0 - 1.0) < 0.1);
  CHECK(r1 >= r0 - 1e-9);
  CHECK(r2 >= r1 - 1e-9);
}

TEST_CASE("oca: grid search finds an interior optimum per country") {
  sv::SolverOptions opt;
  opt.T = 60;
  opt.household_T = 120;
  opt.hank_demand = true;
  auto ctx = xp::Context::make(load_union(kData + "/figure4"), opt);
  auto rep = xp::oca_decomposition(ctx, baseline(60, 0.25, false));
  REQUIRE(rep.rows.size() == 1);
  const double phi = rep.value("F4", "phi_star");
  CHECK(phi >= 1.01);
  CHECK(phi <= 5.0);
  CHECK(rep.scalars.count("var_istar") == 1);
}

TEST_CASE("portability: ranking and predicted gaps from bundled data") {
  auto rep = xp::portability_stats(kData + "/noneuro/table21.csv", 5.4);
  CHECK(rep.value("UK", "rwei_index") > rep.value("US", "rwei_index"));
  CHECK(rep.value("US", "rwei_index") > rep.value("JP", "rwei_index"));
  CHECK(rep.value("UK", "predicted_gap") ==
        doctest::Approx(5.4 * 0.54).epsilon(1e-12));
  // predicted gaps follow psi times the bundled wedge column
  CHECK(rep.value("EA", "predicted_gap") ==
        doctest::Approx(5.4 * 0.57).epsilon(1e-12));
  CHECK(rep.value("UK", "predicted_gap") > rep.value("US", "predicted_gap"));
  CHECK(rep.value("US", "predicted_gap") > rep.value("JP", "predicted_gap"));
}

TEST_CASE("reports serialize to csv and json") {
  auto rep = xp::portability_stats(kData + "/noneuro/table21.csv", 5.4);
  const auto dir =
      (std::filesystem::temp_directory_path() / "hw_report").string();
  std::filesystem::remove_all(dir);
  xp::write_report(rep, dir);
  CHECK(std::filesystem::exists(dir + "/portability.csv"));
  CHECK(std::filesystem::exists(dir + "/portability.json"));
}
