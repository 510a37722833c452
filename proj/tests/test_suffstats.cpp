#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "hankwedge/calibration.hpp"
#include "hankwedge/suffstats.hpp"

using namespace hankwedge;
namespace st = hankwedge::stats;

namespace {

const std::string kData = HW_DATA_DIR;

CountryCalibration figure4_country() {
  static UnionCalibration u = load_union(kData + "/figure4");
  return u.countries[0];
}

// Random two-or-more-type calibration. When `ordered` is set, essentials
// shares and reset probabilities are co-monotone (the empirically relevant
// configuration), so essentials shocks produce a positive wedge.
CountryCalibration random_country(std::mt19937_64& rng, int n_groups,
                                  bool ordered) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  CountryCalibration c = figure4_country();
  c.groups.clear();
  std::vector<double> eta(n_groups), theta(n_groups), ae(n_groups);
  double esum = 0.0;
  for (int g = 0; g < n_groups; ++g) {
    eta[g] = 0.1 + U(rng);
    esum += eta[g];
    theta[g] = 0.03 + 0.6 * U(rng);
    ae[g] = 0.05 + 0.5 * U(rng);
  }
  if (ordered) {
    std::sort(theta.begin(), theta.end(), std::greater<>());
    std::sort(ae.begin(), ae.end(), std::greater<>());
    theta[0] += 0.05;  // keep the gradient strict
    ae[0] += 0.02;
  }
  for (int g = 0; g < n_groups; ++g) {
    WorkerGroup w;
    w.label = "G" + std::to_string(g);
    w.eta = eta[g] / esum;
    w.theta = std::min(theta[g], 0.95);
    w.alpha_e = std::min(ae[g], 0.6);
    const double rest = 1.0 - w.alpha_e;
    const double split = 0.3 + 0.4 * U(rng);
    w.alpha_d = rest * split;
    w.alpha_s = rest - w.alpha_d;
    w.sector = g < n_groups / 2 ? Sector::services : Sector::goods;
    w.phi = 0.0;
    c.groups.push_back(std::move(w));
  }
  return c;
}

}  // namespace

TEST_CASE("experienced inflation matches the published two-type bars") {
  auto c = figure4_country();
  st::PriceChange dp{0.40, 0.0, 0.0};
  auto pi = st::experienced_inflation(c, dp, 1.0);
  REQUIRE(pi.by_group.size() == 2);
  CHECK(pi.by_group[0] == doctest::Approx(0.152).epsilon(1e-12));
  CHECK(pi.by_group[1] == doctest::Approx(0.072).epsilon(1e-12));

  // uniform price change with unit salience hits every group identically
  st::PriceChange uni{0.03, 0.03, 0.03};
  auto pu = st::experienced_inflation(c, uni, 1.0);
  CHECK(pu.by_group[0] == doctest::Approx(0.03).epsilon(1e-12));
  CHECK(pu.by_group[1] == doctest::Approx(0.03).epsilon(1e-12));

  // salience scales the essentials component only
  auto ps = st::experienced_inflation(c, dp, 1.3);
  CHECK(ps.by_group[0] == doctest::Approx(1.3 * 0.38 * 0.40).epsilon(1e-12));
}

TEST_CASE("reset weights and theta_bar") {
  auto c = figure4_country();
  double tb = 0.0;
  auto w = st::reset_weights(c, &tb);
  CHECK(tb == doctest::Approx(0.155).epsilon(1e-12));
  CHECK(w[0] == doctest::Approx(0.5 * 0.25 / 0.155).epsilon(1e-12));
  CHECK(w[0] == doctest::Approx(0.8065).epsilon(1e-3));
  CHECK(w[1] == doctest::Approx(0.1935).epsilon(1e-3));
  CHECK(w[0] + w[1] == doctest::Approx(1.0).epsilon(1e-14));

  // equal thetas collapse reset weights to population shares
  auto eq = c;
  for (auto& g : eq.groups) g.theta = 0.2;
  auto we = st::reset_weights(eq);
  CHECK(we[0] == doctest::Approx(eq.groups[0].eta).epsilon(1e-14));
}

TEST_CASE("rwei reproduces the headline example") {
  auto c = figure4_country();
  st::PriceChange dp{0.40, 0.0, 0.0};
  const double r = st::rwei(c, dp, 1.0);
  // 0.80645*0.152 + 0.19355*0.072
  CHECK(r == doctest::Approx(0.136516).epsilon(1e-4));
  CHECK(std::abs(r - 0.137) < 5e-4);  // within 0.05pp of the rounded value

  // uniform shock maps to itself at unit salience
  st::PriceChange uni{0.02, 0.02, 0.02};
  CHECK(st::rwei(c, uni, 1.0) == doctest::Approx(0.02).epsilon(1e-12));

  // with salience 1.3 the reset-weighted mean follows the same formula
  const double r13 = st::rwei(c, dp, 1.3);
  double tb = 0.0;
  auto w = st::reset_weights(c, &tb);
  const double want = w[0] * 1.3 * 0.38 * 0.40 + w[1] * 1.3 * 0.18 * 0.40;
  CHECK(r13 == doctest::Approx(want).epsilon(1e-14));
  CHECK(r13 == doctest::Approx(0.177474).epsilon(1e-5));
}

TEST_CASE("wedge: direct, covariance and closed forms coincide") {
  auto c = figure4_country();
  st::PriceChange dp{0.40, 0.0, 0.0};
  const double om = st::wedge(c, dp, 1.0);
  CHECK(om == doctest::Approx(0.024516).epsilon(1e-4));
  CHECK(std::abs(om - 0.025) < 5e-4);

  const double cf = st::wedge_closed_form_2type(c, dp, 1.0);
  CHECK(cf == doctest::Approx(om).epsilon(1e-12));
  // hand evaluation of the two-type product form
  CHECK(cf ==
        doctest::Approx(0.25 / 0.155 * 0.19 * 0.20 * 0.40).epsilon(1e-12));

  CHECK(st::wedge(c, {0.02, 0.02, 0.02}, 1.0) ==
        doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("wedge identities on random calibrations") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 1000; ++trial) {
    const int G = 2 + static_cast<int>(rng() % 4);
    auto c = random_country(rng, G, false);
    std::uniform_real_distribution<double> U(-0.3, 0.5);
    st::PriceChange dp{U(rng), U(rng), U(rng)};
    const double lam = 1.0 + 0.5 * std::abs(U(rng));

    // direct vs covariance is asserted inside wedge()
    const double om = st::wedge(c, dp, lam);
    if (G == 2) {
      const double cf = st::wedge_closed_form_2type(c, dp, lam);
      CHECK(std::abs(om - cf) < 1e-12 * std::max(1.0, std::abs(om)));
    }
    // scale linearity
    st::PriceChange dp3{3.0 * dp.e, 3.0 * dp.d, 3.0 * dp.s};
    CHECK(st::wedge(c, dp3, lam) == doctest::Approx(3.0 * om).epsilon(1e-10));
  }
}

TEST_CASE("knife edges force a zero wedge; joint violation breaks it") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const int G = 2 + static_cast<int>(rng() % 4);
    auto c = random_country(rng, G, true);
    st::PriceChange dp{0.1 + 0.4 * U(rng), 0.0, 0.0};

    // (a) identical baskets
    auto cb = c;
    for (auto& g : cb.groups) {
      g.alpha_e = 0.3;
      g.alpha_d = 0.3;
      g.alpha_s = 0.4;
    }
    CHECK(std::abs(st::wedge(cb, dp, 1.3)) < 1e-12);

    // (b) identical reset frequencies
    auto ct = c;
    for (auto& g : ct.groups) g.theta = 0.17;
    CHECK(std::abs(st::wedge(ct, dp, 1.3)) < 1e-12);

    // (c) uniform price change, unit salience
    const double x = -0.2 + 0.6 * U(rng);
    CHECK(std::abs(st::wedge(c, {x, x, x}, 1.0)) < 1e-12);

    // co-monotone gradients plus an essentials-only shock: positive wedge
    CHECK(st::wedge(c, dp, 1.0) > 0.0);
    // non-essentials shock flips the sign
    st::PriceChange dn{0.0, 0.2, 0.2};
    CHECK(st::wedge(c, dn, 1.0) < 0.0);
  }
}

TEST_CASE("propagation weight") {
  SectorParams s;
  s.labor_share = 0.5;
  s.centrality = 0.5;
  s.calvo_reset = 0.5;
  CHECK(st::propagation_weight(s) == doctest::Approx(0.5).epsilon(1e-14));

  s.labor_share = 0.63;
  s.centrality = 0.5;
  s.calvo_reset = 0.25;
  CHECK(st::propagation_weight(s) == doctest::Approx(0.42).epsilon(1e-12));

  // monotone in the labor share
  SectorParams hi = s, lo = s;
  hi.labor_share = 0.7;
  lo.labor_share = 0.4;
  CHECK(st::propagation_weight(hi) > st::propagation_weight(lo));

  s.calvo_reset = 1.0;
  CHECK_THROWS_AS(st::propagation_weight(s), std::invalid_argument);
}

TEST_CASE("mwsi formula and degenerate cases") {
  auto c = figure4_country();
  st::PriceChange dp{0.40, 0.0, 0.0};

  // homogeneous propagation weights: mwsi = nu * wedge
  auto ch = c;
  ch.services.labor_share = 0.6;
  ch.goods.labor_share = 0.5;  // regularity: services above goods
  ch.services.centrality = ch.goods.centrality = 0.5;
  ch.services.calvo_reset = ch.goods.calvo_reset = 0.25;
  // force equal nu by compensating the labor-share gap through centrality
  ch.goods.centrality = 0.5 * 0.6 / 0.5;
  const double nu_s = st::propagation_weight(ch.services);
  const double nu_g = st::propagation_weight(ch.goods);
  REQUIRE(nu_s == doctest::Approx(nu_g).epsilon(1e-12));
  CHECK(st::mwsi(ch, dp, 1.0) ==
        doctest::Approx(nu_s * st::wedge(ch, dp, 1.0)).epsilon(1e-12));

  // equal thetas make reset weights equal population weights: mwsi = 0
  auto ce = c;
  for (auto& g : ce.groups) g.theta = 0.2;
  CHECK(std::abs(st::mwsi(ce, dp, 1.0)) < 1e-14);

  // direct evaluation with nu_s=1.2, nu_d=0.8, H in services:
  // (0.80645-0.5)*1.2*0.152 + (0.19355-0.5)*0.8*0.072
  auto cv = c;
  // centrality * labor_share / (1-reset) = nu  ->  pick centrality
  cv.services.labor_share = 0.6;
  cv.goods.labor_share = 0.4;
  cv.services.calvo_reset = 0.25;
  cv.goods.calvo_reset = 0.25;
  cv.services.centrality = 1.2 * 0.75 / 0.6;
  cv.goods.centrality = 0.8 * 0.75 / 0.4;
  double tb = 0.0;
  auto w = st::reset_weights(cv, &tb);
  const double want =
      (w[0] - 0.5) * 1.2 * 0.152 + (w[1] - 0.5) * 0.8 * 0.072;
  CHECK(st::mwsi(cv, dp, 1.0) == doctest::Approx(want).epsilon(1e-12));
  CHECK(want == doctest::Approx(0.038252).epsilon(1e-4));
}

TEST_CASE("optimal subsidy closes the wedge exactly") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    auto c = random_country(rng, 2, true);
    std::uniform_real_distribution<double> U(0.05, 0.5);
    st::PriceChange dp{U(rng), 0.3 * U(rng), 0.1 * U(rng)};
    const double lam = trial % 2 == 0 ? 1.0 : 1.3;
    const double tau = st::optimal_subsidy(c, dp, lam);
    st::PriceChange dps{dp.e - tau, dp.d, dp.s};
    CHECK(std::abs(st::wedge(c, dps, lam)) < 1e-10);
  }

  // zero wedge, zero subsidy
  auto c = figure4_country();
  CHECK(st::optimal_subsidy_from_omega(c, 0.0, 1.0) == 0.0);

  // for the figure-4 shock the subsidy equals the full essentials change
  st::PriceChange dp{0.40, 0.0, 0.0};
  CHECK(st::optimal_subsidy(c, dp, 1.0) == doctest::Approx(0.40).epsilon(1e-10));

  // no essentials-share gradient: no subsidy can close the wedge
  auto flat = c;
  for (auto& g : flat.groups) {
    g.alpha_e = 0.3;
    g.alpha_d = 0.3;
    g.alpha_s = 0.4;
  }
  CHECK_THROWS_AS(st::optimal_subsidy_from_omega(flat, 0.01, 1.0),
                  std::invalid_argument);
}

TEST_CASE("aggregate phillips slope") {
  auto c = figure4_country();
  // single group, theta 0.25
  auto one = standard_twin(c);
  one.groups[0].theta = 0.25;
  CHECK(st::kappa_aggregate(one, 0.99) ==
        doctest::Approx(0.25 * (1.0 - 0.99 * 0.75) / 0.75).epsilon(1e-12));
  CHECK(st::kappa_aggregate(one, 0.99) == doctest::Approx(0.0858).epsilon(1e-3));

  // theta -> 0 sends the slope to zero
  one.groups[0].theta = 1e-9;
  CHECK(st::kappa_aggregate(one, 0.99) < 1e-8);

  // two-type weighted sum evaluated by hand:
  // 0.5*0.25*(1-0.99*0.75)/0.75 + 0.5*0.06*(1-0.99*0.94)/0.94
  const double want = 0.5 * 0.25 * (1.0 - 0.99 * 0.75) / 0.75 +
                      0.5 * 0.06 * (1.0 - 0.99 * 0.94) / 0.94;
  CHECK(st::kappa_aggregate(c, 0.99) == doctest::Approx(want).epsilon(1e-14));
  CHECK(want == doctest::Approx(0.045132).epsilon(1e-4));
}

TEST_CASE("cumulative decomposition channels") {
  auto c = figure4_country();
  auto ch = st::cumulative_decomposition(c, 0.99, 0.112, 0.025, 0.88, 0.0);
  CHECK(ch.composition ==
        doctest::Approx(0.155 * 0.025 / (1.0 - 0.99 * 0.88)).epsilon(1e-12));
  CHECK(ch.composition == doctest::Approx(0.0301).epsilon(1e-2));
  CHECK(ch.demand == 0.0);

  auto ch0 = st::cumulative_decomposition(c, 0.99, 0.112, 0.0, 0.88, 0.0);
  CHECK(ch0.composition == 0.0);
  CHECK_THROWS_AS(st::cumulative_decomposition(c, 0.99, 0.1, 0.02, 1.0, 0.0),
                  std::invalid_argument);
}

TEST_CASE("cross-country variance decomposition") {
  std::vector<double> w{0.5, 0.5}, R{1.0, 2.0}, S{1.0, 1.0}, om{0.1, 0.3},
      tb{1.0, 1.0};
  auto v = st::variance_decomposition(w, R, S, om, tb, 1.0);
  CHECK(v.standard == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(v.wedge == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(v.covariance == doctest::Approx(0.10).epsilon(1e-12));

  // zero wedges kill the second and third terms
  auto v0 = st::variance_decomposition(w, R, S, {0.0, 0.0}, tb, 1.0);
  CHECK(v0.wedge == 0.0);
  CHECK(v0.covariance == 0.0);

  // identical countries: everything zero
  auto vi = st::variance_decomposition(w, {1.0, 1.0}, S, {0.2, 0.2}, tb, 1.0);
  CHECK(vi.standard == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(vi.wedge == doctest::Approx(0.0).epsilon(1e-14));

  CHECK_THROWS_AS(st::variance_decomposition({1.0}, {1.0}, {1.0}, {0.1}, {1.0}, 1.0),
                  std::invalid_argument);
}

TEST_CASE("wedge path persistence recovers a geometric decay rate") {
  std::vector<double> path(30);
  for (int t = 0; t < 30; ++t) path[t] = std::pow(0.9, t);
  const double rho = st::wedge_path_persistence(path, 1, 20);
  CHECK(rho == doctest::Approx(0.9).epsilon(1e-12));
}
