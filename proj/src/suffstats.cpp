#include "hankwedge/suffstats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace hankwedge::stats {

namespace {
constexpr double kIdentityTol = 1e-12;
}

ExperiencedInflation experienced_inflation(const CountryCalibration& country,
                                           const PriceChange& dp,
                                           double lambda_e) {
  ExperiencedInflation out;
  out.dp = dp;
  out.lambda_e = lambda_e;
  out.by_group.reserve(country.groups.size());
  for (const auto& g : country.groups)
    out.by_group.push_back(lambda_e * g.alpha_e * dp.e + g.alpha_d * dp.d +
                           g.alpha_s * dp.s);
  return out;
}

std::vector<double> reset_weights(const CountryCalibration& country,
                                  double* out_theta_bar) {
  const double tb = country.theta_bar();
  std::vector<double> w;
  w.reserve(country.groups.size());
  for (const auto& g : country.groups) w.push_back(g.eta * g.theta / tb);
  if (out_theta_bar) *out_theta_bar = tb;
  return w;
}

double rwei(const CountryCalibration& country, const PriceChange& dp,
            double lambda_e) {
  const auto pi = experienced_inflation(country, dp, lambda_e);
  const auto w = reset_weights(country);
  double acc = 0.0;
  for (std::size_t g = 0; g < w.size(); ++g) acc += w[g] * pi.by_group[g];
  return acc;
}

double wedge(const CountryCalibration& country, const PriceChange& dp,
             double lambda_e) {
  const auto pi = experienced_inflation(country, dp, lambda_e);
  double tb = 0.0;
  const auto w = reset_weights(country, &tb);

  double direct = 0.0, avg = 0.0;
  for (std::size_t g = 0; g < w.size(); ++g) {
    direct += w[g] * pi.by_group[g];
    avg += country.groups[g].eta * pi.by_group[g];
  }
  direct -= avg;

  // covariance form: (1/theta_bar) sum eta (theta - theta_bar) pi
  double cov = 0.0;
  for (std::size_t g = 0; g < w.size(); ++g)
    cov += country.groups[g].eta * (country.groups[g].theta - tb) *
           pi.by_group[g];
  cov /= tb;

  const double scale = std::max({1.0, std::abs(direct), std::abs(cov)});
  if (std::abs(direct - cov) > kIdentityTol * scale)
    throw std::logic_error(
        "wedge identity violated (direct vs covariance form): " +
        std::to_string(direct) + " vs " + std::to_string(cov));
  return direct;
}

double wedge_closed_form_2type(const CountryCalibration& country,
                               const PriceChange& dp, double lambda_e) {
  if (country.groups.size() != 2)
    throw std::invalid_argument(
        "closed-form wedge requires exactly two groups, got " +
        std::to_string(country.groups.size()));
  const auto& H = country.groups[0];
  const auto& L = country.groups[1];
  const double tb = country.theta_bar();
  const double gap = lambda_e * (H.alpha_e - L.alpha_e) * dp.e +
                     (H.alpha_d - L.alpha_d) * dp.d +
                     (H.alpha_s - L.alpha_s) * dp.s;
  return H.eta * L.eta / tb * (H.theta - L.theta) * gap;
}

double propagation_weight(const SectorParams& sector) {
  if (sector.calvo_reset >= 1.0)
    throw std::invalid_argument("propagation weight needs calvo_reset < 1");
  return sector.labor_share * sector.centrality / (1.0 - sector.calvo_reset);
}

double mwsi(const CountryCalibration& country, const PriceChange& dp,
            double lambda_e) {
  const auto pi = experienced_inflation(country, dp, lambda_e);
  const auto w = reset_weights(country);
  double acc = 0.0;
  for (std::size_t g = 0; g < w.size(); ++g) {
    const double nu = propagation_weight(
        country.sector(country.groups[g].sector));
    acc += (w[g] - country.groups[g].eta) * nu * pi.by_group[g];
  }
  return acc;
}

double optimal_subsidy_from_omega(const CountryCalibration& country,
                                  double omega, double lambda_e) {
  if (omega == 0.0) return 0.0;
  const auto w = reset_weights(country);
  double denom = 0.0;
  for (std::size_t g = 0; g < w.size(); ++g)
    denom += (w[g] - country.groups[g].eta) * country.groups[g].alpha_e;
  denom *= lambda_e;
  if (std::abs(denom) < 1e-14)
    throw std::invalid_argument(
        country.code +
        ": essentials-share gradient is zero, no subsidy closes the wedge");
  return omega / denom;
}

double optimal_subsidy(const CountryCalibration& country,
                       const PriceChange& dp, double lambda_e) {
  return optimal_subsidy_from_omega(country, wedge(country, dp, lambda_e),
                                    lambda_e);
}

double kappa_aggregate(const CountryCalibration& country, double beta) {
  double acc = 0.0;
  for (const auto& g : country.groups) {
    const double Theta = 1.0 - g.theta;
    acc += g.eta * g.theta * (1.0 - beta * Theta) / Theta;
  }
  return acc;
}

CumulativeChannels cumulative_decomposition(const CountryCalibration& country,
                                            double beta, double avg_pi0,
                                            double omega0,
                                            double wedge_persistence,
                                            double avg_gap) {
  if (wedge_persistence < 0.0 || wedge_persistence >= 1.0)
    throw std::invalid_argument("wedge persistence must lie in [0,1)");
  const double tb = country.theta_bar();
  CumulativeChannels ch;
  ch.level_catchup = tb * avg_pi0 / (1.0 - beta);
  ch.composition = tb * omega0 / (1.0 - beta * wedge_persistence);
  ch.demand = kappa_aggregate(country, beta) * avg_gap / (1.0 - beta);
  return ch;
}

VarianceDecomposition variance_decomposition(
    const std::vector<double>& gdp_weights, const std::vector<double>& R,
    const std::vector<double>& S, const std::vector<double>& omega,
    const std::vector<double>& theta_bar, double u) {
  const std::size_t n = gdp_weights.size();
  if (n < 2)
    throw std::invalid_argument("variance decomposition needs >= 2 countries");
  if (R.size() != n || S.size() != n || omega.size() != n ||
      theta_bar.size() != n)
    throw std::invalid_argument("variance decomposition: ragged inputs");

  double wsum = std::accumulate(gdp_weights.begin(), gdp_weights.end(), 0.0);
  std::vector<double> a(n), b(n);
  for (std::size_t c = 0; c < n; ++c) {
    a[c] = R[c] * u;
    b[c] = S[c] * theta_bar[c] * omega[c] * u;
  }
  auto wmean = [&](const std::vector<double>& v) {
    double m = 0.0;
    for (std::size_t c = 0; c < n; ++c) m += gdp_weights[c] * v[c];
    return m / wsum;
  };
  const double ma = wmean(a), mb = wmean(b);
  VarianceDecomposition out;
  for (std::size_t c = 0; c < n; ++c) {
    const double w = gdp_weights[c] / wsum;
    out.standard += w * (a[c] - ma) * (a[c] - ma);
    out.wedge += w * (b[c] - mb) * (b[c] - mb);
    out.covariance += 2.0 * w * (a[c] - ma) * (b[c] - mb);
  }
  return out;
}

SufficientStats compute_all(const CountryCalibration& country,
                            const PriceChange& dp, double lambda_e) {
  SufficientStats s;
  s.reset_weights = reset_weights(country, &s.theta_bar);
  s.rwei = rwei(country, dp, lambda_e);
  const auto pi = experienced_inflation(country, dp, lambda_e);
  for (std::size_t g = 0; g < pi.by_group.size(); ++g)
    s.avg_pi += country.groups[g].eta * pi.by_group[g];
  s.omega = wedge(country, dp, lambda_e);
  s.mwsi = mwsi(country, dp, lambda_e);
  s.nu_services = propagation_weight(country.services);
  s.nu_goods = propagation_weight(country.goods);
  return s;
}

double wedge_path_persistence(const std::vector<double>& omega_path,
                              int first, int last) {
  last = std::min<int>(last, static_cast<int>(omega_path.size()) - 1);
  if (last - first < 2) return 0.0;
  // through-origin AR(1) fit: for an exact geometric decay this recovers the
  // decay factor itself
  double num = 0.0, den = 0.0;
  for (int t = first + 1; t <= last; ++t) {
    num += omega_path[t] * omega_path[t - 1];
    den += omega_path[t - 1] * omega_path[t - 1];
  }
  return den > 0.0 ? num / den : 0.0;
}

}  // namespace hankwedge::stats
