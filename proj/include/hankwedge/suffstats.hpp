#pragma once
#include <map>
#include <string>
#include <vector>

#include "hankwedge/calibration.hpp"

// Closed-form sufficient statistics computable from calibration data alone:
// reset-weighted experienced inflation, the reset-heterogeneity wedge, its
// propagation-weighted counterpart, and the wedge-closing subsidy.
namespace hankwedge::stats {

// One-period item price changes (log), items e/d/s.
struct PriceChange {
  double e = 0.0;
  double d = 0.0;
  double s = 0.0;
};

struct ExperiencedInflation {
  std::vector<double> by_group;  // salient experienced inflation per group
  PriceChange dp;
  double lambda_e = 1.0;
};

struct SufficientStats {
  double rwei = 0.0;
  double avg_pi = 0.0;  // population-weighted experienced inflation
  double omega = 0.0;   // rwei - avg_pi
  double mwsi = 0.0;
  std::vector<double> reset_weights;
  double theta_bar = 0.0;
  double nu_services = 0.0;
  double nu_goods = 0.0;
};

// Salient experienced inflation per group: lambda_e applies to essentials,
// goods and services carry unit salience.
ExperiencedInflation experienced_inflation(const CountryCalibration& country,
                                           const PriceChange& dp,
                                           double lambda_e);

// Wage-reset shares eta_g*theta_g/theta_bar; out_theta_bar receives theta_bar.
std::vector<double> reset_weights(const CountryCalibration& country,
                                  double* out_theta_bar = nullptr);

double rwei(const CountryCalibration& country, const PriceChange& dp,
            double lambda_e);

// RWEI minus average experienced inflation. Evaluates both the direct form
// and the covariance form and verifies they agree; a mismatch means an
// implementation bug, not bad data.
double wedge(const CountryCalibration& country, const PriceChange& dp,
             double lambda_e);

// Two-type closed form via the experienced-inflation-gap expansion.
double wedge_closed_form_2type(const CountryCalibration& country,
                               const PriceChange& dp, double lambda_e);

// labor_share * centrality / (1 - calvo_reset)
double propagation_weight(const SectorParams& sector);

double mwsi(const CountryCalibration& country, const PriceChange& dp,
            double lambda_e);

// Essentials-price reduction that closes the wedge. Derived from the linear
// response of the wedge to the subsidy: omega(tau) = omega(0) -
// tau*lambda_e*sum_g (w_g - eta_g) alpha_ge, which for two types reduces to
// (w_H - eta_H)(alpha_He - alpha_Le). Exact for any number of groups.
double optimal_subsidy(const CountryCalibration& country,
                       const PriceChange& dp, double lambda_e);
double optimal_subsidy_from_omega(const CountryCalibration& country,
                                  double omega, double lambda_e);

// Aggregate wage Phillips curve slope sum_g eta theta (1-beta Theta)/Theta.
double kappa_aggregate(const CountryCalibration& country, double beta);

struct CumulativeChannels {
  double level_catchup = 0.0;
  double composition = 0.0;
  double demand = 0.0;
};

// Cumulative wage-response decomposition for a one-time shock: level
// catch-up theta_bar*pi_bar/(1-beta), composition theta_bar*omega0 /
// (1-beta*rho_omega), demand kappa*x_bar/(1-beta).
CumulativeChannels cumulative_decomposition(const CountryCalibration& country,
                                            double beta, double avg_pi0,
                                            double omega0,
                                            double wedge_persistence,
                                            double avg_gap);

struct VarianceDecomposition {
  double standard = 0.0;
  double wedge = 0.0;
  double covariance = 0.0;  // 2 Cov(R, S theta omega) u^2
};

// Cross-country variance of cumulative core inflation split into standard
// pass-through, wedge, and covariance terms; GDP-weighted moments.
VarianceDecomposition variance_decomposition(
    const std::vector<double>& gdp_weights, const std::vector<double>& R,
    const std::vector<double>& S, const std::vector<double>& omega,
    const std::vector<double>& theta_bar, double u);

SufficientStats compute_all(const CountryCalibration& country,
                            const PriceChange& dp, double lambda_e);

// Lag-1 autocorrelation over quarters [first,last] of a wedge path; the
// convention used to extract rho_omega from a model run.
double wedge_path_persistence(const std::vector<double>& omega_path,
                              int first = 1, int last = 20);

}  // namespace hankwedge::stats
