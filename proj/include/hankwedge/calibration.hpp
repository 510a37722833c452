#pragma once
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hankwedge {

struct CalibrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Missing or unreadable files, as opposed to well-formed data that fails
// validation; the CLI maps the two onto different exit codes.
struct IoError : CalibrationError {
  using CalibrationError::CalibrationError;
};

enum class Sector { services, goods };
const char* sector_name(Sector s);
Sector sector_from_string(const std::string& s);

// One worker type (a quintile in the bundled data).
struct WorkerGroup {
  std::string label;
  double eta = 0.0;      // population share
  double theta = 0.0;    // quarterly wage-reset probability
  double alpha_e = 0.0;  // expenditure share, imported essentials
  double alpha_d = 0.0;  // expenditure share, domestic goods
  double alpha_s = 0.0;  // expenditure share, services
  Sector sector = Sector::services;
  double phi = 0.0;  // expectation sensitivity
  std::optional<double> mpc;  // impact MPC override; absent -> solved value
};

struct SectorParams {
  double labor_share = 0.0;
  double calvo_reset = 0.0;  // price-reset probability
  double xi_services = 0.0;  // intermediate-bundle weights, sum to 1
  double xi_goods = 0.0;
  double xi_essentials = 0.0;
  double gdp_weight = 0.0;   // sectoral GDP weight within the country
  double centrality = 0.0;   // I-O eigenvector centrality, filled at load
};

struct CommonParams {
  double beta = 0.99;
  double sigma = 2.0;
  double phi_n = 0.5;
  double chi = 1.0;
  double eps_w = 6.0;
  double eps_trade = 1.5;
  double b_catchup = 0.15;
  double lambda_e = 1.3;
  double phi_bar = 0.35;
  double rho_e = 0.966;
  double sigma_e = 0.5;
  int n_e = 7;
  int n_a = 100;
  double a_max = 200.0;
  double r_ss = 0.005;
  double taylor_pi = 1.5;
  double taylor_y = 0.125;
  int horizon_T = 80;
  double loss_weight_x = 0.25;
};

struct CountryCalibration {
  std::string code;
  double gdp_weight = 0.0;  // weight within the union
  std::vector<WorkerGroup> groups;
  SectorParams services;
  SectorParams goods;
  std::map<std::string, double> trade_shares;  // partner code -> share

  const SectorParams& sector(Sector s) const {
    return s == Sector::services ? services : goods;
  }
  double self_trade_share() const;
  double theta_bar() const;
  // Population-weighted mean of a per-group accessor.
  template <typename F>
  double group_mean(F&& f) const {
    double acc = 0.0;
    for (const auto& g : groups) acc += g.eta * f(g);
    return acc;
  }
};

struct UnionCalibration {
  CommonParams common;
  std::vector<CountryCalibration> countries;
  const CountryCalibration& country(const std::string& code) const;
};

// ---- policy & scenarios ----------------------------------------------------

struct TransferSpec {
  enum class Kind { none, uniform, targeted } kind = Kind::none;
  double amount = 0.0;       // per-capita (uniform) / per-recipient (targeted)
  std::string target_group;  // label, targeted only
  int duration = 12;         // quarters the transfer is paid, from t=0
};

struct PolicyRegime {
  std::vector<double> taylor_pi_path;  // per-quarter phi_pi; last entry holds
  double taylor_y = 0.125;
  TransferSpec transfer;
  double subsidy = 0.0;  // essentials price reduction, [0,1)

  double phi_pi_at(int t) const {
    if (taylor_pi_path.empty()) return 0.0;
    const std::size_t k = static_cast<std::size_t>(t);
    return k < taylor_pi_path.size() ? taylor_pi_path[k]
                                     : taylor_pi_path.back();
  }
  static PolicyRegime constant(double phi_pi, double phi_y);
  static PolicyRegime delayed(double phi_pi_post, double phi_y, int delay);
};

struct Indexation {
  enum class Kind { none, cpi, type_specific } kind = Kind::none;
  double gamma = 0.0;
};

struct ShockScenario {
  std::vector<double> essentials_path;  // log price deviation u_t, length T
  PolicyRegime policy;
  Indexation indexation;
  bool nonlinear = false;
};

// AR(1) decay from a peak reached at `peak_quarter` after a geometric ramp,
// tapered to exactly zero over the last few quarters so the truncated horizon
// is valid (|u_{T-1}| = 0).
std::vector<double> ar1_shock_path(int T, double peak, double persistence,
                                   int peak_quarter);
// Double-exponential hump u_t ~ decay^t - rise^t, scaled to the given peak.
std::vector<double> hump_shock_path(int T, double peak, double rise,
                                    double decay);

// ---- operations ------------------------------------------------------------

// Quarterly reset probability from an average contract duration in quarters.
double reset_prob_from_duration(double duration_quarters);

// Dominant left eigenvector of the 2x2 domestic input-output matrix,
// normalized to sum to one. Closed form.
void compute_centrality(CountryCalibration& country);

// Loads common.json, countries.csv and per-country groups.csv / sectors.csv /
// trade.csv from `dir`, interpolating quintiles Q2/Q4 when only Q1/Q3/Q5 are
// present, and validates every invariant.
UnionCalibration load_union(const std::string& dir);

ShockScenario load_scenario(const std::string& path, int horizon_T);

void validate(const UnionCalibration& u);

// Round-trip support: write a calibration back out in the loadable layout.
void save_union(const UnionCalibration& u, const std::string& dir);

// Collapse to the nested representative-agent configuration: one pooled
// group per country with population-weighted shares and reset probability,
// phi = 0. The caller is expected to also disable the catch-up term.
CountryCalibration standard_twin(const CountryCalibration& c);

// Pool quintiles into n_groups contiguous blocks (population-weighted).
CountryCalibration collapse_groups(const CountryCalibration& c, int n_groups);

// FNV-1a over the canonical serialization; keys Jacobian cache entries and
// experiment manifests.
std::uint64_t content_hash(const UnionCalibration& u);
std::uint64_t content_hash(const ShockScenario& s);

}  // namespace hankwedge
