#pragma once
#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "hankwedge/income.hpp"

// Heterogeneous-agent consumption-savings block: endogenous-gridpoints
// steady state, lottery-based stationary distribution, and sequence-space
// Jacobians via one backward policy sweep plus one forward expectation sweep.
namespace hankwedge::hh {

using RMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using IMat =
    Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct HouseholdParams {
  double beta = 0.99;
  double sigma = 2.0;
  double r_ss = 0.005;
  double wage = 1.0;       // per efficiency unit
  double transfer = 0.0;   // steady-state net transfer
  IncomeProcess income;
  AssetGrid grid;
  int max_iter = 50000;
  double policy_tol = 1e-10;
  double dist_tol = 1e-12;
};

struct HouseholdSteadyState {
  HouseholdParams p;
  RMat c;       // consumption policy, (n_e, n_a)
  RMat a_next;  // savings policy
  RMat D;       // stationary distribution over (e, a)
  IMat lot_idx;  // lottery bracket of a_next
  RMat lot_w;    // weight on the lower bracket point
  double C_ss = 0.0;
  double A_ss = 0.0;
  double mpc = 0.0;  // impact consumption response to a one-quarter transfer
  int policy_iters = 0;
  int dist_iters = 0;
};

// EGM iteration to policy convergence, then Young-lottery iteration to the
// stationary distribution. Throws on non-convergence.
HouseholdSteadyState solve_steady_state(const HouseholdParams& p);

// One backward Euler step: from next-period consumption policy and prices,
// the current-period policies. r_next enters the Euler factor, the
// contemporaneous arguments enter the budget.
void egm_step(const HouseholdParams& p, const RMat& c_next, double r_next,
              double r_now, double w_now, double tr_now, RMat& c_out,
              RMat& a_out);

// Lottery representation of a savings policy on the asset grid.
void build_lottery(const AssetGrid& grid, const RMat& a_next, IMat& idx,
                   RMat& w);

// D_{t+1} from D_t under a given lottery and the income transition.
void forward_distribution(const IncomeProcess& inc, const IMat& idx,
                          const RMat& w, const RMat& D, RMat& D_next);

enum class Input { r, w, transfer };
enum class Output { C, A };

struct JacobianSet {
  int T = 0;
  Eigen::MatrixXd C_r, C_w, C_T;
  Eigen::MatrixXd A_r, A_w, A_T;
  const Eigen::MatrixXd& get(Output o, Input i) const;
};

// Fake-news Jacobians of aggregate C and A paths with respect to r, wage and
// transfer paths, truncated at horizon T.
JacobianSet fake_news_jacobians(const HouseholdSteadyState& ss, int T);
Eigen::MatrixXd fake_news_jacobian(const HouseholdSteadyState& ss, Input input,
                                   Output output, int T);

// Full perfect-foresight household transition for given input deviation
// paths; used as the finite-difference oracle against the fake-news
// Jacobians and for diagnostics. Returns aggregate C and A paths.
struct TransitionPaths {
  Eigen::VectorXd C;
  Eigen::VectorXd A;
};
TransitionPaths household_transition(const HouseholdSteadyState& ss,
                                     const Eigen::VectorXd& dr,
                                     const Eigen::VectorXd& dw,
                                     const Eigen::VectorXd& dtr);

// Binary cache: row-major doubles with a JSON sidecar holding labels and
// dimensions. Returns false when the entry is absent or does not match.
bool load_cached_jacobians(const std::string& cache_dir, std::uint64_t key,
                           int T, JacobianSet& out);
void store_cached_jacobians(const std::string& cache_dir, std::uint64_t key,
                            const JacobianSet& js);

}  // namespace hankwedge::hh
