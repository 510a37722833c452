#include "hankwedge/household.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

#include "hankwedge/kernels.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace hankwedge::hh {

namespace {

// marginal utility and its inverse for CRRA
inline double mu(double c, double sigma) { return std::pow(c, -sigma); }
inline double mu_inv(double m, double sigma) {
  return std::pow(m, -1.0 / sigma);
}

// Monotone inversion: given increasing knots x with values on the asset grid
// nodes, interpolate the inverse map at increasing queries q. Writes bracket
// index and lower weight; clamps outside the knot range (lower clamp is the
// borrowing-constraint branch, handled by the caller).
void bracket_sorted(const double* x, int n, const double* q, int m,
                    std::int32_t* idx, double* w) {
  int j = 0;
  for (int i = 0; i < m; ++i) {
    while (j + 2 < n && x[j + 1] <= q[i]) ++j;
    const double lo = x[j], hi = x[j + 1];
    double t = hi > lo ? (q[i] - lo) / (hi - lo) : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    idx[i] = j;
    w[i] = 1.0 - t;  // weight on the lower knot
  }
}

}  // namespace

void egm_step(const HouseholdParams& p, const RMat& c_next, double r_next,
              double r_now, double w_now, double tr_now, RMat& c_out,
              RMat& a_out) {
  const int ne = static_cast<int>(p.income.grid.size());
  const int na = static_cast<int>(p.grid.nodes.size());
  const double* agrid = p.grid.nodes.data();

  // expected marginal utility over tomorrow's income states
  RMat mu_next(ne, na);
  for (int e = 0; e < ne; ++e)
    for (int a = 0; a < na; ++a) mu_next(e, a) = mu(c_next(e, a), p.sigma);
  RMat emu = p.income.transition * mu_next;  // (ne, na)

  const double ef = p.beta * (1.0 + r_next);
  c_out.resize(ne, na);
  a_out.resize(ne, na);

  std::vector<double> coh_endog(na), c_endog(na), q(na);
  std::vector<std::int32_t> idx(na);
  std::vector<double> w(na);
  for (int e = 0; e < ne; ++e) {
    for (int a = 0; a < na; ++a) {
      c_endog[a] = mu_inv(ef * emu(e, a), p.sigma);
      coh_endog[a] = c_endog[a] + agrid[a];
    }
    const double inc = w_now * p.income.levels(e) + tr_now;
    for (int a = 0; a < na; ++a) q[a] = (1.0 + r_now) * agrid[a] + inc;

    bracket_sorted(coh_endog.data(), na, q.data(), na, idx.data(), w.data());
    kernels::gather_lerp(&a_out(e, 0), agrid, idx.data(), w.data(),
                         static_cast<std::size_t>(na),
                         static_cast<std::size_t>(na));
    for (int a = 0; a < na; ++a) {
      if (q[a] <= coh_endog[0]) a_out(e, a) = 0.0;  // constraint binds
      a_out(e, a) = std::clamp(a_out(e, a), 0.0, agrid[na - 1]);
      c_out(e, a) = q[a] - a_out(e, a);
    }
  }
}

void build_lottery(const AssetGrid& grid, const RMat& a_next, IMat& idx,
                   RMat& w) {
  const int ne = static_cast<int>(a_next.rows());
  const int na = static_cast<int>(a_next.cols());
  idx.resize(ne, na);
  w.resize(ne, na);
  const double* nodes = grid.nodes.data();
  for (int e = 0; e < ne; ++e) {
    int j = 0;
    for (int a = 0; a < na; ++a) {
      const double v = a_next(e, a);  // nondecreasing along a
      while (j + 2 < na && nodes[j + 1] <= v) ++j;
      double t = (v - nodes[j]) / (nodes[j + 1] - nodes[j]);
      t = std::clamp(t, 0.0, 1.0);
      idx(e, a) = j;
      w(e, a) = 1.0 - t;
    }
  }
}

void forward_distribution(const IncomeProcess& inc, const IMat& idx,
                          const RMat& w, const RMat& D, RMat& D_next) {
  const int ne = static_cast<int>(D.rows());
  const int na = static_cast<int>(D.cols());
  RMat half = RMat::Zero(ne, na);
  for (int e = 0; e < ne; ++e)
    kernels::lottery_push(&D(e, 0), &idx(e, 0), &w(e, 0),
                          static_cast<std::size_t>(na), &half(e, 0));
  // income mixing in extended precision, then fold the step's own rounding
  // residual back into the heaviest cell: the map conserves total mass by
  // construction, so iterating it for thousands of periods cannot drift
  D_next.resize(ne, na);
  long double mass_in = 0.0L, mass_out = 0.0L;
  int bmax_e = 0, bmax_a = 0;
  double dmax = -1.0;
  for (int ep = 0; ep < ne; ++ep)
    for (int a = 0; a < na; ++a) {
      long double acc = 0.0L;
      for (int e = 0; e < ne; ++e)
        acc += static_cast<long double>(inc.transition(e, ep)) * half(e, a);
      const double v = static_cast<double>(acc);
      D_next(ep, a) = v;
      mass_out += v;
      if (v > dmax) {
        dmax = v;
        bmax_e = ep;
        bmax_a = a;
      }
    }
  for (int e = 0; e < ne; ++e)
    for (int a = 0; a < na; ++a) mass_in += D(e, a);
  D_next(bmax_e, bmax_a) += static_cast<double>(mass_in - mass_out);
}

HouseholdSteadyState solve_steady_state(const HouseholdParams& p) {
  if (p.beta * (1.0 + p.r_ss) >= 1.0)
    throw std::invalid_argument("household needs beta*(1+r) < 1");
  const int ne = static_cast<int>(p.income.grid.size());
  const int na = static_cast<int>(p.grid.nodes.size());

  HouseholdSteadyState ss;
  ss.p = p;

  // start from the hand-to-mouth policy
  RMat c(ne, na), c_new, a_new;
  for (int e = 0; e < ne; ++e)
    for (int a = 0; a < na; ++a)
      c(e, a) = p.r_ss * p.grid.nodes(a) + p.wage * p.income.levels(e) +
                p.transfer;

  int it = 0;
  for (; it < p.max_iter; ++it) {
    egm_step(p, c, p.r_ss, p.r_ss, p.wage, p.transfer, c_new, a_new);
    const double diff = (c_new - c).cwiseAbs().maxCoeff();
    c.swap(c_new);
    if (diff < p.policy_tol) break;
  }
  if (it == p.max_iter)
    throw std::runtime_error("EGM did not converge within max_iter");
  ss.policy_iters = it + 1;
  ss.c = c;
  egm_step(p, c, p.r_ss, p.r_ss, p.wage, p.transfer, c_new, ss.a_next);
  ss.c = c_new;

  build_lottery(p.grid, ss.a_next, ss.lot_idx, ss.lot_w);

  RMat D(ne, na);
  for (int e = 0; e < ne; ++e)
    for (int a = 0; a < na; ++a)
      D(e, a) = p.income.stationary(e) / static_cast<double>(na);
  RMat D_next;
  for (it = 0; it < p.max_iter; ++it) {
    forward_distribution(p.income, ss.lot_idx, ss.lot_w, D, D_next);
    const double diff = (D_next - D).cwiseAbs().sum();
    D.swap(D_next);
    if (diff < p.dist_tol) break;
  }
  if (it == p.max_iter)
    throw std::runtime_error("distribution iteration did not converge");
  ss.dist_iters = it + 1;
  D /= D.sum();  // shed the tiny mass drift accumulated while iterating
  ss.D = D;

  ss.C_ss = (ss.D.array() * ss.c.array()).sum();
  ss.A_ss = (ss.D.array() * ss.a_next.array()).sum();

  // impact MPC out of a one-quarter transfer, two-sided
  const double h = 1e-5;
  RMat cp, ap, cm, am;
  egm_step(p, ss.c, p.r_ss, p.r_ss, p.wage, p.transfer + h, cp, ap);
  egm_step(p, ss.c, p.r_ss, p.r_ss, p.wage, p.transfer - h, cm, am);
  ss.mpc = ((ss.D.array() * (cp - cm).array()).sum()) / (2.0 * h);
  return ss;
}

namespace {

struct Perturbed {
  std::vector<RMat> dc;  // policy deviations by distance-to-shock
  std::vector<RMat> da;
};

// Backward sweep: policy deviations at each anticipation distance, scaled to
// a unit impulse. Central differences in the impulse size.
Perturbed backward_sweep(const HouseholdSteadyState& ss, Input input, int T,
                         double h) {
  const HouseholdParams& p = ss.p;
  Perturbed out;
  out.dc.resize(T);
  out.da.resize(T);

  auto run = [&](double eps, std::vector<RMat>& cs, std::vector<RMat>& as) {
    double r_next = p.r_ss, r_now = p.r_ss, w_now = p.wage, tr = p.transfer;
    if (input == Input::r) r_now += eps;
    if (input == Input::w) w_now += eps;
    if (input == Input::transfer) tr += eps;
    RMat c_prev, a_prev;
    egm_step(p, ss.c, p.r_ss, r_now, w_now, tr, c_prev, a_prev);
    cs[0] = c_prev;
    as[0] = a_prev;
    for (int k = 1; k < T; ++k) {
      // at distance 1 an r shock also enters through the Euler factor
      const double rn = (input == Input::r && k == 1) ? p.r_ss + eps : p.r_ss;
      RMat c_k, a_k;
      egm_step(p, cs[k - 1], rn, p.r_ss, p.wage, p.transfer, c_k, a_k);
      cs[k] = std::move(c_k);
      as[k] = std::move(a_k);
    }
  };

  std::vector<RMat> cp(T), ap(T), cm(T), am(T);
  run(h, cp, ap);
  run(-h, cm, am);
  for (int k = 0; k < T; ++k) {
    out.dc[k] = (cp[k] - cm[k]) / (2.0 * h);
    out.da[k] = (ap[k] - am[k]) / (2.0 * h);
  }
  return out;
}

// Expectation sweep: E_t(x) = E[y at t | state x], iterated through the
// steady-state transition adjoint.
std::vector<RMat> expectation_sweep(const HouseholdSteadyState& ss,
                                    const RMat& y, int T) {
  const int ne = static_cast<int>(y.rows());
  const int na = static_cast<int>(y.cols());
  std::vector<RMat> E(T);
  E[0] = y;
  RMat gathered(ne, na);
  for (int t = 1; t < T; ++t) {
    RMat next(ne, na);
    for (int e = 0; e < ne; ++e) {
      // value picked up at tomorrow's asset position, before income mixing
      for (int ep = 0; ep < ne; ++ep)
        kernels::gather_lerp(&gathered(ep, 0), &E[t - 1](ep, 0),
                             &ss.lot_idx(e, 0), &ss.lot_w(e, 0),
                             static_cast<std::size_t>(na),
                             static_cast<std::size_t>(na));
      for (int a = 0; a < na; ++a) {
        double acc = 0.0;
        for (int ep = 0; ep < ne; ++ep)
          acc += ss.p.income.transition(e, ep) * gathered(ep, a);
        next(e, a) = acc;
      }
    }
    E[t] = std::move(next);
  }
  return E;
}

// J(t,s) = J(t-1,s-1) + F(t,s); columns are contiguous in Eigen's default
// layout, so run the recursion column by column.
Eigen::MatrixXd fake_news_to_jacobian(const Eigen::MatrixXd& F) {
  const int T = static_cast<int>(F.rows());
  Eigen::MatrixXd J = F;
  for (int s = 1; s < T; ++s)
    kernels::shift_accumulate(&J(0, s - 1), &F(1, s), &J(1, s),
                              static_cast<std::size_t>(T - 1));
  return J;
}

}  // namespace

const Eigen::MatrixXd& JacobianSet::get(Output o, Input i) const {
  if (o == Output::C) {
    if (i == Input::r) return C_r;
    if (i == Input::w) return C_w;
    return C_T;
  }
  if (i == Input::r) return A_r;
  if (i == Input::w) return A_w;
  return A_T;
}

JacobianSet fake_news_jacobians(const HouseholdSteadyState& ss, int T) {
  if (T < 1) throw std::invalid_argument("jacobian horizon must be >= 1");
  const int ne = static_cast<int>(ss.c.rows());
  const int na = static_cast<int>(ss.c.cols());
  const int n = ne * na;
  const double h = 1e-4;

  // expectation stacks, one row per horizon
  const auto Ec = expectation_sweep(ss, ss.c, T);
  const auto Ea = expectation_sweep(ss, ss.a_next, T);
  Eigen::MatrixXd Ec_stack(T, n), Ea_stack(T, n);
  for (int t = 0; t < T; ++t)
    for (int e = 0; e < ne; ++e)
      for (int a = 0; a < na; ++a) {
        Ec_stack(t, e * na + a) = Ec[t](e, a);
        Ea_stack(t, e * na + a) = Ea[t](e, a);
      }

  JacobianSet js;
  js.T = T;

  for (Input input : {Input::r, Input::w, Input::transfer}) {
    const Perturbed pert = backward_sweep(ss, input, T, h);

    Eigen::VectorXd yC(T), yA(T);
    Eigen::MatrixXd dD_stack(n, T);
    const double* nodes = ss.p.grid.nodes.data();
    for (int s = 0; s < T; ++s) {
      yC(s) = (ss.D.array() * pert.dc[s].array()).sum();
      yA(s) = (ss.D.array() * pert.da[s].array()).sum();
      // distribution response to the date-0 policy change: within the
      // lottery bracket, mass moves from the lower to the upper node at
      // rate D * da / bracket width
      RMat dhalf = RMat::Zero(ne, na);
      for (int e = 0; e < ne; ++e)
        for (int a = 0; a < na; ++a) {
          const int j = ss.lot_idx(e, a);
          const double gap = nodes[j + 1] - nodes[j];
          const double flow = ss.D(e, a) * pert.da[s](e, a) / gap;
          dhalf(e, j) -= flow;
          dhalf(e, j + 1) += flow;
        }
      RMat dD = ss.p.income.transition.transpose() * dhalf;
      for (int e = 0; e < ne; ++e)
        for (int a = 0; a < na; ++a) dD_stack(e * na + a, s) = dD(e, a);
    }

    Eigen::MatrixXd Fc(T, T), Fa(T, T);
    Fc.row(0) = yC.transpose();
    Fa.row(0) = yA.transpose();
    if (T > 1) {
      Fc.bottomRows(T - 1).noalias() = Ec_stack.topRows(T - 1) * dD_stack;
      Fa.bottomRows(T - 1).noalias() = Ea_stack.topRows(T - 1) * dD_stack;
    }

    Eigen::MatrixXd Jc = fake_news_to_jacobian(Fc);
    Eigen::MatrixXd Ja = fake_news_to_jacobian(Fa);
    if (input == Input::r) {
      js.C_r = std::move(Jc);
      js.A_r = std::move(Ja);
    } else if (input == Input::w) {
      js.C_w = std::move(Jc);
      js.A_w = std::move(Ja);
    } else {
      js.C_T = std::move(Jc);
      js.A_T = std::move(Ja);
    }
  }
  return js;
}

Eigen::MatrixXd fake_news_jacobian(const HouseholdSteadyState& ss, Input input,
                                   Output output, int T) {
  return fake_news_jacobians(ss, T).get(output, input);
}

TransitionPaths household_transition(const HouseholdSteadyState& ss,
                                     const Eigen::VectorXd& dr,
                                     const Eigen::VectorXd& dw,
                                     const Eigen::VectorXd& dtr) {
  const HouseholdParams& p = ss.p;
  const int T = static_cast<int>(dr.size());
  std::vector<RMat> cs(T), as(T);
  RMat c_next = ss.c;
  for (int t = T - 1; t >= 0; --t) {
    const double r_next = p.r_ss + (t + 1 < T ? dr(t + 1) : 0.0);
    RMat c_t, a_t;
    egm_step(p, c_next, r_next, p.r_ss + dr(t), p.wage + dw(t),
             p.transfer + dtr(t), c_t, a_t);
    cs[t] = std::move(c_t);
    as[t] = std::move(a_t);
    c_next = cs[t];
  }
  TransitionPaths out;
  out.C.resize(T);
  out.A.resize(T);
  RMat D = ss.D, D_next;
  IMat idx;
  RMat w;
  for (int t = 0; t < T; ++t) {
    out.C(t) = (D.array() * cs[t].array()).sum();
    out.A(t) = (D.array() * as[t].array()).sum();
    build_lottery(p.grid, as[t], idx, w);
    forward_distribution(p.income, idx, w, D, D_next);
    D.swap(D_next);
  }
  return out;
}

bool load_cached_jacobians(const std::string& cache_dir, std::uint64_t key,
                           int T, JacobianSet& out) {
  if (cache_dir.empty()) return false;
  char name[64];
  std::snprintf(name, sizeof(name), "%016llx",
                static_cast<unsigned long long>(key));
  const fs::path base = fs::path(cache_dir) / name;
  const fs::path meta_path = base.string() + ".json";
  const fs::path bin_path = base.string() + ".bin";
  if (!fs::exists(meta_path) || !fs::exists(bin_path)) return false;

  json meta;
  {
    std::ifstream in(meta_path);
    try {
      in >> meta;
    } catch (...) {
      return false;
    }
  }
  if (meta.value("T", 0) != T) return false;
  const auto labels = meta.value("matrices", std::vector<std::string>{});
  const std::vector<std::string> want = {"C_r", "C_w", "C_T",
                                         "A_r", "A_w", "A_T"};
  if (labels != want) return false;

  std::ifstream bin(bin_path, std::ios::binary);
  out.T = T;
  for (Eigen::MatrixXd* m :
       {&out.C_r, &out.C_w, &out.C_T, &out.A_r, &out.A_w, &out.A_T}) {
    m->resize(T, T);
    // stored row-major; Eigen default is column-major
    std::vector<double> buf(static_cast<std::size_t>(T) * T);
    bin.read(reinterpret_cast<char*>(buf.data()),
             static_cast<std::streamsize>(buf.size() * sizeof(double)));
    if (!bin) return false;
    for (int i = 0; i < T; ++i)
      for (int j = 0; j < T; ++j) (*m)(i, j) = buf[i * T + j];
  }
  return true;
}

void store_cached_jacobians(const std::string& cache_dir, std::uint64_t key,
                            const JacobianSet& js) {
  if (cache_dir.empty()) return;
  fs::create_directories(cache_dir);
  char name[64];
  std::snprintf(name, sizeof(name), "%016llx",
                static_cast<unsigned long long>(key));
  const fs::path base = fs::path(cache_dir) / name;
  {
    json meta;
    meta["T"] = js.T;
    meta["matrices"] = {"C_r", "C_w", "C_T", "A_r", "A_w", "A_T"};
    meta["layout"] = "row-major float64";
    std::ofstream out(base.string() + ".json");
    out << meta.dump(2) << "\n";
  }
  std::ofstream bin(base.string() + ".bin", std::ios::binary);
  const int T = js.T;
  for (const Eigen::MatrixXd* m :
       {&js.C_r, &js.C_w, &js.C_T, &js.A_r, &js.A_w, &js.A_T}) {
    std::vector<double> buf(static_cast<std::size_t>(T) * T);
    for (int i = 0; i < T; ++i)
      for (int j = 0; j < T; ++j) buf[i * T + j] = (*m)(i, j);
    bin.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(double)));
  }
}

}  // namespace hankwedge::hh
