#include "hankwedge/income.hpp"

#include <cmath>
#include <stdexcept>

namespace hankwedge::hh {

IncomeProcess rouwenhorst(double rho, double sigma, int n) {
  if (n < 2) throw std::invalid_argument("rouwenhorst needs n >= 2");
  if (std::abs(rho) >= 1.0)
    throw std::invalid_argument("rouwenhorst needs |rho| < 1");

  const double p = (1.0 + rho) / 2.0;
  Eigen::MatrixXd P(2, 2);
  P << p, 1.0 - p, 1.0 - p, p;
  for (int m = 3; m <= n; ++m) {
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(m, m);
    Q.topLeftCorner(m - 1, m - 1) += p * P;
    Q.topRightCorner(m - 1, m - 1) += (1.0 - p) * P;
    Q.bottomLeftCorner(m - 1, m - 1) += (1.0 - p) * P;
    Q.bottomRightCorner(m - 1, m - 1) += p * P;
    Q.middleRows(1, m - 2) *= 0.5;
    P = Q;
  }

  IncomeProcess ip;
  ip.transition = P;
  // make each row sum to exactly 1.0 in floating point; keeps long forward
  // iterations of the distribution from leaking mass
  for (int i = 0; i < n; ++i) {
    const double resid = 1.0 - ip.transition.row(i).sum();
    int jmax = 0;
    ip.transition.row(i).maxCoeff(&jmax);
    ip.transition(i, jmax) += resid;
  }
  const double sd_uncond = sigma / std::sqrt(1.0 - rho * rho);
  const double psi = std::sqrt(static_cast<double>(n - 1)) * sd_uncond;
  ip.grid.resize(n);
  for (int i = 0; i < n; ++i)
    ip.grid(i) = -psi + 2.0 * psi * i / (n - 1);

  // stationary distribution is binomial(n-1, 1/2) for the symmetric case;
  // solve generally by power iteration for robustness
  Eigen::VectorXd d = Eigen::VectorXd::Constant(n, 1.0 / n);
  for (int it = 0; it < 10000; ++it) {
    Eigen::VectorXd next = P.transpose() * d;
    next /= next.sum();
    if ((next - d).lpNorm<1>() < 1e-14) {
      d = next;
      break;
    }
    d = next;
  }
  ip.stationary = d;

  ip.levels = ip.grid.array().exp();
  ip.levels /= ip.stationary.dot(ip.levels);  // unit mean efficiency
  return ip;
}

AssetGrid AssetGrid::make(int n, double a_max) {
  if (n < 2) throw std::invalid_argument("asset grid needs n >= 2");
  AssetGrid g;
  g.nodes.resize(n);
  for (int i = 0; i < n; ++i) {
    const double f = static_cast<double>(i) / (n - 1);
    g.nodes(i) = a_max * f * f;
  }
  return g;
}

}  // namespace hankwedge::hh
