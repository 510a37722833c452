#pragma once
#include <Eigen/Dense>
#include <vector>

namespace hankwedge::hh {

// Discretized log-productivity process.
struct IncomeProcess {
  Eigen::VectorXd grid;        // log levels, symmetric about 0
  Eigen::MatrixXd transition;  // row-stochastic
  Eigen::VectorXd stationary;  // left eigenvector, sums to 1
  // exp(grid) normalized so stationary-weighted mean efficiency is 1
  Eigen::VectorXd levels;
};

// Rouwenhorst discretization of log e' = rho log e + sigma eps. `sigma` is
// the innovation s.d.; the grid spans +-sqrt(n-1) unconditional s.d.
IncomeProcess rouwenhorst(double rho, double sigma, int n);

// Quadratically spaced asset grid on [0, a_max]: a_i = a_max (i/(n-1))^2.
struct AssetGrid {
  Eigen::VectorXd nodes;
  static AssetGrid make(int n, double a_max);
};

}  // namespace hankwedge::hh
