#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "hankwedge/income.hpp"

namespace hh = hankwedge::hh;

TEST_CASE("two-state rouwenhorst has the closed-form transition") {
  auto ip = hh::rouwenhorst(0.966, 0.5, 2);
  const double p = (1.0 + 0.966) / 2.0;
  CHECK(ip.transition(0, 0) == doctest::Approx(p).epsilon(1e-14));
  CHECK(ip.transition(0, 1) == doctest::Approx(1.0 - p).epsilon(1e-14));
  CHECK(ip.transition(1, 0) == doctest::Approx(1.0 - p).epsilon(1e-14));
  CHECK(ip.transition(0, 0) == doctest::Approx(0.983).epsilon(1e-12));
}

TEST_CASE("zero persistence gives iid rows") {
  auto ip = hh::rouwenhorst(0.0, 0.3, 5);
  for (int i = 1; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      CHECK(ip.transition(i, j) ==
            doctest::Approx(ip.transition(0, j)).epsilon(1e-12));
}

TEST_CASE("rows are stochastic, grid symmetric, stationary sums to one") {
  auto ip = hh::rouwenhorst(0.966, 0.5, 7);
  for (int i = 0; i < 7; ++i) {
    CHECK(ip.transition.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ip.grid(i) == doctest::Approx(-ip.grid(6 - i)).epsilon(1e-12));
  }
  CHECK(ip.stationary.sum() == doctest::Approx(1.0).epsilon(1e-10));
  // stationary distribution is a left eigenvector
  Eigen::VectorXd v = ip.transition.transpose() * ip.stationary;
  CHECK((v - ip.stationary).lpNorm<Eigen::Infinity>() < 1e-10);
  // unit mean efficiency after normalization
  CHECK(ip.stationary.dot(ip.levels) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("simulated chain reproduces the AR(1) autocorrelation") {
  auto ip = hh::rouwenhorst(0.966, 0.5, 7);
  std::mt19937_64 rng(20240901);
  std::uniform_real_distribution<double> U(0.0, 1.0);

  const int N = 1'000'000;
  int state = 3;
  double sum = 0.0, sumsq = 0.0, cross = 0.0;
  double prev = ip.grid(state);
  for (int t = 0; t < N; ++t) {
    double u = U(rng), acc = 0.0;
    int next = 0;
    for (int j = 0; j < 7; ++j) {
      acc += ip.transition(state, j);
      if (u <= acc) {
        next = j;
        break;
      }
      next = j;
    }
    state = next;
    const double x = ip.grid(state);
    sum += x;
    sumsq += x * x;
    if (t > 0) cross += x * prev;
    prev = x;
  }
  const double mean = sum / N;
  const double var = sumsq / N - mean * mean;
  const double autocov = cross / (N - 1) - mean * mean;
  const double rho_hat = autocov / var;
  CHECK(std::abs(rho_hat - 0.966) < 0.005);
  // grid spread matches the unconditional s.d.
  const double sd_uncond = 0.5 / std::sqrt(1.0 - 0.966 * 0.966);
  CHECK(ip.grid(6) == doctest::Approx(std::sqrt(6.0) * sd_uncond).epsilon(1e-12));
  CHECK(std::abs(std::sqrt(var) - sd_uncond) < 0.05 * sd_uncond);
}

TEST_CASE("rouwenhorst rejects bad arguments") {
  CHECK_THROWS_AS(hh::rouwenhorst(0.9, 0.5, 1), std::invalid_argument);
  CHECK_THROWS_AS(hh::rouwenhorst(1.0, 0.5, 5), std::invalid_argument);
}

TEST_CASE("asset grid is quadratic with a zero first node") {
  auto g = hh::AssetGrid::make(100, 200.0);
  CHECK(g.nodes(0) == 0.0);
  CHECK(g.nodes(99) == doctest::Approx(200.0).epsilon(1e-14));
  for (int i = 0; i < 100; ++i) {
    const double f = static_cast<double>(i) / 99.0;
    CHECK(g.nodes(i) == doctest::Approx(200.0 * f * f).epsilon(1e-14));
    if (i > 0) CHECK(g.nodes(i) > g.nodes(i - 1));
  }
}
