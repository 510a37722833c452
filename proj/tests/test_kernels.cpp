#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "hankwedge/kernels.hpp"

namespace kn = hankwedge::kernels;

namespace {

struct Case {
  std::vector<double> x, y, w, mass;
  std::vector<std::int32_t> idx;
};

Case random_case(std::size_t n, std::size_t src_len, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::uniform_real_distribution<double> W(0.0, 1.0);
  std::uniform_int_distribution<std::int32_t> I(0,
                                                static_cast<int>(src_len) - 2);
  Case c;
  c.x.resize(src_len);
  c.y.resize(src_len);
  c.w.resize(n);
  c.mass.resize(n);
  c.idx.resize(n);
  for (auto& v : c.x) v = U(rng);
  for (auto& v : c.y) v = U(rng);
  for (std::size_t i = 0; i < n; ++i) {
    c.w[i] = W(rng);
    c.mass[i] = W(rng);
    c.idx[i] = I(rng);
  }
  return c;
}

bool have_avx2() {
  try {
    kn::force(kn::Isa::avx2);
    kn::reset_dispatch();
    return true;
  } catch (...) {
    kn::reset_dispatch();
    return false;
  }
}

}  // namespace

TEST_CASE("scalar and avx2 variants agree") {
  if (!have_avx2()) {
    MESSAGE("no AVX2 on this CPU; scalar-only run");
    return;
  }
  for (unsigned seed = 1; seed <= 25; ++seed) {
    // odd sizes on purpose: exercise the vector body and the remainder loop
    const std::size_t n = 3 + (seed * 37) % 450;
    const std::size_t src_len = 64 + (seed % 5);
    Case c = random_case(n, src_len, seed);

    std::vector<double> out_s(n), out_v(n);
    std::vector<double> y_s(c.x), y_v(c.x);

    kn::force(kn::Isa::scalar);
    kn::gather_lerp(out_s.data(), c.x.data(), c.idx.data(), c.w.data(), n,
                    src_len);
    kn::axpy(0.37, c.y.data(), y_s.data(), src_len);
    const double dot_s = kn::dot(c.x.data(), c.y.data(), src_len);

    kn::force(kn::Isa::avx2);
    kn::gather_lerp(out_v.data(), c.x.data(), c.idx.data(), c.w.data(), n,
                    src_len);
    kn::axpy(0.37, c.y.data(), y_v.data(), src_len);
    const double dot_v = kn::dot(c.x.data(), c.y.data(), src_len);

    kn::reset_dispatch();

    for (std::size_t i = 0; i < n; ++i) CHECK(out_s[i] == out_v[i]);
    for (std::size_t i = 0; i < src_len; ++i) CHECK(y_s[i] == y_v[i]);
    CHECK(dot_s == doctest::Approx(dot_v).epsilon(1e-14));
  }
}

TEST_CASE("gather_lerp interpolates endpoints exactly") {
  std::vector<double> src{1.0, 2.0, 4.0, 8.0};
  std::vector<std::int32_t> idx{0, 1, 2};
  std::vector<double> w{1.0, 0.0, 0.5};
  std::vector<double> out(3);
  kn::gather_lerp(out.data(), src.data(), idx.data(), w.data(), 3, 4);
  CHECK(out[0] == 1.0);
  CHECK(out[1] == 4.0);
  CHECK(out[2] == doctest::Approx(6.0));
}

TEST_CASE("lottery_push conserves mass and splits to bracketing bins") {
  const std::size_t n = 257;
  Case c = random_case(n, 64, 99);
  std::vector<double> dst(64, 0.0);
  kn::lottery_push(c.mass.data(), c.idx.data(), c.w.data(), n, dst.data());
  double total = 0.0, want = 0.0;
  for (double v : dst) total += v;
  for (double v : c.mass) want += v;
  CHECK(total == doctest::Approx(want).epsilon(1e-15));

  // single source cell lands on exactly the two bracketing bins
  std::fill(dst.begin(), dst.end(), 0.0);
  const double m = 0.7, wt = 0.25;
  const std::int32_t k = 10;
  kn::lottery_push(&m, &k, &wt, 1, dst.data());
  CHECK(dst[10] == doctest::Approx(0.175));
  CHECK(dst[11] == doctest::Approx(0.525));
  for (int i = 0; i < 64; ++i)
    if (i != 10 && i != 11) CHECK(dst[i] == 0.0);
}

TEST_CASE("shift_accumulate equals elementwise add") {
  Case c = random_case(8, 129, 7);
  std::vector<double> out(129);
  kn::shift_accumulate(c.x.data(), c.y.data(), out.data(), 129);
  for (std::size_t i = 0; i < 129; ++i) CHECK(out[i] == c.x[i] + c.y[i]);
}
