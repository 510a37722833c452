#include "hankwedge/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>

#include "kernels_internal.hpp"

namespace hankwedge::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Isa resolve_from_env() {
  const char* e = std::getenv("HANKWEDGE_SIMD");
  if (e != nullptr) {
    if (std::strcmp(e, "scalar") == 0) return Isa::scalar;
    if (std::strcmp(e, "avx2") == 0) {
      if (!cpu_has_avx2())
        throw std::runtime_error("HANKWEDGE_SIMD=avx2 but CPU lacks AVX2");
      return Isa::avx2;
    }
    // anything else, including "auto", falls through to detection
  }
  return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

struct Table {
  Isa isa;
  void (*gather_lerp)(double*, const double*, const std::int32_t*,
                      const double*, std::size_t, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  double (*dot)(const double*, const double*, std::size_t);
  void (*add)(const double*, const double*, double*, std::size_t);
};

Table make_table(Isa isa) {
  if (isa == Isa::avx2)
    return {Isa::avx2, avx2::gather_lerp, avx2::axpy, avx2::dot, avx2::add};
  return {Isa::scalar, scalar::gather_lerp, scalar::axpy, scalar::dot,
          scalar::add};
}

Table& table() {
  static Table t = make_table(resolve_from_env());
  return t;
}

}  // namespace

Isa active() { return table().isa; }

const char* isa_name(Isa isa) {
  return isa == Isa::avx2 ? "avx2" : "scalar";
}

void force(Isa isa) {
  if (isa == Isa::avx2 && !cpu_has_avx2())
    throw std::runtime_error("cannot force avx2: unsupported CPU");
  table() = make_table(isa);
}

void reset_dispatch() { table() = make_table(resolve_from_env()); }

void gather_lerp(double* dst, const double* src, const std::int32_t* idx,
                 const double* w, std::size_t n, std::size_t src_len) {
  table().gather_lerp(dst, src, idx, w, n, src_len);
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  table().axpy(a, x, y, n);
}

double dot(const double* x, const double* y, std::size_t n) {
  return table().dot(x, y, n);
}

void add(const double* a, const double* b, double* dst, std::size_t n) {
  table().add(a, b, dst, n);
}

void shift_accumulate(const double* prev, const double* f, double* dst,
                      std::size_t n) {
  table().add(prev, f, dst, n);
}

// Scatter into overlapping bins; collisions rule out lane-parallel stores, so
// the same scalar loop backs every ISA. Each deposit pair sums to exactly
// m[k]: one side is a rounded product, the other its Sterbenz-exact
// complement, so the push itself never creates or destroys mass.
void lottery_push(const double* m, const std::int32_t* idx, const double* w,
                  std::size_t n, double* dst) {
  for (std::size_t k = 0; k < n; ++k) {
    double lo, hi;
    if (w[k] >= 0.5) {
      lo = m[k] * w[k];
      hi = m[k] - lo;
    } else {
      hi = m[k] * (1.0 - w[k]);
      lo = m[k] - hi;
    }
    dst[idx[k]] += lo;
    dst[idx[k] + 1] += hi;
  }
}

}  // namespace hankwedge::kernels
