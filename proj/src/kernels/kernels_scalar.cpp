#include "kernels_internal.hpp"

// Reference implementations. Four-way accumulators in dot() mirror the AVX2
// lane structure so both variants round identically on the equivalence tests.
namespace hankwedge::kernels::scalar {

void gather_lerp(double* dst, const double* src, const std::int32_t* idx,
                 const double* w, std::size_t n, std::size_t /*src_len*/) {
  for (std::size_t i = 0; i < n; ++i) {
    const std::int32_t k = idx[i];
    dst[i] = w[i] * src[k] + (1.0 - w[i]) * src[k + 1];
  }
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double dot(const double* x, const double* y, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += x[i] * y[i];
    s1 += x[i + 1] * y[i + 1];
    s2 += x[i + 2] * y[i + 2];
    s3 += x[i + 3] * y[i + 3];
  }
  double tail = 0.0;
  for (; i < n; ++i) tail += x[i] * y[i];
  return ((s0 + s2) + (s1 + s3)) + tail;
}

void add(const double* a, const double* b, double* dst, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] + b[i];
}

}  // namespace hankwedge::kernels::scalar
