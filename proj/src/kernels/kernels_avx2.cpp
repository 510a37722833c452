#include <immintrin.h>

#include "kernels_internal.hpp"

// AVX2 variants. No FMA in dot/lerp arithmetic where it would change rounding
// relative to the scalar reference; mul+add keeps the two paths bit-equal on
// the equivalence suite.
namespace hankwedge::kernels::avx2 {

void gather_lerp(double* dst, const double* src, const std::int32_t* idx,
                 const double* w, std::size_t n, std::size_t /*src_len*/) {
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m128i k = _mm_loadu_si128(reinterpret_cast<const __m128i*>(idx + i));
    const __m256d lo = _mm256_i32gather_pd(src, k, 8);
    const __m256d hi =
        _mm256_i32gather_pd(src + 1, k, 8);  // src[idx+1] via shifted base
    const __m256d wi = _mm256_loadu_pd(w + i);
    const __m256d r = _mm256_add_pd(_mm256_mul_pd(wi, lo),
                                    _mm256_mul_pd(_mm256_sub_pd(one, wi), hi));
    _mm256_storeu_pd(dst + i, r);
  }
  for (; i < n; ++i) {
    const std::int32_t k = idx[i];
    dst[i] = w[i] * src[k] + (1.0 - w[i]) * src[k + 1];
  }
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vy = _mm256_loadu_pd(y + i);
    const __m256d vx = _mm256_loadu_pd(x + i);
    _mm256_storeu_pd(y + i, _mm256_add_pd(vy, _mm256_mul_pd(va, vx)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

double dot(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(x + i),
                                           _mm256_loadu_pd(y + i)));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double tail = 0.0;
  for (; i < n; ++i) tail += x[i] * y[i];
  return ((lanes[0] + lanes[2]) + (lanes[1] + lanes[3])) + tail;
}

void add(const double* a, const double* b, double* dst, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(a + i),
                                            _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) dst[i] = a[i] + b[i];
}

}  // namespace hankwedge::kernels::avx2
