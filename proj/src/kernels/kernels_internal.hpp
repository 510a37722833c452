#pragma once
#include <cstddef>
#include <cstdint>

namespace hankwedge::kernels {

namespace scalar {
void gather_lerp(double*, const double*, const std::int32_t*, const double*,
                 std::size_t, std::size_t);
void axpy(double, const double*, double*, std::size_t);
double dot(const double*, const double*, std::size_t);
void add(const double*, const double*, double*, std::size_t);
}  // namespace scalar

namespace avx2 {
void gather_lerp(double*, const double*, const std::int32_t*, const double*,
                 std::size_t, std::size_t);
void axpy(double, const double*, double*, std::size_t);
double dot(const double*, const double*, std::size_t);
void add(const double*, const double*, double*, std::size_t);
}  // namespace avx2

}  // namespace hankwedge::kernels
