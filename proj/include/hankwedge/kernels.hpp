#pragma once
#include <cstddef>
#include <cstdint>

// Data-parallel inner-loop kernels used by the household block and the
// sequence-space path algebra. Every kernel has a scalar reference
// implementation; on x86 an AVX2 variant is selected at runtime when the CPU
// supports it. Variant selection can be forced with HANKWEDGE_SIMD=scalar
// (or avx2/auto), which the equivalence tests use to compare both paths.
namespace hankwedge::kernels {

enum class Isa { scalar, avx2 };

// ISA actually in use after dispatch (env override + cpuid).
Isa active();
const char* isa_name(Isa);

// Force a specific ISA; throws if the CPU cannot run it. Test hook.
void force(Isa);
void reset_dispatch();  // back to auto

// dst[i] = w[i]*src[idx[i]] + (1-w[i])*src[idx[i]+1].
// Core of linear interpolation on a grid and of expectation-vector
// iteration through the savings policy. idx[i]+1 must be < src_len.
void gather_lerp(double* dst, const double* src, const std::int32_t* idx,
                 const double* w, std::size_t n, std::size_t src_len);

// y += a*x
void axpy(double a, const double* x, double* y, std::size_t n);

// sum_i x[i]*y[i]
double dot(const double* x, const double* y, std::size_t n);

// dst[i] = a[i] + b[i]
void add(const double* a, const double* b, double* dst, std::size_t n);

// Fused step of the fake-news corner recursion: dst[i] = prev[i] + f[i].
// Same arithmetic as add(); kept as its own entry point so profiles show
// where Jacobian assembly time goes.
void shift_accumulate(const double* prev, const double* f, double* dst,
                      std::size_t n);

// Young-lottery mass deposit: for each source cell k with mass m[k], deposit
// m[k]*w[k] at idx[k] and m[k]*(1-w[k]) at idx[k]+1. Scatter with collisions,
// scalar on every ISA.
void lottery_push(const double* m, const std::int32_t* idx, const double* w,
                  std::size_t n, double* dst);

}  // namespace hankwedge::kernels
