#pragma once

// Data-parallel inner loops used by the SDP solver and the grid search.
//
// Every kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant. The public entry points dispatch on the level selected at startup
// (CPU detection, overridable with CONVEXCERT_SIMD=scalar|avx2 or
// set_level()). The per-level namespaces are exposed so tests can check the
// variants against each other.

#include <cstddef>
#include <span>
#include <string_view>

namespace convexcert::simd {

enum class Level { scalar, avx2 };

std::string_view level_name(Level level);

// Best level supported by this CPU and build.
Level detected_level();

// Level currently used by the dispatching entry points.
Level active_level();

// Forces a level. Requesting a level the CPU cannot run falls back to scalar.
// Returns the level actually installed.
Level set_level(Level level);

// Points for batched evaluation are stored structure-of-arrays: coordinate k of
// point p lives at coords[k * stride + p].
struct PointBatch {
  std::span<const double> coords;
  std::size_t arity = 0;
  std::size_t count = 0;
  std::size_t stride = 0;
};

// A polynomial flattened for evaluation: term t has coefficient coeffs[t] and
// exponent exps[t * arity + k] on coordinate k.
struct FlatPolynomial {
  std::span<const double> coeffs;
  std::span<const unsigned> exps;
  std::size_t arity = 0;
};

double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void evaluate_batch(const FlatPolynomial& poly, const PointBatch& points,
                    std::span<double> out);

namespace scalar {
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void evaluate_batch(const FlatPolynomial& poly, const PointBatch& points,
                    std::span<double> out);
}  // namespace scalar

#if defined(CONVEXCERT_HAVE_AVX2)
namespace avx2 {
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void evaluate_batch(const FlatPolynomial& poly, const PointBatch& points,
                    std::span<double> out);
}  // namespace avx2
#endif

}  // namespace convexcert::simd
