#include "convexcert/simd/kernels.hpp"

#include <immintrin.h>

#include <cassert>

namespace convexcert::simd::avx2 {

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  const std::size_t n = a.size();
  const double* pa = a.data();
  const double* pb = b.data();
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(pa + i), _mm256_loadu_pd(pb + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(pa + i + 4), _mm256_loadu_pd(pb + i + 4),
                           acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(pa + i), _mm256_loadu_pd(pb + i), acc0);
  }
  acc0 = _mm256_add_pd(acc0, acc1);
  const __m128d lo = _mm256_castpd256_pd128(acc0);
  const __m128d hi = _mm256_extractf128_pd(acc0, 1);
  __m128d s = _mm_add_pd(lo, hi);
  s = _mm_add_sd(s, _mm_unpackhi_pd(s, s));
  double sum = _mm_cvtsd_f64(s);
  for (; i < n; ++i) sum += pa[i] * pb[i];
  return sum;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  const std::size_t n = x.size();
  const double* px = x.data();
  double* py = y.data();
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d r = _mm256_fmadd_pd(va, _mm256_loadu_pd(px + i), _mm256_loadu_pd(py + i));
    _mm256_storeu_pd(py + i, r);
  }
  for (; i < n; ++i) py[i] += alpha * px[i];
}

void evaluate_batch(const FlatPolynomial& poly, const PointBatch& points,
                    std::span<double> out) {
  assert(out.size() >= points.count);
  assert(poly.arity == points.arity);
  const std::size_t count = points.count;
  const std::size_t arity = poly.arity;
  const double* coords = points.coords.data();
  std::size_t p = 0;
  for (; p + 4 <= count; p += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t t = 0; t < poly.coeffs.size(); ++t) {
      const unsigned* e = poly.exps.data() + t * arity;
      __m256d term = _mm256_set1_pd(poly.coeffs[t]);
      for (std::size_t k = 0; k < arity; ++k) {
        if (e[k] == 0) continue;
        const __m256d c = _mm256_loadu_pd(coords + k * points.stride + p);
        for (unsigned r = 0; r < e[k]; ++r) term = _mm256_mul_pd(term, c);
      }
      acc = _mm256_add_pd(acc, term);
    }
    _mm256_storeu_pd(out.data() + p, acc);
  }
  // tail, same operation order as the vector lanes
  for (; p < count; ++p) {
    double acc = 0.0;
    for (std::size_t t = 0; t < poly.coeffs.size(); ++t) {
      const unsigned* e = poly.exps.data() + t * arity;
      double term = poly.coeffs[t];
      for (std::size_t k = 0; k < arity; ++k) {
        const double c = coords[k * points.stride + p];
        for (unsigned r = 0; r < e[k]; ++r) term *= c;
      }
      acc += term;
    }
    out[p] = acc;
  }
}

}  // namespace convexcert::simd::avx2
