#include "convexcert/simd/kernels.hpp"

#include <cassert>

namespace convexcert::simd::scalar {

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void evaluate_batch(const FlatPolynomial& poly, const PointBatch& points,
                    std::span<double> out) {
  assert(out.size() >= points.count);
  assert(poly.arity == points.arity);
  for (std::size_t p = 0; p < points.count; ++p) out[p] = 0.0;
  for (std::size_t t = 0; t < poly.coeffs.size(); ++t) {
    const unsigned* e = poly.exps.data() + t * poly.arity;
    for (std::size_t p = 0; p < points.count; ++p) {
      double term = poly.coeffs[t];
      for (std::size_t k = 0; k < poly.arity; ++k) {
        const double c = points.coords[k * points.stride + p];
        for (unsigned r = 0; r < e[k]; ++r) term *= c;
      }
      out[p] += term;
    }
  }
}

}  // namespace convexcert::simd::scalar
