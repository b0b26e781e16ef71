#include <atomic>
#include <cstdlib>
#include <string>

#include "convexcert/simd/kernels.hpp"

namespace convexcert::simd {
namespace {

bool cpu_has_avx2() {
#if defined(CONVEXCERT_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Level initial_level() {
  Level level = detected_level();
  if (const char* env = std::getenv("CONVEXCERT_SIMD")) {
    const std::string want(env);
    if (want == "scalar") level = Level::scalar;
  }
  return level;
}

std::atomic<Level>& current() {
  static std::atomic<Level> level{initial_level()};
  return level;
}

}  // namespace

std::string_view level_name(Level level) {
  switch (level) {
    case Level::scalar:
      return "scalar";
    case Level::avx2:
      return "avx2";
  }
  return "unknown";
}

Level detected_level() {
  static const Level level = cpu_has_avx2() ? Level::avx2 : Level::scalar;
  return level;
}

Level active_level() { return current().load(std::memory_order_relaxed); }

Level set_level(Level level) {
  if (level == Level::avx2 && detected_level() != Level::avx2) level = Level::scalar;
  current().store(level, std::memory_order_relaxed);
  return level;
}

double dot(std::span<const double> a, std::span<const double> b) {
#if defined(CONVEXCERT_HAVE_AVX2)
  if (active_level() == Level::avx2) return avx2::dot(a, b);
#endif
  return scalar::dot(a, b);
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
#if defined(CONVEXCERT_HAVE_AVX2)
  if (active_level() == Level::avx2) return avx2::axpy(alpha, x, y);
#endif
  scalar::axpy(alpha, x, y);
}

void evaluate_batch(const FlatPolynomial& poly, const PointBatch& points,
                    std::span<double> out) {
#if defined(CONVEXCERT_HAVE_AVX2)
  if (active_level() == Level::avx2) return avx2::evaluate_batch(poly, points, out);
#endif
  scalar::evaluate_batch(poly, points, out);
}

}  // namespace convexcert::simd
