// Compiled with -mavx2 (and without -mfma). Only reached after a runtime
// CPU check in dispatch.cpp.
#include "arealepi/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

namespace arealepi::kernels::detail {
namespace {

// (l0 + l2) + (l1 + l3)
inline double reduce_lanes(__m256d acc) {
  const __m128d lo = _mm256_castpd256_pd128(acc);
  const __m128d hi = _mm256_extractf128_pd(acc, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (; i < n; ++i) y[i] = y[i] + a * x[i];
}

double dot(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  double sum = reduce_lanes(acc);
  for (; i < n; ++i) sum = sum + x[i] * y[i];
  return sum;
}

double dot3(const double* w, const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d wx = _mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(x + i));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(wx, _mm256_loadu_pd(y + i)));
  }
  double sum = reduce_lanes(acc);
  for (; i < n; ++i) sum = sum + (w[i] * x[i]) * y[i];
  return sum;
}

void component_means(double lambda, const double* ylag, double phi, const double* slag, const double* endemic,
                     double* within, double* between, double* total, std::size_t n) {
  const __m256d vl = _mm256_set1_pd(lambda);
  const __m256d vp = _mm256_set1_pd(phi);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d a = _mm256_mul_pd(vl, _mm256_loadu_pd(ylag + i));
    const __m256d b = _mm256_mul_pd(vp, _mm256_loadu_pd(slag + i));
    _mm256_storeu_pd(within + i, a);
    _mm256_storeu_pd(between + i, b);
    _mm256_storeu_pd(total + i, _mm256_add_pd(_mm256_add_pd(a, b), _mm256_loadu_pd(endemic + i)));
  }
  for (; i < n; ++i) {
    const double a = lambda * ylag[i];
    const double b = phi * slag[i];
    within[i] = a;
    between[i] = b;
    total[i] = (a + b) + endemic[i];
  }
}

void nb_terms(const double* y, const double* mu, double psi, double* score, double* info, double* curv,
              std::size_t n) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d vpsi = _mm256_set1_pd(psi);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vy = _mm256_loadu_pd(y + i);
    const __m256d vm = _mm256_loadu_pd(mu + i);
    const __m256d d = _mm256_add_pd(one, _mm256_mul_pd(vpsi, vm));
    const __m256d v = _mm256_mul_pd(vm, d);
    _mm256_storeu_pd(score + i, _mm256_div_pd(_mm256_sub_pd(vy, vm), v));
    _mm256_storeu_pd(info + i, _mm256_div_pd(one, v));
    const __m256d num = _mm256_mul_pd(vpsi, _mm256_add_pd(one, _mm256_mul_pd(vpsi, vy)));
    const __m256d c2 = _mm256_div_pd(num, _mm256_mul_pd(d, d));
    const __m256d c1 = _mm256_div_pd(vy, _mm256_mul_pd(vm, vm));
    _mm256_storeu_pd(curv + i, _mm256_sub_pd(c2, c1));
  }
  for (; i < n; ++i) {
    const double d = 1.0 + psi * mu[i];
    const double v = mu[i] * d;
    score[i] = (y[i] - mu[i]) / v;
    info[i] = 1.0 / v;
    curv[i] = (psi * (1.0 + psi * y[i])) / (d * d) - y[i] / (mu[i] * mu[i]);
  }
}

}  // namespace

const Table kAvx2Table{Isa::Avx2, axpy, dot, dot3, component_means, nb_terms};

}  // namespace arealepi::kernels::detail

#endif
