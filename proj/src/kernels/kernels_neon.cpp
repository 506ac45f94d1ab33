#include "arealepi/kernels.hpp"

#if defined(__aarch64__) || defined(__ARM_NEON)

#include <arm_neon.h>

namespace arealepi::kernels::detail {
namespace {

// Two 2-lane registers hold lanes (l0, l1) and (l2, l3).
inline double reduce_lanes(float64x2_t lo, float64x2_t hi) {
  const float64x2_t pair = vaddq_f64(lo, hi);
  return vgetq_lane_f64(pair, 0) + vgetq_lane_f64(pair, 1);
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
  }
  for (; i < n; ++i) y[i] = y[i] + a * x[i];
}

double dot(const double* x, const double* y, std::size_t n) {
  float64x2_t lo = vdupq_n_f64(0.0), hi = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    lo = vaddq_f64(lo, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
    hi = vaddq_f64(hi, vmulq_f64(vld1q_f64(x + i + 2), vld1q_f64(y + i + 2)));
  }
  double sum = reduce_lanes(lo, hi);
  for (; i < n; ++i) sum = sum + x[i] * y[i];
  return sum;
}

double dot3(const double* w, const double* x, const double* y, std::size_t n) {
  float64x2_t lo = vdupq_n_f64(0.0), hi = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    lo = vaddq_f64(lo, vmulq_f64(vmulq_f64(vld1q_f64(w + i), vld1q_f64(x + i)), vld1q_f64(y + i)));
    hi = vaddq_f64(hi, vmulq_f64(vmulq_f64(vld1q_f64(w + i + 2), vld1q_f64(x + i + 2)), vld1q_f64(y + i + 2)));
  }
  double sum = reduce_lanes(lo, hi);
  for (; i < n; ++i) sum = sum + (w[i] * x[i]) * y[i];
  return sum;
}

void component_means(double lambda, const double* ylag, double phi, const double* slag, const double* endemic,
                     double* within, double* between, double* total, std::size_t n) {
  const float64x2_t vl = vdupq_n_f64(lambda);
  const float64x2_t vp = vdupq_n_f64(phi);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t a = vmulq_f64(vl, vld1q_f64(ylag + i));
    const float64x2_t b = vmulq_f64(vp, vld1q_f64(slag + i));
    vst1q_f64(within + i, a);
    vst1q_f64(between + i, b);
    vst1q_f64(total + i, vaddq_f64(vaddq_f64(a, b), vld1q_f64(endemic + i)));
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
  const float64x2_t one = vdupq_n_f64(1.0);
  const float64x2_t vpsi = vdupq_n_f64(psi);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t vy = vld1q_f64(y + i);
    const float64x2_t vm = vld1q_f64(mu + i);
    const float64x2_t d = vaddq_f64(one, vmulq_f64(vpsi, vm));
    const float64x2_t v = vmulq_f64(vm, d);
    vst1q_f64(score + i, vdivq_f64(vsubq_f64(vy, vm), v));
    vst1q_f64(info + i, vdivq_f64(one, v));
    const float64x2_t c2 = vdivq_f64(vmulq_f64(vpsi, vaddq_f64(one, vmulq_f64(vpsi, vy))), vmulq_f64(d, d));
    const float64x2_t c1 = vdivq_f64(vy, vmulq_f64(vm, vm));
    vst1q_f64(curv + i, vsubq_f64(c2, c1));
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

const Table kNeonTable{Isa::Neon, axpy, dot, dot3, component_means, nb_terms};

}  // namespace arealepi::kernels::detail

#endif
