#include "arealepi/kernels.hpp"

namespace arealepi::kernels::detail {
namespace {

void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + a * x[i];
}

double dot(const double* x, const double* y, std::size_t n) {
  double l0 = 0.0, l1 = 0.0, l2 = 0.0, l3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    l0 = l0 + x[i] * y[i];
    l1 = l1 + x[i + 1] * y[i + 1];
    l2 = l2 + x[i + 2] * y[i + 2];
    l3 = l3 + x[i + 3] * y[i + 3];
  }
  double sum = (l0 + l2) + (l1 + l3);
  for (; i < n; ++i) sum = sum + x[i] * y[i];
  return sum;
}

double dot3(const double* w, const double* x, const double* y, std::size_t n) {
  double l0 = 0.0, l1 = 0.0, l2 = 0.0, l3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    l0 = l0 + (w[i] * x[i]) * y[i];
    l1 = l1 + (w[i + 1] * x[i + 1]) * y[i + 1];
    l2 = l2 + (w[i + 2] * x[i + 2]) * y[i + 2];
    l3 = l3 + (w[i + 3] * x[i + 3]) * y[i + 3];
  }
  double sum = (l0 + l2) + (l1 + l3);
  for (; i < n; ++i) sum = sum + (w[i] * x[i]) * y[i];
  return sum;
}

void component_means(double lambda, const double* ylag, double phi, const double* slag, const double* endemic,
                     double* within, double* between, double* total, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double a = lambda * ylag[i];
    const double b = phi * slag[i];
    within[i] = a;
    between[i] = b;
    total[i] = (a + b) + endemic[i];
  }
}

void nb_terms(const double* y, const double* mu, double psi, double* score, double* info, double* curv,
              std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double d = 1.0 + psi * mu[i];
    const double v = mu[i] * d;
    score[i] = (y[i] - mu[i]) / v;
    info[i] = 1.0 / v;
    curv[i] = (psi * (1.0 + psi * y[i])) / (d * d) - y[i] / (mu[i] * mu[i]);
  }
}

}  // namespace

const Table kScalarTable{Isa::Scalar, axpy, dot, dot3, component_means, nb_terms};

}  // namespace arealepi::kernels::detail
