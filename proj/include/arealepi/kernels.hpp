#pragma once

#include <cstddef>
#include <vector>

namespace arealepi::kernels {

// Arithmetic inner loops of the likelihood, gradient and simulation code.
//
// Every variant performs the same IEEE operations in the same order: no fused
// multiply-add, and reductions accumulate into four interleaved lanes that
// are combined as (l0 + l2) + (l1 + l3) before the scalar tail is added.
// Variants are therefore bit-identical, and results do not depend on which
// one the dispatcher picked.

enum class Isa { Scalar, Avx2, Neon };

struct Table {
  Isa isa;
  /// y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  /// sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  /// sum_i (w[i] * x[i]) * y[i]
  double (*dot3)(const double* w, const double* x, const double* y, std::size_t n);
  /// within = lambda * ylag, between = phi * slag,
  /// total = (within + between) + endemic
  void (*component_means)(double lambda, const double* ylag, double phi, const double* slag, const double* endemic,
                          double* within, double* between, double* total, std::size_t n);
  /// Negative-binomial derivative terms with respect to the mean, with
  /// d = 1 + psi * mu:
  ///   score = (y - mu) / (mu * d)
  ///   info  = 1 / (mu * d)                       (expected information)
  ///   curv  = psi * (1 + psi * y) / (d * d) - y / (mu * mu)   (observed)
  void (*nb_terms)(const double* y, const double* mu, double psi, double* score, double* info, double* curv,
                   std::size_t n);
};

const char* name(Isa isa);
bool supported(Isa isa);
std::vector<Isa> available();

/// Table for a specific instruction set; throws std::invalid_argument when
/// the CPU or build does not support it.
const Table& table(Isa isa);

/// The table used by the library. Chosen on first use: the best supported
/// variant, unless AREALEPI_KERNELS=scalar|avx2|neon overrides it.
const Table& active();
void select(Isa isa);

namespace detail {
extern const Table kScalarTable;
#if defined(__x86_64__) || defined(_M_X64)
extern const Table kAvx2Table;
#endif
#if defined(__aarch64__) || defined(__ARM_NEON)
extern const Table kNeonTable;
#endif
}  // namespace detail

}  // namespace arealepi::kernels
