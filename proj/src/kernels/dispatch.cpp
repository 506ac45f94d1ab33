#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "arealepi/kernels.hpp"

namespace arealepi::kernels {
namespace {

Isa best_supported() {
  if (supported(Isa::Avx2)) return Isa::Avx2;
  if (supported(Isa::Neon)) return Isa::Neon;
  return Isa::Scalar;
}

Isa initial_choice() {
  if (const char* env = std::getenv("AREALEPI_KERNELS")) {
    const std::string v = env;
    for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
      if (v == name(isa) && supported(isa)) return isa;
    }
  }
  return best_supported();
}

std::atomic<const Table*>& current() {
  static std::atomic<const Table*> ptr{&table(initial_choice())};
  return ptr;
}

}  // namespace

const char* name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

bool supported(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(__aarch64__) || defined(__ARM_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

std::vector<Isa> available() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
    if (supported(isa)) out.push_back(isa);
  }
  return out;
}

const Table& table(Isa isa) {
  if (!supported(isa)) throw std::invalid_argument(std::string("kernel variant not supported here: ") + name(isa));
  switch (isa) {
    case Isa::Scalar: return detail::kScalarTable;
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::Avx2: return detail::kAvx2Table;
#endif
#if defined(__aarch64__) || defined(__ARM_NEON)
    case Isa::Neon: return detail::kNeonTable;
#endif
    default: break;
  }
  throw std::invalid_argument("kernel variant not built");
}

const Table& active() { return *current().load(std::memory_order_acquire); }

void select(Isa isa) { current().store(&table(isa), std::memory_order_release); }

}  // namespace arealepi::kernels
