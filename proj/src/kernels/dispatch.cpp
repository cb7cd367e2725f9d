#include "sdot/kernels.hpp"

#include <atomic>

namespace sdot::kernels {
namespace {

// -1: automatic, otherwise static_cast<int>(Isa).
std::atomic<int> g_forced{-1};

bool cpu_has_avx2() {
#if (defined(__x86_64__) || defined(_M_X64)) && (defined(__GNUC__) || defined(__clang__))
  static const bool has = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return has;
#else
  return false;
#endif
}

}  // namespace

const char* isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
  }
  return "?";
}

bool isa_available(Isa isa) { return isa == Isa::Scalar || cpu_has_avx2(); }

Isa active_isa() {
  const int forced = g_forced.load(std::memory_order_relaxed);
  if (forced >= 0) return static_cast<Isa>(forced);
  return cpu_has_avx2() ? Isa::Avx2 : Isa::Scalar;
}

void force_isa(std::optional<Isa> isa) {
  if (isa && !isa_available(*isa)) isa = Isa::Scalar;
  g_forced.store(isa ? static_cast<int>(*isa) : -1, std::memory_order_relaxed);
}

AreaSums integrate_triangles(const TriangleBatch& batch, Isa isa) {
#if defined(__x86_64__) || defined(_M_X64)
  if (isa == Isa::Avx2 && cpu_has_avx2()) return detail::integrate_triangles_avx2(batch);
#endif
  (void)isa;
  return detail::integrate_triangles_scalar(batch);
}

LineSums integrate_segments(const SegmentBatch& batch, Isa isa) {
#if defined(__x86_64__) || defined(_M_X64)
  if (isa == Isa::Avx2 && cpu_has_avx2()) return detail::integrate_segments_avx2(batch);
#endif
  (void)isa;
  return detail::integrate_segments_scalar(batch);
}

}  // namespace sdot::kernels
