#include "normlab/simd/kernels.hpp"

#include "normlab/core/errors.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace normlab::simd {

#if NORMLAB_HAVE_AVX2
const KernelTable &avx2_table();
#endif

namespace {

bool cpu_has_avx2() {
#if NORMLAB_HAVE_AVX2 && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable *select_default() {
    const char *env = std::getenv("NORMLAB_SIMD");
    const std::string want = env ? env : "";
    if (want == "scalar") return &scalar_kernels();
    if (const KernelTable *t = avx2_kernels()) return t;
    return &scalar_kernels();
}

std::atomic<const KernelTable *> &active_slot() {
    static std::atomic<const KernelTable *> slot{select_default()};
    return slot;
}

} // namespace

std::string_view isa_name(Isa isa) {
    switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    }
    return "unknown";
}

const KernelTable *avx2_kernels() {
#if NORMLAB_HAVE_AVX2
    static const bool ok = cpu_has_avx2();
    return ok ? &avx2_table() : nullptr;
#else
    return nullptr;
#endif
}

bool isa_available(Isa isa) {
    return isa == Isa::Scalar || avx2_kernels() != nullptr;
}

const KernelTable &active() { return *active_slot().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
    if (isa == Isa::Scalar) {
        active_slot().store(&scalar_kernels());
        return;
    }
    const KernelTable *t = avx2_kernels();
    if (!t) throw ConfigError("AVX2/FMA kernels are not available on this machine");
    active_slot().store(t);
}

} // namespace normlab::simd
