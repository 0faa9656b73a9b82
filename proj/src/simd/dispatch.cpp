#include <atomic>
#include <cstdlib>
#include <string_view>

#include "bhsr/simd/kernels.hpp"

namespace bhsr::simd {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

namespace {

const KernelTable* pick_auto() {
    if (const char* env = std::getenv("BHSR_SIMD"); env && std::string_view(env) == "scalar") {
        return &scalar_kernels();
    }
    if (const KernelTable* t = avx2_kernels(); t && cpu_has_avx2()) return t;
    return &scalar_kernels();
}

std::atomic<const KernelTable*>& slot() {
    static std::atomic<const KernelTable*> s{pick_auto()};
    return s;
}

}  // namespace

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

bool select(std::string_view name) {
    const KernelTable* t = nullptr;
    if (name == "scalar") t = &scalar_kernels();
    else if (name == "avx2") t = (avx2_kernels() && cpu_has_avx2()) ? avx2_kernels() : nullptr;
    else if (name == "auto") t = pick_auto();
    if (!t) return false;
    slot().store(t, std::memory_order_release);
    return true;
}

}  // namespace bhsr::simd
