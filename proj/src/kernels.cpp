#include "kpbench/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace kpbench::kernels {

#if defined(__x86_64__) || defined(_M_X64)
#define KPBENCH_X86 1
#else
#define KPBENCH_X86 0
#endif

namespace avx2 {
// Defined in kernels_avx2.cpp, compiled with -mavx2 -mfma.
void matmul_nn(const float* a, const float* b, float* c, std::size_t m, std::size_t k,
               std::size_t n);
float dot(const float* a, const float* b, std::size_t n);
void axpy(float alpha, const float* x, float* y, std::size_t n);
void add(const float* a, const float* b, float* y, std::size_t n);
void scale(float alpha, const float* x, float* y, std::size_t n);
void relu(const float* x, float* y, std::size_t n);
void relu6(const float* x, float* y, std::size_t n);
float sum(const float* x, std::size_t n);
}  // namespace avx2

namespace {

Isa detect() {
    if (const char* env = std::getenv("KPBENCH_SIMD")) {
        if (std::strcmp(env, "scalar") == 0) return Isa::scalar;
        if (std::strcmp(env, "avx2") == 0) return Isa::avx2;
    }
#if KPBENCH_X86
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return Isa::avx2;
#endif
    return Isa::scalar;
}

Isa g_isa = detect();

}  // namespace

Isa active_isa() { return g_isa; }
void force_isa(Isa isa) { g_isa = isa; }
const char* isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

#if KPBENCH_X86
#define KPBENCH_DISPATCH(fn, ...) \
    return g_isa == Isa::avx2 ? avx2::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__)
#else
#define KPBENCH_DISPATCH(fn, ...) return scalar::fn(__VA_ARGS__)
#endif

void matmul_nn(const float* a, const float* b, float* c, std::size_t m, std::size_t k,
               std::size_t n) {
    KPBENCH_DISPATCH(matmul_nn, a, b, c, m, k, n);
}
float dot(const float* a, const float* b, std::size_t n) { KPBENCH_DISPATCH(dot, a, b, n); }
void axpy(float alpha, const float* x, float* y, std::size_t n) {
    KPBENCH_DISPATCH(axpy, alpha, x, y, n);
}
void add(const float* a, const float* b, float* y, std::size_t n) {
    KPBENCH_DISPATCH(add, a, b, y, n);
}
void scale(float alpha, const float* x, float* y, std::size_t n) {
    KPBENCH_DISPATCH(scale, alpha, x, y, n);
}
void relu(const float* x, float* y, std::size_t n) { KPBENCH_DISPATCH(relu, x, y, n); }
void relu6(const float* x, float* y, std::size_t n) { KPBENCH_DISPATCH(relu6, x, y, n); }
float sum(const float* x, std::size_t n) { KPBENCH_DISPATCH(sum, x, n); }

}  // namespace kpbench::kernels
