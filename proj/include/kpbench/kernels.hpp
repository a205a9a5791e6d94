#pragma once

#include <cstddef>

// Inner-loop numeric kernels. Scalar reference implementations are the
// semantic ground truth; float entry points dispatch to AVX2 variants when
// the CPU has them. The double path always runs the scalar reference and is
// what the finite-difference gradient checks exercise.

namespace kpbench::kernels {

enum class Isa { scalar, avx2 };

// Resolved on first use: KPBENCH_SIMD=scalar|avx2 overrides autodetection.
Isa active_isa();
void force_isa(Isa isa);
const char* isa_name(Isa isa);

namespace scalar {

// c[m,n] = a[m,k] * b[k,n], row-major, c overwritten
template <typename T>
void matmul_nn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            T acc = 0;
            for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
            c[i * n + j] = acc;
        }
    }
}

template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
    T acc = 0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

// y += alpha * x
template <typename T>
void axpy(T alpha, const T* x, T* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
void add(const T* a, const T* b, T* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = a[i] + b[i];
}

template <typename T>
void scale(T alpha, const T* x, T* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = alpha * x[i];
}

template <typename T>
void relu(const T* x, T* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}

template <typename T>
void relu6(const T* x, T* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        T v = x[i] > T(0) ? x[i] : T(0);
        y[i] = v < T(6) ? v : T(6);
    }
}

template <typename T>
T sum(const T* x, std::size_t n) {
    T acc = 0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

}  // namespace scalar

// Dispatched float entry points (overloads win over the templates below).
void matmul_nn(const float* a, const float* b, float* c, std::size_t m, std::size_t k,
               std::size_t n);
float dot(const float* a, const float* b, std::size_t n);
void axpy(float alpha, const float* x, float* y, std::size_t n);
void add(const float* a, const float* b, float* y, std::size_t n);
void scale(float alpha, const float* x, float* y, std::size_t n);
void relu(const float* x, float* y, std::size_t n);
void relu6(const float* x, float* y, std::size_t n);
float sum(const float* x, std::size_t n);

// Non-float element types go straight to the scalar reference.
template <typename T>
void matmul_nn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
    scalar::matmul_nn(a, b, c, m, k, n);
}
template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
    return scalar::dot(a, b, n);
}
template <typename T>
void axpy(T alpha, const T* x, T* y, std::size_t n) {
    scalar::axpy(alpha, x, y, n);
}
template <typename T>
void add(const T* a, const T* b, T* y, std::size_t n) {
    scalar::add(a, b, y, n);
}
template <typename T>
void scale(T alpha, const T* x, T* y, std::size_t n) {
    scalar::scale(alpha, x, y, n);
}
template <typename T>
void relu(const T* x, T* y, std::size_t n) {
    scalar::relu(x, y, n);
}
template <typename T>
void relu6(const T* x, T* y, std::size_t n) {
    scalar::relu6(x, y, n);
}
template <typename T>
T sum(const T* x, std::size_t n) {
    return scalar::sum(x, n);
}

}  // namespace kpbench::kernels
