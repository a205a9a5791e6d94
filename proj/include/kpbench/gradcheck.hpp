#pragma once

#include <functional>

#include "kpbench/tensor.hpp"

namespace kpbench::nn {

// Central-difference gradient of a scalar function, one element at a time.
// Deterministic: identical inputs give bitwise-identical output.
template <typename T>
BasicTensor<T> finite_difference_grad(const std::function<T(const BasicTensor<T>&)>& f,
                                      const BasicTensor<T>& x, T h) {
    if (h <= T(0)) throw Error("finite_difference_grad: h must be > 0");
    BasicTensor<T> g(x.shape);
    BasicTensor<T> probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const T orig = probe.data[i];
        probe.data[i] = orig + h;
        const T fp = f(probe);
        probe.data[i] = orig - h;
        const T fm = f(probe);
        probe.data[i] = orig;
        g.data[i] = (fp - fm) / (T(2) * h);
    }
    return g;
}

}  // namespace kpbench::nn
