#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <vector>

#include "kpbench/error.hpp"

namespace kpbench {

// Dense row-major N-d array. Activations are (B,C,H,W), conv weights
// (Cout,Cin,kH,kW), dense weights (N,M). float at runtime; the double
// instantiation exists for gradient-check tests only.
template <typename T>
struct BasicTensor {
    std::vector<std::size_t> shape;
    std::vector<T> data;

    BasicTensor() = default;

    explicit BasicTensor(std::vector<std::size_t> s) : shape(std::move(s)) {
        data.assign(count(shape), T(0));
    }

    BasicTensor(std::vector<std::size_t> s, std::vector<T> d)
        : shape(std::move(s)), data(std::move(d)) {
        if (data.size() != count(shape))
            throw Error("tensor: data length " + std::to_string(data.size()) +
                        " does not match shape product " + std::to_string(count(shape)));
    }

    static std::size_t count(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (std::size_t e : s) {
            if (e == 0) throw Error("tensor: zero extent in shape");
            n *= e;
        }
        return n;
    }

    std::size_t size() const { return data.size(); }
    std::size_t dim(std::size_t i) const { return shape.at(i); }
    std::size_t rank() const { return shape.size(); }

    T* ptr() { return data.data(); }
    const T* ptr() const { return data.data(); }

    // 2-d and 4-d accessors for the shapes the kernels use.
    T& at(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
    T at(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }

    T& at(std::size_t b, std::size_t c, std::size_t h, std::size_t w) {
        return data[((b * shape[1] + c) * shape[2] + h) * shape[3] + w];
    }
    T at(std::size_t b, std::size_t c, std::size_t h, std::size_t w) const {
        return data[((b * shape[1] + c) * shape[2] + h) * shape[3] + w];
    }

    bool same_shape(const BasicTensor& o) const { return shape == o.shape; }

    std::string shape_str() const {
        std::ostringstream os;
        os << '(';
        for (std::size_t i = 0; i < shape.size(); ++i)
            os << shape[i] << (i + 1 < shape.size() ? "," : "");
        os << ')';
        return os.str();
    }

    template <typename U>
    BasicTensor<U> cast() const {
        BasicTensor<U> out(shape);
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

}  // namespace kpbench
