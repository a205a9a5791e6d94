#pragma once

#include <cmath>
#include <type_traits>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "kpbench/error.hpp"
#include "kpbench/kernels.hpp"
#include "kpbench/tensor.hpp"

// Forward and backward passes for every layer kind. All ops are pure:
// inputs are const, results are returned. Templated on the element type so
// the gradient-check suite can run the identical code in double precision.

namespace kpbench::nn {

enum class Padding { valid, same };

struct ConvDims {
    std::size_t out_h = 0, out_w = 0;
    std::size_t pad_top = 0, pad_left = 0;
};

// "same" keeps out = ceil(in/stride), zero padding split with the extra
// pixel on the bottom/right. "valid" pads nothing.
inline ConvDims conv_out_dims(std::size_t h, std::size_t w, std::size_t kh, std::size_t kw,
                              std::size_t stride, Padding pad) {
    if (stride < 1) throw Error("conv: stride must be >= 1");
    ConvDims d;
    if (pad == Padding::valid) {
        if (h < kh) throw Error("conv: input height " + std::to_string(h) +
                                " smaller than kernel " + std::to_string(kh));
        if (w < kw) throw Error("conv: input width " + std::to_string(w) +
                                " smaller than kernel " + std::to_string(kw));
        d.out_h = (h - kh) / stride + 1;
        d.out_w = (w - kw) / stride + 1;
    } else {
        d.out_h = (h + stride - 1) / stride;
        d.out_w = (w + stride - 1) / stride;
        std::size_t pad_h = d.out_h >= 1 ? std::max<std::size_t>((d.out_h - 1) * stride + kh, h) - h : 0;
        std::size_t pad_w = d.out_w >= 1 ? std::max<std::size_t>((d.out_w - 1) * stride + kw, w) - w : 0;
        d.pad_top = pad_h / 2;
        d.pad_left = pad_w / 2;
    }
    return d;
}

// Unfolds one sample into a (Cin*kh*kw) x (out_h*out_w) patch matrix.
template <typename T>
void im2col(const BasicTensor<T>& in, std::size_t b, std::size_t kh, std::size_t kw,
            std::size_t stride, const ConvDims& d, T* cols) {
    const std::size_t c_in = in.dim(1), h = in.dim(2), w = in.dim(3);
    const std::size_t patches = d.out_h * d.out_w;
    std::size_t row = 0;
    for (std::size_t c = 0; c < c_in; ++c) {
        for (std::size_t ky = 0; ky < kh; ++ky) {
            for (std::size_t kx = 0; kx < kw; ++kx, ++row) {
                T* dst = cols + row * patches;
                for (std::size_t oy = 0; oy < d.out_h; ++oy) {
                    const std::ptrdiff_t iy =
                        std::ptrdiff_t(oy * stride + ky) - std::ptrdiff_t(d.pad_top);
                    for (std::size_t ox = 0; ox < d.out_w; ++ox) {
                        const std::ptrdiff_t ix =
                            std::ptrdiff_t(ox * stride + kx) - std::ptrdiff_t(d.pad_left);
                        dst[oy * d.out_w + ox] =
                            (iy >= 0 && iy < std::ptrdiff_t(h) && ix >= 0 && ix < std::ptrdiff_t(w))
                                ? in.at(b, c, std::size_t(iy), std::size_t(ix))
                                : T(0);
                    }
                }
            }
        }
    }
}

template <typename T>
void col2im_acc(const T* cols, std::size_t b, std::size_t kh, std::size_t kw, std::size_t stride,
                const ConvDims& d, BasicTensor<T>& grad_in) {
    const std::size_t c_in = grad_in.dim(1), h = grad_in.dim(2), w = grad_in.dim(3);
    const std::size_t patches = d.out_h * d.out_w;
    std::size_t row = 0;
    for (std::size_t c = 0; c < c_in; ++c) {
        for (std::size_t ky = 0; ky < kh; ++ky) {
            for (std::size_t kx = 0; kx < kw; ++kx, ++row) {
                const T* src = cols + row * patches;
                for (std::size_t oy = 0; oy < d.out_h; ++oy) {
                    const std::ptrdiff_t iy =
                        std::ptrdiff_t(oy * stride + ky) - std::ptrdiff_t(d.pad_top);
                    if (iy < 0 || iy >= std::ptrdiff_t(h)) continue;
                    for (std::size_t ox = 0; ox < d.out_w; ++ox) {
                        const std::ptrdiff_t ix =
                            std::ptrdiff_t(ox * stride + kx) - std::ptrdiff_t(d.pad_left);
                        if (ix < 0 || ix >= std::ptrdiff_t(w)) continue;
                        grad_in.at(b, c, std::size_t(iy), std::size_t(ix)) += src[oy * d.out_w + ox];
                    }
                }
            }
        }
    }
}

// Cross-correlation (no kernel flip). weights (Cout,Cin,kH,kW), optional
// per-output-channel bias.
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& in, const BasicTensor<T>& weights,
                      std::type_identity_t<const BasicTensor<T>*> bias, std::size_t stride,
                      Padding pad) {
    if (in.rank() != 4) throw Error("conv2d: input must be rank 4, got " + in.shape_str());
    if (weights.rank() != 4) throw Error("conv2d: weights must be rank 4, got " + weights.shape_str());
    const std::size_t batch = in.dim(0), c_in = in.dim(1);
    const std::size_t c_out = weights.dim(0), kh = weights.dim(2), kw = weights.dim(3);
    if (weights.dim(1) != c_in)
        throw Error("conv2d: channel axis mismatch, input has " + std::to_string(c_in) +
                    " channels but weights expect " + std::to_string(weights.dim(1)));
    if (bias && bias->size() != c_out)
        throw Error("conv2d: bias length " + std::to_string(bias->size()) +
                    " != out channels " + std::to_string(c_out));
    const ConvDims d = conv_out_dims(in.dim(2), in.dim(3), kh, kw, stride, pad);
    const std::size_t patches = d.out_h * d.out_w;
    const std::size_t k = c_in * kh * kw;

    BasicTensor<T> out({batch, c_out, d.out_h, d.out_w});
    // 1x1 stride-1 unpadded convolutions are plain channel mixes; skip im2col.
    const bool pointwise = (kh == 1 && kw == 1 && stride == 1);
    std::vector<T> cols;
    if (!pointwise) cols.resize(k * patches);
    for (std::size_t b = 0; b < batch; ++b) {
        const T* col_ptr;
        if (pointwise) {
            col_ptr = in.ptr() + b * c_in * patches;
        } else {
            im2col(in, b, kh, kw, stride, d, cols.data());
            col_ptr = cols.data();
        }
        T* out_b = out.ptr() + b * c_out * patches;
        kernels::matmul_nn(weights.ptr(), col_ptr, out_b, c_out, k, patches);
        if (bias)
            for (std::size_t c = 0; c < c_out; ++c) {
                const T bv = bias->data[c];
                T* row = out_b + c * patches;
                for (std::size_t p = 0; p < patches; ++p) row[p] += bv;
            }
    }
    return out;
}

template <typename T>
void conv2d_backward(const BasicTensor<T>& in, const BasicTensor<T>& weights, std::size_t stride,
                     Padding pad, const BasicTensor<T>& grad_out, BasicTensor<T>& grad_in,
                     BasicTensor<T>& grad_w, std::type_identity_t<BasicTensor<T>*> grad_bias) {
    const std::size_t batch = in.dim(0), c_in = in.dim(1);
    const std::size_t c_out = weights.dim(0), kh = weights.dim(2), kw = weights.dim(3);
    const ConvDims d = conv_out_dims(in.dim(2), in.dim(3), kh, kw, stride, pad);
    const std::size_t patches = d.out_h * d.out_w;
    const std::size_t k = c_in * kh * kw;
    grad_in = BasicTensor<T>(in.shape);
    grad_w = BasicTensor<T>(weights.shape);
    if (grad_bias) *grad_bias = BasicTensor<T>({c_out});

    const bool pointwise = (kh == 1 && kw == 1 && stride == 1);
    std::vector<T> cols(pointwise ? 0 : k * patches);
    std::vector<T> dcols(pointwise ? 0 : k * patches);
    for (std::size_t b = 0; b < batch; ++b) {
        const T* col_ptr;
        if (pointwise) {
            col_ptr = in.ptr() + b * c_in * patches;
        } else {
            im2col(in, b, kh, kw, stride, d, cols.data());
            col_ptr = cols.data();
        }
        const T* dy = grad_out.ptr() + b * c_out * patches;
        for (std::size_t c = 0; c < c_out; ++c) {
            const T* dy_row = dy + c * patches;
            T* dw_row = grad_w.ptr() + c * k;
            for (std::size_t r = 0; r < k; ++r)
                dw_row[r] += kernels::dot(dy_row, col_ptr + r * patches, patches);
            if (grad_bias) grad_bias->data[c] += kernels::sum(dy_row, patches);
        }
        T* dcol_ptr = pointwise ? grad_in.ptr() + b * c_in * patches : dcols.data();
        if (!pointwise) std::fill(dcols.begin(), dcols.end(), T(0));
        for (std::size_t c = 0; c < c_out; ++c) {
            const T* dy_row = dy + c * patches;
            const T* w_row = weights.ptr() + c * k;
            for (std::size_t r = 0; r < k; ++r)
                if (w_row[r] != T(0)) kernels::axpy(w_row[r], dy_row, dcol_ptr + r * patches, patches);
        }
        if (!pointwise) col2im_acc(dcols.data(), b, kh, kw, stride, d, grad_in);
    }
}

// Each channel convolved with its own kernel only. weights (C,1,kH,kW).
template <typename T>
BasicTensor<T> depthwise_conv2d(const BasicTensor<T>& in, const BasicTensor<T>& weights,
                                std::size_t stride, Padding pad) {
    const std::size_t batch = in.dim(0), c = in.dim(1), h = in.dim(2), w = in.dim(3);
    const std::size_t kh = weights.dim(2), kw = weights.dim(3);
    if (weights.dim(0) != c)
        throw Error("depthwise_conv2d: weight channels " + std::to_string(weights.dim(0)) +
                    " != input channels " + std::to_string(c));
    const ConvDims d = conv_out_dims(h, w, kh, kw, stride, pad);
    BasicTensor<T> out({batch, c, d.out_h, d.out_w});
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t ch = 0; ch < c; ++ch) {
            const T* ker = weights.ptr() + ch * kh * kw;
            for (std::size_t oy = 0; oy < d.out_h; ++oy)
                for (std::size_t ox = 0; ox < d.out_w; ++ox) {
                    T acc = 0;
                    for (std::size_t ky = 0; ky < kh; ++ky) {
                        const std::ptrdiff_t iy =
                            std::ptrdiff_t(oy * stride + ky) - std::ptrdiff_t(d.pad_top);
                        if (iy < 0 || iy >= std::ptrdiff_t(h)) continue;
                        for (std::size_t kx = 0; kx < kw; ++kx) {
                            const std::ptrdiff_t ix =
                                std::ptrdiff_t(ox * stride + kx) - std::ptrdiff_t(d.pad_left);
                            if (ix < 0 || ix >= std::ptrdiff_t(w)) continue;
                            acc += ker[ky * kw + kx] * in.at(b, ch, std::size_t(iy), std::size_t(ix));
                        }
                    }
                    out.at(b, ch, oy, ox) = acc;
                }
        }
    return out;
}

template <typename T>
void depthwise_conv2d_backward(const BasicTensor<T>& in, const BasicTensor<T>& weights,
                               std::size_t stride, Padding pad, const BasicTensor<T>& grad_out,
                               BasicTensor<T>& grad_in, BasicTensor<T>& grad_w) {
    const std::size_t batch = in.dim(0), c = in.dim(1), h = in.dim(2), w = in.dim(3);
    const std::size_t kh = weights.dim(2), kw = weights.dim(3);
    const ConvDims d = conv_out_dims(h, w, kh, kw, stride, pad);
    grad_in = BasicTensor<T>(in.shape);
    grad_w = BasicTensor<T>(weights.shape);
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t ch = 0; ch < c; ++ch) {
            const T* ker = weights.ptr() + ch * kh * kw;
            T* dker = grad_w.ptr() + ch * kh * kw;
            for (std::size_t oy = 0; oy < d.out_h; ++oy)
                for (std::size_t ox = 0; ox < d.out_w; ++ox) {
                    const T g = grad_out.at(b, ch, oy, ox);
                    if (g == T(0)) continue;
                    for (std::size_t ky = 0; ky < kh; ++ky) {
                        const std::ptrdiff_t iy =
                            std::ptrdiff_t(oy * stride + ky) - std::ptrdiff_t(d.pad_top);
                        if (iy < 0 || iy >= std::ptrdiff_t(h)) continue;
                        for (std::size_t kx = 0; kx < kw; ++kx) {
                            const std::ptrdiff_t ix =
                                std::ptrdiff_t(ox * stride + kx) - std::ptrdiff_t(d.pad_left);
                            if (ix < 0 || ix >= std::ptrdiff_t(w)) continue;
                            dker[ky * kw + kx] += g * in.at(b, ch, std::size_t(iy), std::size_t(ix));
                            grad_in.at(b, ch, std::size_t(iy), std::size_t(ix)) +=
                                g * ker[ky * kw + kx];
                        }
                    }
                }
        }
}

// out[B,M] = in[B,N] * weights[N,M] + bias[M]
template <typename T>
BasicTensor<T> dense(const BasicTensor<T>& in, const BasicTensor<T>& weights,
                     std::type_identity_t<const BasicTensor<T>*> bias) {
    if (in.rank() != 2) throw Error("dense: input must be rank 2, got " + in.shape_str());
    const std::size_t batch = in.dim(0), n = in.dim(1), m = weights.dim(1);
    if (weights.dim(0) != n)
        throw Error("dense: inner dimension mismatch, input " + std::to_string(n) +
                    " vs weights " + std::to_string(weights.dim(0)));
    if (bias && bias->size() != m)
        throw Error("dense: bias length " + std::to_string(bias->size()) + " != " +
                    std::to_string(m));
    BasicTensor<T> out({batch, m});
    kernels::matmul_nn(in.ptr(), weights.ptr(), out.ptr(), batch, n, m);
    if (bias)
        for (std::size_t b = 0; b < batch; ++b)
            kernels::axpy(T(1), bias->ptr(), out.ptr() + b * m, m);
    return out;
}

template <typename T>
void dense_backward(const BasicTensor<T>& in, const BasicTensor<T>& weights,
                    const BasicTensor<T>& grad_out, BasicTensor<T>& grad_in,
                    BasicTensor<T>& grad_w, std::type_identity_t<BasicTensor<T>*> grad_bias) {
    const std::size_t batch = in.dim(0), n = in.dim(1), m = weights.dim(1);
    grad_in = BasicTensor<T>({batch, n});
    grad_w = BasicTensor<T>(weights.shape);
    if (grad_bias) *grad_bias = BasicTensor<T>({m});
    for (std::size_t b = 0; b < batch; ++b) {
        const T* dy = grad_out.ptr() + b * m;
        for (std::size_t i = 0; i < n; ++i) {
            grad_in.at(b, i) = kernels::dot(dy, weights.ptr() + i * m, m);
            if (in.at(b, i) != T(0)) kernels::axpy(in.at(b, i), dy, grad_w.ptr() + i * m, m);
        }
        if (grad_bias) kernels::axpy(T(1), dy, grad_bias->ptr(), m);
    }
}

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& in) {
    BasicTensor<T> out(in.shape);
    kernels::relu(in.ptr(), out.ptr(), in.size());
    return out;
}

template <typename T>
BasicTensor<T> relu6(const BasicTensor<T>& in) {
    BasicTensor<T> out(in.shape);
    kernels::relu6(in.ptr(), out.ptr(), in.size());
    return out;
}

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& in, const BasicTensor<T>& grad_out) {
    BasicTensor<T> g(in.shape);
    for (std::size_t i = 0; i < in.size(); ++i)
        g.data[i] = in.data[i] > T(0) ? grad_out.data[i] : T(0);
    return g;
}

template <typename T>
BasicTensor<T> relu6_backward(const BasicTensor<T>& in, const BasicTensor<T>& grad_out) {
    BasicTensor<T> g(in.shape);
    for (std::size_t i = 0; i < in.size(); ++i)
        g.data[i] = (in.data[i] > T(0) && in.data[i] < T(6)) ? grad_out.data[i] : T(0);
    return g;
}

// 2x2/2 max pooling; odd trailing rows/columns are dropped. argmax indices
// cached for the backward scatter.
template <typename T>
BasicTensor<T> max_pool2d(const BasicTensor<T>& in, std::vector<std::uint32_t>* argmax = nullptr) {
    const std::size_t batch = in.dim(0), c = in.dim(1), h = in.dim(2), w = in.dim(3);
    const std::size_t oh = h / 2, ow = w / 2;
    if (oh == 0 || ow == 0) throw Error("max_pool2d: input too small " + in.shape_str());
    BasicTensor<T> out({batch, c, oh, ow});
    if (argmax) argmax->assign(out.size(), 0);
    std::size_t idx = 0;
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t oy = 0; oy < oh; ++oy)
                for (std::size_t ox = 0; ox < ow; ++ox, ++idx) {
                    T best = in.at(b, ch, oy * 2, ox * 2);
                    std::size_t best_y = oy * 2, best_x = ox * 2;
                    for (std::size_t dy = 0; dy < 2; ++dy)
                        for (std::size_t dx = 0; dx < 2; ++dx) {
                            const T v = in.at(b, ch, oy * 2 + dy, ox * 2 + dx);
                            if (v > best) {
                                best = v;
                                best_y = oy * 2 + dy;
                                best_x = ox * 2 + dx;
                            }
                        }
                    out.data[idx] = best;
                    if (argmax)
                        (*argmax)[idx] =
                            std::uint32_t(((b * c + ch) * h + best_y) * w + best_x);
                }
    return out;
}

template <typename T>
BasicTensor<T> max_pool2d_backward(const BasicTensor<T>& in, const std::vector<std::uint32_t>& argmax,
                                   const BasicTensor<T>& grad_out) {
    BasicTensor<T> g(in.shape);
    for (std::size_t i = 0; i < grad_out.size(); ++i) g.data[argmax[i]] += grad_out.data[i];
    return g;
}

// Per-channel spatial mean: (B,C,H,W) -> (B,C)
template <typename T>
BasicTensor<T> global_average_pool(const BasicTensor<T>& in) {
    const std::size_t batch = in.dim(0), c = in.dim(1), hw = in.dim(2) * in.dim(3);
    BasicTensor<T> out({batch, c});
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t ch = 0; ch < c; ++ch)
            out.at(b, ch) = kernels::sum(in.ptr() + (b * c + ch) * hw, hw) / T(hw);
    return out;
}

template <typename T>
BasicTensor<T> global_average_pool_backward(const std::vector<std::size_t>& in_shape,
                                            const BasicTensor<T>& grad_out) {
    BasicTensor<T> g(in_shape);
    const std::size_t c = in_shape[1], hw = in_shape[2] * in_shape[3];
    for (std::size_t b = 0; b < in_shape[0]; ++b)
        for (std::size_t ch = 0; ch < c; ++ch) {
            const T v = grad_out.at(b, ch) / T(hw);
            T* dst = g.ptr() + (b * c + ch) * hw;
            for (std::size_t i = 0; i < hw; ++i) dst[i] = v;
        }
    return g;
}

template <typename T>
struct BatchNormCache {
    BasicTensor<T> x_hat;           // normalized input
    std::vector<T> mean, inv_std;   // per-channel batch statistics
};

// (B,C,H,W) normalization over the (B,H,W) axes per channel. Train mode
// normalizes with batch statistics and updates the running ones in place;
// infer mode uses the stored running statistics.
template <typename T>
BasicTensor<T> batch_norm(const BasicTensor<T>& in, const BasicTensor<T>& gamma,
                          const BasicTensor<T>& beta, BasicTensor<T>& running_mean,
                          BasicTensor<T>& running_var, bool train, T momentum, T epsilon,
                          BatchNormCache<T>* cache = nullptr) {
    if (epsilon <= T(0)) throw Error("batch_norm: epsilon must be > 0");
    const std::size_t batch = in.dim(0), c = in.dim(1);
    const std::size_t hw = in.rank() == 4 ? in.dim(2) * in.dim(3) : 1;
    if (gamma.size() != c || beta.size() != c || running_mean.size() != c || running_var.size() != c)
        throw Error("batch_norm: per-channel parameter length != channel count " +
                    std::to_string(c));
    const std::size_t n = batch * hw;
    BasicTensor<T> out(in.shape);
    if (cache) {
        cache->x_hat = BasicTensor<T>(in.shape);
        cache->mean.assign(c, T(0));
        cache->inv_std.assign(c, T(0));
    }
    for (std::size_t ch = 0; ch < c; ++ch) {
        T mean, var;
        if (train) {
            T s = 0;
            for (std::size_t b = 0; b < batch; ++b)
                s += kernels::sum(in.ptr() + (b * c + ch) * hw, hw);
            mean = s / T(n);
            T sq = 0;
            for (std::size_t b = 0; b < batch; ++b) {
                const T* x = in.ptr() + (b * c + ch) * hw;
                for (std::size_t i = 0; i < hw; ++i) sq += (x[i] - mean) * (x[i] - mean);
            }
            var = sq / T(n);
            running_mean.data[ch] = momentum * running_mean.data[ch] + (T(1) - momentum) * mean;
            running_var.data[ch] = momentum * running_var.data[ch] + (T(1) - momentum) * var;
        } else {
            mean = running_mean.data[ch];
            var = running_var.data[ch];
        }
        const T inv_std = T(1) / std::sqrt(var + epsilon);
        if (cache) {
            cache->mean[ch] = mean;
            cache->inv_std[ch] = inv_std;
        }
        const T g = gamma.data[ch], bt = beta.data[ch];
        for (std::size_t b = 0; b < batch; ++b) {
            const T* x = in.ptr() + (b * c + ch) * hw;
            T* y = out.ptr() + (b * c + ch) * hw;
            T* xh = cache ? cache->x_hat.ptr() + (b * c + ch) * hw : nullptr;
            for (std::size_t i = 0; i < hw; ++i) {
                const T h = (x[i] - mean) * inv_std;
                if (xh) xh[i] = h;
                y[i] = g * h + bt;
            }
        }
    }
    return out;
}

// Train-mode backward (the only mode that gets gradients).
template <typename T>
void batch_norm_backward(const BasicTensor<T>& gamma, const BatchNormCache<T>& cache,
                         const BasicTensor<T>& grad_out, BasicTensor<T>& grad_in,
                         BasicTensor<T>& grad_gamma, BasicTensor<T>& grad_beta) {
    if (cache.x_hat.size() == 0) throw Error("batch_norm_backward: missing cached forward state");
    const std::size_t batch = grad_out.dim(0), c = grad_out.dim(1);
    const std::size_t hw = grad_out.rank() == 4 ? grad_out.dim(2) * grad_out.dim(3) : 1;
    const std::size_t n = batch * hw;
    grad_in = BasicTensor<T>(grad_out.shape);
    grad_gamma = BasicTensor<T>({c});
    grad_beta = BasicTensor<T>({c});
    for (std::size_t ch = 0; ch < c; ++ch) {
        T sum_dy = 0, sum_dy_xhat = 0;
        for (std::size_t b = 0; b < batch; ++b) {
            const T* dy = grad_out.ptr() + (b * c + ch) * hw;
            const T* xh = cache.x_hat.ptr() + (b * c + ch) * hw;
            for (std::size_t i = 0; i < hw; ++i) {
                sum_dy += dy[i];
                sum_dy_xhat += dy[i] * xh[i];
            }
        }
        grad_gamma.data[ch] = sum_dy_xhat;
        grad_beta.data[ch] = sum_dy;
        const T k = gamma.data[ch] * cache.inv_std[ch];
        const T mean_dy = sum_dy / T(n), mean_dy_xhat = sum_dy_xhat / T(n);
        for (std::size_t b = 0; b < batch; ++b) {
            const T* dy = grad_out.ptr() + (b * c + ch) * hw;
            const T* xh = cache.x_hat.ptr() + (b * c + ch) * hw;
            T* dx = grad_in.ptr() + (b * c + ch) * hw;
            for (std::size_t i = 0; i < hw; ++i)
                dx[i] = k * (dy[i] - mean_dy - xh[i] * mean_dy_xhat);
        }
    }
}

// Inverted dropout: kept units scaled by 1/(1-rate) so inference is identity.
template <typename T>
BasicTensor<T> dropout(const BasicTensor<T>& in, T rate, std::uint64_t seed,
                       std::vector<std::uint8_t>* mask) {
    if (rate < T(0) || rate >= T(1)) throw Error("dropout: rate must be in [0,1)");
    BasicTensor<T> out(in.shape);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const T inv_keep = T(1) / (T(1) - rate);
    if (mask) mask->assign(in.size(), 1);
    for (std::size_t i = 0; i < in.size(); ++i) {
        const bool keep = u(rng) >= double(rate);
        if (mask) (*mask)[i] = keep ? 1 : 0;
        out.data[i] = keep ? in.data[i] * inv_keep : T(0);
    }
    return out;
}

template <typename T>
BasicTensor<T> dropout_backward(const BasicTensor<T>& grad_out, T rate,
                                const std::vector<std::uint8_t>& mask) {
    BasicTensor<T> g(grad_out.shape);
    const T inv_keep = T(1) / (T(1) - rate);
    for (std::size_t i = 0; i < g.size(); ++i)
        g.data[i] = mask[i] ? grad_out.data[i] * inv_keep : T(0);
    return g;
}

}  // namespace kpbench::nn
