#include "kpbench/model.hpp"

#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "kpbench/error.hpp"
#include "kpbench/kernels.hpp"

namespace kpbench {

namespace {

constexpr char kMagic[4] = {'K', 'P', 'B', 'W'};
constexpr std::uint16_t kFormatVersion = 1;
constexpr float kBnMomentum = 0.99f;
constexpr float kBnEpsilon = 1e-3f;

}  // namespace

const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::conv: return "conv";
        case LayerKind::depthwise_conv: return "depthwise_conv";
        case LayerKind::pointwise_conv: return "pointwise_conv";
        case LayerKind::dense: return "dense";
        case LayerKind::relu: return "relu";
        case LayerKind::relu6: return "relu6";
        case LayerKind::max_pool: return "max_pool";
        case LayerKind::global_avg_pool: return "global_avg_pool";
        case LayerKind::batch_norm: return "batch_norm";
        case LayerKind::add_residual: return "add_residual";
        case LayerKind::flatten: return "flatten";
        case LayerKind::dropout: return "dropout";
    }
    return "?";
}

std::vector<std::vector<std::size_t>> infer_shapes(const ModelSpec& spec) {
    std::vector<std::vector<std::size_t>> shapes;
    shapes.push_back({spec.input_shape[0], spec.input_shape[1], spec.input_shape[2]});
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        const auto& cur = shapes.back();
        auto err = [&](const std::string& msg) {
            throw Error(spec.name + " layer " + std::to_string(i) + " (" +
                        layer_kind_name(l.kind) + "): " + msg);
        };
        std::vector<std::size_t> out = cur;
        switch (l.kind) {
            case LayerKind::conv:
            case LayerKind::pointwise_conv: {
                if (cur.size() != 3) err("needs a spatial input");
                const std::size_t k = l.kind == LayerKind::pointwise_conv ? 1 : l.kernel;
                if (k == 0 || l.filters == 0) err("kernel and filters must be set");
                const auto d = nn::conv_out_dims(cur[1], cur[2], k, k, l.stride, l.padding);
                out = {l.filters, d.out_h, d.out_w};
                break;
            }
            case LayerKind::depthwise_conv: {
                if (cur.size() != 3) err("needs a spatial input");
                if (l.kernel == 0) err("kernel must be set");
                const auto d = nn::conv_out_dims(cur[1], cur[2], l.kernel, l.kernel, l.stride,
                                                 l.padding);
                out = {cur[0], d.out_h, d.out_w};
                break;
            }
            case LayerKind::dense: {
                if (cur.size() != 1) err("needs a flat input, got rank " +
                                         std::to_string(cur.size() + 1));
                if (l.filters == 0) err("filters must be set");
                out = {l.filters};
                break;
            }
            case LayerKind::relu:
            case LayerKind::relu6:
            case LayerKind::batch_norm:
            case LayerKind::dropout:
                break;
            case LayerKind::max_pool:
                if (cur.size() != 3) err("needs a spatial input");
                if (cur[1] < 2 || cur[2] < 2) err("input too small to pool");
                out = {cur[0], cur[1] / 2, cur[2] / 2};
                break;
            case LayerKind::global_avg_pool:
                if (cur.size() != 3) err("needs a spatial input");
                out = {cur[0]};
                break;
            case LayerKind::add_residual:
                if (l.skip_from < 0 || std::size_t(l.skip_from) >= shapes.size())
                    err("skip_from out of range");
                if (shapes[std::size_t(l.skip_from)] != cur)
                    err("residual shape mismatch");
                break;
            case LayerKind::flatten: {
                std::size_t n = 1;
                for (std::size_t e : cur) n *= e;
                out = {n};
                break;
            }
        }
        shapes.push_back(std::move(out));
    }
    return shapes;
}

Model init_model(const ModelSpec& spec, std::uint64_t seed) {
    const auto shapes = infer_shapes(spec);
    Model m;
    m.spec = spec;
    m.params.resize(spec.layers.size());
    std::mt19937_64 rng(seed);
    auto he_fill = [&rng](Tensor& t, std::size_t fan_in) {
        std::normal_distribution<float> dist(0.0f, std::sqrt(2.0f / float(fan_in)));
        for (auto& v : t.data) v = dist(rng);
    };
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        const auto& in_shape = shapes[i];
        LayerParams& p = m.params[i];
        switch (l.kind) {
            case LayerKind::conv:
            case LayerKind::pointwise_conv: {
                const std::size_t k = l.kind == LayerKind::pointwise_conv ? 1 : l.kernel;
                p.weights = Tensor({l.filters, in_shape[0], k, k});
                he_fill(p.weights, in_shape[0] * k * k);
                if (l.bias) p.bias = Tensor({l.filters});
                break;
            }
            case LayerKind::depthwise_conv:
                p.weights = Tensor({in_shape[0], 1, l.kernel, l.kernel});
                he_fill(p.weights, l.kernel * l.kernel);
                break;
            case LayerKind::dense:
                p.weights = Tensor({in_shape[0], l.filters});
                he_fill(p.weights, in_shape[0]);
                if (l.bias) p.bias = Tensor({l.filters});
                break;
            case LayerKind::batch_norm: {
                const std::size_t c = in_shape[0];
                p.bn_gamma = Tensor({c});
                p.bn_beta = Tensor({c});
                p.bn_mean = Tensor({c});
                p.bn_var = Tensor({c});
                for (auto& v : p.bn_gamma.data) v = 1.0f;
                for (auto& v : p.bn_var.data) v = 1.0f;
                break;
            }
            default:
                break;
        }
    }
    return m;
}

ModelSpec baseline_cnn_spec() {
    // Plain conv/relu/pool pyramid, widths doubling to 512.
    ModelSpec s;
    s.name = "baseline";
    s.input_shape = {1, kImageSize, kImageSize};
    const std::size_t widths[] = {32, 64, 128, 256, 512};
    for (std::size_t w : widths) {
        s.layers.push_back({.kind = LayerKind::conv, .filters = w, .kernel = 3});
        s.layers.push_back({.kind = LayerKind::relu});
        s.layers.push_back({.kind = LayerKind::max_pool});
    }
    s.head_begin = s.layers.size();
    s.layers.push_back({.kind = LayerKind::global_avg_pool});
    s.layers.push_back({.kind = LayerKind::dense, .filters = kNumCoords});
    return s;
}

ModelSpec manual_cnn_spec() {
    // Compact stack: narrow filters, aggressive pooling, one extra 3x3 at
    // the 6x6 stage.
    ModelSpec s;
    s.name = "manual";
    s.input_shape = {1, kImageSize, kImageSize};
    const std::size_t widths[] = {16, 32, 64, 128};
    for (std::size_t w : widths) {
        s.layers.push_back({.kind = LayerKind::conv, .filters = w, .kernel = 3});
        s.layers.push_back({.kind = LayerKind::relu});
        s.layers.push_back({.kind = LayerKind::max_pool});
    }
    s.layers.push_back({.kind = LayerKind::conv, .filters = 128, .kernel = 3});
    s.layers.push_back({.kind = LayerKind::relu});
    s.head_begin = s.layers.size();
    s.layers.push_back({.kind = LayerKind::global_avg_pool});
    s.layers.push_back({.kind = LayerKind::dense, .filters = kNumCoords});
    return s;
}

namespace {

// Channel rounding used by the MobileNet family.
std::size_t make_divisible(float v, std::size_t divisor = 8) {
    auto n = std::size_t(v + float(divisor) / 2.0f) / divisor * divisor;
    if (n < divisor) n = divisor;
    if (float(n) < 0.9f * v) n += divisor;
    return n;
}

void bn(ModelSpec& s) { s.layers.push_back({.kind = LayerKind::batch_norm}); }
void act6(ModelSpec& s) { s.layers.push_back({.kind = LayerKind::relu6}); }

}  // namespace

ModelSpec mobilenetv2_spec(float width_multiplier) {
    if (width_multiplier <= 0.0f) throw Error("mobilenetv2: width multiplier must be > 0");
    ModelSpec s;
    s.name = "mobilenetv2";
    s.input_shape = {3, kImageSize, kImageSize};

    auto ch = [&](std::size_t c) { return make_divisible(float(c) * width_multiplier); };

    // Stem.
    s.layers.push_back({.kind = LayerKind::conv, .filters = ch(32), .kernel = 3, .stride = 2,
                        .bias = false});
    bn(s);
    act6(s);
    std::size_t in_ch = ch(32);

    // Inverted residual bottlenecks: (expansion t, channels c, repeats n, stride s).
    struct BlockCfg { std::size_t t, c, n, s; };
    const BlockCfg cfg[] = {{1, 16, 1, 1}, {6, 24, 2, 2}, {6, 32, 3, 2}, {6, 64, 4, 2},
                            {6, 96, 3, 1}, {6, 160, 3, 2}, {6, 320, 1, 1}};
    for (const auto& b : cfg) {
        const std::size_t out_ch = ch(b.c);
        for (std::size_t r = 0; r < b.n; ++r) {
            const std::size_t stride = r == 0 ? b.s : 1;
            const int block_input_slot = int(s.layers.size());  // activation slot index
            if (b.t != 1) {
                s.layers.push_back({.kind = LayerKind::pointwise_conv,
                                    .filters = in_ch * b.t, .bias = false});
                bn(s);
                act6(s);
            }
            s.layers.push_back({.kind = LayerKind::depthwise_conv, .kernel = 3,
                                .stride = stride, .bias = false});
            bn(s);
            act6(s);
            s.layers.push_back({.kind = LayerKind::pointwise_conv, .filters = out_ch,
                                .bias = false});
            bn(s);
            if (stride == 1 && in_ch == out_ch)
                s.layers.push_back({.kind = LayerKind::add_residual,
                                    .skip_from = block_input_slot});
            in_ch = out_ch;
        }
    }

    // Final 1x1 expansion to the feature width.
    const std::size_t last = width_multiplier > 1.0f
                                 ? make_divisible(1280.0f * width_multiplier)
                                 : 1280;
    s.layers.push_back({.kind = LayerKind::pointwise_conv, .filters = last, .bias = false});
    bn(s);
    act6(s);

    s.head_begin = s.layers.size();
    s.layers.push_back({.kind = LayerKind::global_avg_pool});
    s.layers.push_back({.kind = LayerKind::dense, .filters = kNumCoords});
    return s;
}

Model build_baseline_cnn(std::uint64_t seed) { return init_model(baseline_cnn_spec(), seed); }
Model build_manual_cnn(std::uint64_t seed) { return init_model(manual_cnn_spec(), seed); }
Model build_mobilenetv2_regressor(float width_multiplier, std::uint64_t seed) {
    return init_model(mobilenetv2_spec(width_multiplier), seed);
}

ModelSpec named_model_spec(const std::string& name) {
    if (name == "baseline") return baseline_cnn_spec();
    if (name == "manual") return manual_cnn_spec();
    if (name == "mobilenetv2") return mobilenetv2_spec();
    throw Error("unknown model '" + name + "' (expected baseline, manual, or mobilenetv2)");
}

Model build_named_model(const std::string& name, std::uint64_t seed) {
    return init_model(named_model_spec(name), seed);
}

ParamCounts count_parameters(const Model& m, std::size_t layer_begin, std::size_t layer_end) {
    ParamCounts c;
    for (std::size_t i = layer_begin; i < layer_end && i < m.params.size(); ++i) {
        const LayerParams& p = m.params[i];
        c.trainable += p.weights.size() + p.bias.size() + p.bn_gamma.size() + p.bn_beta.size();
        c.non_trainable += p.bn_mean.size() + p.bn_var.size();
    }
    c.total = c.trainable + c.non_trainable;
    return c;
}

ParamCounts count_parameters(const Model& m) {
    return count_parameters(m, 0, m.params.size());
}

namespace {

Tensor adapt_input(const ModelSpec& spec, const Tensor& batch) {
    if (batch.rank() != 4)
        throw Error(spec.name + ": input batch must be rank 4, got " + batch.shape_str());
    if (batch.dim(2) != spec.input_shape[1] || batch.dim(3) != spec.input_shape[2])
        throw Error(spec.name + ": input spatial size " + batch.shape_str() + " does not match");
    if (batch.dim(1) == spec.input_shape[0]) return batch;
    if (batch.dim(1) == 1 && spec.input_shape[0] == 3) {
        // Grayscale replicated across RGB.
        const std::size_t b = batch.dim(0), hw = batch.dim(2) * batch.dim(3);
        Tensor out({b, 3, batch.dim(2), batch.dim(3)});
        for (std::size_t i = 0; i < b; ++i)
            for (std::size_t c = 0; c < 3; ++c)
                std::memcpy(out.ptr() + (i * 3 + c) * hw, batch.ptr() + i * hw,
                            hw * sizeof(float));
        return out;
    }
    throw Error(spec.name + ": input has " + std::to_string(batch.dim(1)) +
                " channels, model expects " + std::to_string(spec.input_shape[0]));
}

}  // namespace

Tensor forward(Model& m, const Tensor& batch, RunMode mode, ForwardState* state,
               std::uint64_t dropout_seed) {
    const std::size_t n_layers = m.spec.layers.size();
    ForwardState local;
    ForwardState& st = state ? *state : local;
    st.acts.assign(n_layers + 1, Tensor{});
    st.pool_argmax.assign(n_layers, {});
    st.bn.assign(n_layers, {});
    st.dropout_mask.assign(n_layers, {});
    const bool train = mode == RunMode::train;

    st.acts[0] = adapt_input(m.spec, batch);
    const std::size_t bsz = st.acts[0].dim(0);
    for (std::size_t i = 0; i < n_layers; ++i) {
        const LayerSpec& l = m.spec.layers[i];
        LayerParams& p = m.params[i];
        const Tensor& x = st.acts[i];
        Tensor y;
        switch (l.kind) {
            case LayerKind::conv:
            case LayerKind::pointwise_conv:
                y = nn::conv2d(x, p.weights, l.bias ? &p.bias : nullptr,
                               l.kind == LayerKind::pointwise_conv ? 1 : l.stride, l.padding);
                break;
            case LayerKind::depthwise_conv:
                y = nn::depthwise_conv2d(x, p.weights, l.stride, l.padding);
                break;
            case LayerKind::dense:
                y = nn::dense(x, p.weights, l.bias ? &p.bias : nullptr);
                break;
            case LayerKind::relu:
                y = nn::relu(x);
                break;
            case LayerKind::relu6:
                y = nn::relu6(x);
                break;
            case LayerKind::max_pool:
                y = nn::max_pool2d(x, train ? &st.pool_argmax[i] : nullptr);
                break;
            case LayerKind::global_avg_pool:
                y = nn::global_average_pool(x);
                break;
            case LayerKind::batch_norm:
                y = nn::batch_norm(x, p.bn_gamma, p.bn_beta, p.bn_mean, p.bn_var, train,
                                   kBnMomentum, kBnEpsilon, train ? &st.bn[i] : nullptr);
                break;
            case LayerKind::add_residual: {
                const Tensor& skip = st.acts[std::size_t(l.skip_from)];
                if (!skip.same_shape(x))
                    throw Error(m.spec.name + ": residual shape mismatch at layer " +
                                std::to_string(i));
                y = Tensor(x.shape);
                kernels::add(x.ptr(), skip.ptr(), y.ptr(), x.size());
                break;
            }
            case LayerKind::flatten:
                y = Tensor({bsz, x.size() / bsz}, x.data);
                break;
            case LayerKind::dropout:
                if (train)
                    y = nn::dropout(x, l.rate, dropout_seed + i, &st.dropout_mask[i]);
                else
                    y = x;
                break;
        }
        st.acts[i + 1] = std::move(y);
    }
    return st.acts[n_layers];
}

Tensor forward(const Model& m, const Tensor& batch) {
    // Inference never mutates running statistics, so the cast is safe.
    return forward(const_cast<Model&>(m), batch, RunMode::infer, nullptr, 0);
}

void backward(const Model& m, const ForwardState& state, const Tensor& grad_out,
              std::vector<LayerParams>& grads) {
    const std::size_t n_layers = m.spec.layers.size();
    if (state.acts.size() != n_layers + 1)
        throw Error("backward: missing cached forward state");
    grads.assign(n_layers, LayerParams{});
    std::vector<Tensor> act_grads(n_layers + 1);
    act_grads[n_layers] = grad_out;

    auto accumulate = [](Tensor& dst, const Tensor& src) {
        if (dst.size() == 0)
            dst = src;
        else
            kernels::add(dst.ptr(), src.ptr(), dst.ptr(), dst.size());
    };

    for (std::size_t ri = n_layers; ri-- > 0;) {
        const LayerSpec& l = m.spec.layers[ri];
        const LayerParams& p = m.params[ri];
        const Tensor& x = state.acts[ri];
        Tensor& dy = act_grads[ri + 1];
        if (dy.size() == 0) throw Error("backward: disconnected layer " + std::to_string(ri));
        LayerParams& g = grads[ri];
        Tensor dx;
        switch (l.kind) {
            case LayerKind::conv:
            case LayerKind::pointwise_conv:
                nn::conv2d_backward(x, p.weights,
                                    l.kind == LayerKind::pointwise_conv ? 1 : l.stride,
                                    l.padding, dy, dx, g.weights, l.bias ? &g.bias : nullptr);
                break;
            case LayerKind::depthwise_conv:
                nn::depthwise_conv2d_backward(x, p.weights, l.stride, l.padding, dy, dx,
                                              g.weights);
                break;
            case LayerKind::dense:
                nn::dense_backward(x, p.weights, dy, dx, g.weights, l.bias ? &g.bias : nullptr);
                break;
            case LayerKind::relu:
                dx = nn::relu_backward(x, dy);
                break;
            case LayerKind::relu6:
                dx = nn::relu6_backward(x, dy);
                break;
            case LayerKind::max_pool:
                if (state.pool_argmax[ri].empty())
                    throw Error("backward: max_pool layer " + std::to_string(ri) +
                                " has no cached argmax (forward not run in train mode)");
                dx = nn::max_pool2d_backward(x, state.pool_argmax[ri], dy);
                break;
            case LayerKind::global_avg_pool:
                dx = nn::global_average_pool_backward(x.shape, dy);
                break;
            case LayerKind::batch_norm:
                nn::batch_norm_backward(p.bn_gamma, state.bn[ri], dy, dx, g.bn_gamma, g.bn_beta);
                break;
            case LayerKind::add_residual:
                dx = dy;
                accumulate(act_grads[std::size_t(l.skip_from)], dy);
                break;
            case LayerKind::flatten:
                dx = Tensor(x.shape, dy.data);
                break;
            case LayerKind::dropout:
                dx = nn::dropout_backward(dy, l.rate, state.dropout_mask[ri]);
                break;
        }
        accumulate(act_grads[ri], dx);
        dy = Tensor{};  // release as we go
    }
}

namespace {

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
void read_pod(std::istream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw Error("weight file: truncated");
}

struct NamedTensor {
    std::string name;
    const Tensor* t;
};

std::vector<NamedTensor> tensor_entries(const Model& m) {
    std::vector<NamedTensor> entries;
    for (std::size_t i = 0; i < m.params.size(); ++i) {
        const LayerParams& p = m.params[i];
        const std::string prefix = "layer" + std::to_string(i) + ".";
        const std::pair<const char*, const Tensor*> fields[] = {
            {"weights", &p.weights},   {"bias", &p.bias},       {"bn_gamma", &p.bn_gamma},
            {"bn_beta", &p.bn_beta},   {"bn_mean", &p.bn_mean}, {"bn_var", &p.bn_var}};
        for (const auto& [suffix, t] : fields)
            if (t->size() > 0) entries.push_back({prefix + suffix, t});
    }
    return entries;
}

}  // namespace

void save_weights(const Model& m, std::ostream& out) {
    out.write(kMagic, 4);
    write_pod(out, kFormatVersion);
    const auto entries = tensor_entries(m);
    write_pod(out, std::uint32_t(entries.size()));
    for (const auto& e : entries) {
        write_pod(out, std::uint16_t(e.name.size()));
        out.write(e.name.data(), std::streamsize(e.name.size()));
        write_pod(out, std::uint8_t(e.t->rank()));
        for (std::size_t d : e.t->shape) write_pod(out, std::uint32_t(d));
        out.write(reinterpret_cast<const char*>(e.t->ptr()),
                  std::streamsize(e.t->size() * sizeof(float)));
    }
    if (!out) throw Error("weight file: write failed");
}

Model load_weights(const ModelSpec& spec, std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw Error("weight file: bad magic (not a KPBW file)");
    std::uint16_t version;
    read_pod(in, version);
    if (version != kFormatVersion)
        throw Error("weight file: unsupported format version " + std::to_string(version));

    Model m = init_model(spec, 0);
    const auto expected = tensor_entries(m);
    std::uint32_t count;
    read_pod(in, count);
    if (count != expected.size())
        throw Error("weight file: tensor count " + std::to_string(count) + " != expected " +
                    std::to_string(expected.size()));
    for (const auto& e : expected) {
        std::uint16_t name_len;
        read_pod(in, name_len);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (!in || name != e.name)
            throw Error("weight file: expected tensor '" + e.name + "', found '" + name + "'");
        std::uint8_t rank;
        read_pod(in, rank);
        if (rank != e.t->rank())
            throw Error("weight file: tensor '" + name + "' rank mismatch");
        for (std::size_t d = 0; d < rank; ++d) {
            std::uint32_t extent;
            read_pod(in, extent);
            if (extent != e.t->shape[d])
                throw Error("weight file: tensor '" + name + "' shape mismatch on axis " +
                            std::to_string(d));
        }
        Tensor* dst = const_cast<Tensor*>(e.t);
        in.read(reinterpret_cast<char*>(dst->ptr()),
                std::streamsize(dst->size() * sizeof(float)));
        if (!in) throw Error("weight file: truncated in tensor '" + name + "'");
    }
    return m;
}

void save_weights_file(const Model& m, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write weight file: " + path);
    save_weights(m, f);
}

Model load_weights_file(const ModelSpec& spec, const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open weight file: " + path);
    return load_weights(spec, f);
}

std::size_t model_size_bytes(const Model& m) {
    std::size_t n = 4 + sizeof(std::uint16_t) + sizeof(std::uint32_t);
    for (const auto& e : tensor_entries(m))
        n += sizeof(std::uint16_t) + e.name.size() + 1 + 4 * e.t->rank() +
             4 * e.t->size();
    return n;
}

std::string describe(const Model& m) {
    const auto shapes = infer_shapes(m.spec);
    std::ostringstream os;
    os << "model: " << m.spec.name << "\ninput: (" << m.spec.input_shape[0] << ","
       << m.spec.input_shape[1] << "," << m.spec.input_shape[2] << ")\n";
    char line[128];
    std::snprintf(line, sizeof line, "%-4s %-16s %-14s %10s\n", "#", "layer", "output", "params");
    os << line;
    for (std::size_t i = 0; i < m.spec.layers.size(); ++i) {
        const auto c = count_parameters(m, i, i + 1);
        std::string shape = "(";
        for (std::size_t d = 0; d < shapes[i + 1].size(); ++d)
            shape += std::to_string(shapes[i + 1][d]) + (d + 1 < shapes[i + 1].size() ? "," : "");
        shape += ")";
        std::snprintf(line, sizeof line, "%-4zu %-16s %-14s %10zu\n", i,
                      layer_kind_name(m.spec.layers[i].kind), shape.c_str(), c.total);
        os << line;
    }
    const auto total = count_parameters(m);
    const auto trunk = count_parameters(m, 0, m.spec.head_begin);
    os << "trainable: " << total.trainable << "\nnon-trainable: " << total.non_trainable
       << "\ntotal: " << total.total << "\ntrunk (head excluded): " << trunk.total
       << "\nsize bytes: " << model_size_bytes(m) << "\n";
    return os.str();
}

}  // namespace kpbench
