#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "kpbench/dataset.hpp"
#include "kpbench/nn_ops.hpp"
#include "kpbench/tensor.hpp"

namespace kpbench {

enum class LayerKind {
    conv,
    depthwise_conv,
    pointwise_conv,
    dense,
    relu,
    relu6,
    max_pool,
    global_avg_pool,
    batch_norm,
    add_residual,
    flatten,
    dropout,
};

const char* layer_kind_name(LayerKind k);

struct LayerSpec {
    LayerKind kind;
    std::size_t filters = 0;   // conv/pointwise/dense output width
    std::size_t kernel = 0;    // conv/depthwise spatial kernel
    std::size_t stride = 1;
    nn::Padding padding = nn::Padding::same;
    bool bias = true;          // conv/dense bias (depthwise/pointwise default off)
    float rate = 0.0f;         // dropout
    int skip_from = -1;        // add_residual: activation slot to add
};

struct ModelSpec {
    std::string name;
    std::array<std::size_t, 3> input_shape{};  // C,H,W
    std::vector<LayerSpec> layers;
    std::size_t head_begin = 0;  // first layer of the GAP + dense head
};

struct LayerParams {
    Tensor weights, bias;
    Tensor bn_gamma, bn_beta, bn_mean, bn_var;
};

struct Model {
    ModelSpec spec;
    std::vector<LayerParams> params;
};

// Per-activation-slot shapes without the batch axis; slot 0 is the model
// input, slot i+1 the output of layer i. Throws on any inconsistency.
std::vector<std::vector<std::size_t>> infer_shapes(const ModelSpec& spec);

// He-normal weights, zero biases, identity batch-norm. Deterministic per seed.
Model init_model(const ModelSpec& spec, std::uint64_t seed);

ModelSpec baseline_cnn_spec();
ModelSpec manual_cnn_spec();
ModelSpec mobilenetv2_spec(float width_multiplier = 1.0f);

Model build_baseline_cnn(std::uint64_t seed);
Model build_manual_cnn(std::uint64_t seed);
Model build_mobilenetv2_regressor(float width_multiplier, std::uint64_t seed);
// name in {baseline, manual, mobilenetv2}
ModelSpec named_model_spec(const std::string& name);
Model build_named_model(const std::string& name, std::uint64_t seed);

struct ParamCounts {
    std::size_t trainable = 0;
    std::size_t non_trainable = 0;  // batch-norm running statistics
    std::size_t total = 0;
};

ParamCounts count_parameters(const Model& m);
ParamCounts count_parameters(const Model& m, std::size_t layer_begin, std::size_t layer_end);

enum class RunMode { infer, train };

// Cached forward state for the backward pass (train mode only).
struct ForwardState {
    std::vector<Tensor> acts;  // acts[0] = adapted input, acts[i+1] = layer i output
    std::vector<std::vector<std::uint32_t>> pool_argmax;
    std::vector<nn::BatchNormCache<float>> bn;
    std::vector<std::vector<std::uint8_t>> dropout_mask;
};

// Single-channel batches are replicated to 3 channels when the spec wants
// RGB input; train mode mutates batch-norm running statistics.
Tensor forward(Model& m, const Tensor& batch, RunMode mode = RunMode::infer,
               ForwardState* state = nullptr, std::uint64_t dropout_seed = 0);
Tensor forward(const Model& m, const Tensor& batch);  // inference, no BN mutation

// Gradients of a scalar loss w.r.t. every trainable parameter given the
// loss gradient at the output. grads mirrors m.params.
void backward(const Model& m, const ForwardState& state, const Tensor& grad_out,
              std::vector<LayerParams>& grads);

// Binary weight format: "KPBW", version u16, tensor count u32, then per
// tensor: name (u16 length + bytes), rank u8, extents u32 each, raw f32 LE.
void save_weights(const Model& m, std::ostream& out);
Model load_weights(const ModelSpec& spec, std::istream& in);
void save_weights_file(const Model& m, const std::string& path);
Model load_weights_file(const ModelSpec& spec, const std::string& path);

// Exact on-disk size of save_weights output.
std::size_t model_size_bytes(const Model& m);

std::string describe(const Model& m);

}  // namespace kpbench
