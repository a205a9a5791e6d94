#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "kpbench/dataset.hpp"
#include "kpbench/error.hpp"
#include "kpbench/model.hpp"

namespace kpbench {

struct OptimizerConfig {
    enum class Kind { adam, sgd_momentum };
    Kind kind = Kind::adam;
    float learning_rate = 1e-3f;
    float momentum = 0.9f;  // sgd
    float beta1 = 0.9f, beta2 = 0.999f, epsilon = 1e-8f;  // adam
};

struct TrainConfig {
    std::size_t epochs = 100;
    std::size_t batch_size = 32;
    OptimizerConfig optimizer;
    std::uint64_t seed = 0;
    float validation_fraction = 0.2f;
    std::size_t early_stop_patience = 10;  // 0 disables
    float stop_below_val_rmse_px = 0.0f;   // stop once reached; 0 disables
    float stop_below_train_rmse_px = 0.0f;
    bool verbose = false;
};

// Adam / SGD-momentum over every trainable tensor of a model. The model
// outlives the optimizer; step() expects gradients mirroring m.params.
class Optimizer {
public:
    Optimizer(Model& m, const OptimizerConfig& cfg);
    void step(const std::vector<LayerParams>& grads);

private:
    OptimizerConfig cfg_;
    std::vector<Tensor*> slots_;
    std::vector<std::vector<float>> m_, v_;
    std::size_t t_ = 0;
};

struct EpochRecord {
    std::size_t epoch;
    double train_mse;
    double val_mse;
    double val_rmse_px;
    double seconds;
};

struct TrainingCurve {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    double best_val_rmse_px = 0.0;
};

// epoch,train_mse,val_mse,val_rmse_px,seconds
void write_curve_csv(const TrainingCurve& c, std::ostream& out);
void save_curve_csv(const TrainingCurve& c, const std::string& path);

// Masked MSE over the coordinates whose mask is 1: loss = sum(mask*(p-t)^2)/m,
// grad = 2*mask*(p-t)/m with m = sum(mask). Throws when m == 0.
template <typename T>
std::pair<T, BasicTensor<T>> mse_loss(const BasicTensor<T>& pred, const BasicTensor<T>& target,
                                      const BasicTensor<T>& mask) {
    if (!pred.same_shape(target) || !pred.same_shape(mask))
        throw Error("mse_loss: shape mismatch between prediction " + pred.shape_str() +
                    ", target " + target.shape_str() + ", mask " + mask.shape_str());
    T m = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) m += mask.data[i];
    if (m == T(0)) throw Error("mse_loss: mask selects no coordinates");
    T loss = 0;
    BasicTensor<T> grad(pred.shape);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const T d = mask.data[i] * (pred.data[i] - target.data[i]);
        loss += d * d / m;  // mask is 0/1 so d^2 == mask*d^2
        grad.data[i] = T(2) * d / m;
    }
    return {loss, std::move(grad)};
}

// Deterministic shuffled partition; union == input, sides disjoint.
std::pair<Dataset, Dataset> split_train_val(const Dataset& ds, float fraction,
                                            std::uint64_t seed);

// Mini-batch training with best-validation-epoch weight restoration. The
// model is updated in place; the curve has one row per epoch run.
TrainingCurve train(Model& m, const Dataset& ds, const TrainConfig& cfg);

struct SearchSpace {
    std::vector<std::size_t> conv_blocks{2, 3, 4};
    std::vector<std::size_t> block_filters{8, 16, 24, 32};
    std::vector<std::size_t> hidden_dense{0, 32, 64};
    std::vector<float> learning_rates{3e-4f, 1e-3f, 3e-3f};
};

struct TuneTrial {
    ModelSpec spec;
    float learning_rate;
    double val_rmse_px;
};

struct TuneResult {
    ModelSpec best;
    float best_learning_rate = 0.0f;
    std::size_t best_index = 0;
    std::vector<TuneTrial> trials;
};

// Random-search architecture/learning-rate tuning with short trainings.
TuneResult random_search_tune(const SearchSpace& space, std::size_t budget, const Dataset& ds,
                              const TrainConfig& base);

}  // namespace kpbench
