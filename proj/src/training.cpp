#include "kpbench/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

namespace kpbench {

namespace {

Tensor gather_inputs(const Dataset& ds, const std::vector<std::size_t>& idx, std::size_t begin,
                     std::size_t count) {
    Tensor x({count, 1, kImageSize, kImageSize});
    for (std::size_t i = 0; i < count; ++i) {
        const auto& img = ds.samples[idx[begin + i]].image;
        float* dst = x.ptr() + i * kNumPixels;
        for (std::size_t p = 0; p < kNumPixels; ++p) dst[p] = normalize_pixel(img[p]);
    }
    return x;
}

void gather_targets(const Dataset& ds, const std::vector<std::size_t>& idx, std::size_t begin,
                    std::size_t count, Tensor& y, Tensor& mask) {
    y = Tensor({count, kNumCoords});
    mask = Tensor({count, kNumCoords});
    for (std::size_t i = 0; i < count; ++i) {
        const Sample& s = ds.samples[idx[begin + i]];
        for (std::size_t c = 0; c < kNumCoords; ++c)
            if (s.has(c)) {
                y.at(i, c) = normalize_coord(s.keypoints[c]);
                mask.at(i, c) = 1.0f;
            }
    }
}

struct EvalResult {
    double mse;
    double rmse_px;
};

EvalResult evaluate(Model& m, const Dataset& ds, std::size_t batch_size) {
    std::vector<std::size_t> idx(ds.size());
    std::iota(idx.begin(), idx.end(), 0);
    double se_norm = 0, se_px = 0, count = 0;
    for (std::size_t b = 0; b < ds.size(); b += batch_size) {
        const std::size_t n = std::min(batch_size, ds.size() - b);
        Tensor x = gather_inputs(ds, idx, b, n), y, mask;
        gather_targets(ds, idx, b, n, y, mask);
        Tensor pred = forward(m, x, RunMode::infer);
        for (std::size_t i = 0; i < pred.size(); ++i)
            if (mask.data[i] != 0.0f) {
                const double dn = double(pred.data[i]) - double(y.data[i]);
                se_norm += dn * dn;
                const double dp = dn * 48.0;
                se_px += dp * dp;
                count += 1.0;
            }
    }
    if (count == 0) throw Error("evaluate: no supervised coordinates in dataset");
    return {se_norm / count, std::sqrt(se_px / count)};
}

}  // namespace

Optimizer::Optimizer(Model& m, const OptimizerConfig& cfg) : cfg_(cfg) {
    for (auto& p : m.params)
        for (Tensor* t : {&p.weights, &p.bias, &p.bn_gamma, &p.bn_beta})
            if (t->size() > 0) slots_.push_back(t);
    m_.resize(slots_.size());
    v_.resize(slots_.size());
    for (std::size_t i = 0; i < slots_.size(); ++i) {
        m_[i].assign(slots_[i]->size(), 0.0f);
        v_[i].assign(slots_[i]->size(), 0.0f);
    }
}

void Optimizer::step(const std::vector<LayerParams>& grads) {
    std::vector<const Tensor*> gslots;
    for (auto& g : grads)
        for (const Tensor* t : {&g.weights, &g.bias, &g.bn_gamma, &g.bn_beta})
            if (t->size() > 0) gslots.push_back(t);
    if (gslots.size() != slots_.size())
        throw Error("optimizer: gradient structure does not match model");
    ++t_;
    for (std::size_t i = 0; i < slots_.size(); ++i) {
        float* w = slots_[i]->ptr();
        const float* g = gslots[i]->ptr();
        const std::size_t n = slots_[i]->size();
        if (cfg_.kind == OptimizerConfig::Kind::adam) {
            const float bc1 = 1.0f - std::pow(cfg_.beta1, float(t_));
            const float bc2 = 1.0f - std::pow(cfg_.beta2, float(t_));
            for (std::size_t j = 0; j < n; ++j) {
                m_[i][j] = cfg_.beta1 * m_[i][j] + (1.0f - cfg_.beta1) * g[j];
                v_[i][j] = cfg_.beta2 * v_[i][j] + (1.0f - cfg_.beta2) * g[j] * g[j];
                const float mh = m_[i][j] / bc1, vh = v_[i][j] / bc2;
                w[j] -= cfg_.learning_rate * mh / (std::sqrt(vh) + cfg_.epsilon);
            }
        } else {
            for (std::size_t j = 0; j < n; ++j) {
                m_[i][j] = cfg_.momentum * m_[i][j] + g[j];
                w[j] -= cfg_.learning_rate * m_[i][j];
            }
        }
    }
}

void write_curve_csv(const TrainingCurve& c, std::ostream& out) {
    out << "epoch,train_mse,val_mse,val_rmse_px,seconds\n";
    char line[160];
    for (const auto& e : c.epochs) {
        std::snprintf(line, sizeof line, "%zu,%.9g,%.9g,%.9g,%.3f\n", e.epoch, e.train_mse,
                      e.val_mse, e.val_rmse_px, e.seconds);
        out << line;
    }
}

void save_curve_csv(const TrainingCurve& c, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw Error("cannot write curve file: " + path);
    write_curve_csv(c, f);
}

std::pair<Dataset, Dataset> split_train_val(const Dataset& ds, float fraction,
                                            std::uint64_t seed) {
    if (fraction <= 0.0f || fraction >= 1.0f)
        throw Error("split_train_val: fraction must be in (0,1)");
    std::vector<std::size_t> idx(ds.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t n_val = std::size_t(double(ds.size()) * double(fraction));
    Dataset train_set, val_set;
    for (std::size_t i = 0; i < idx.size(); ++i)
        (i < n_val ? val_set : train_set).samples.push_back(ds.samples[idx[i]]);
    return {std::move(train_set), std::move(val_set)};
}

TrainingCurve train(Model& m, const Dataset& ds, const TrainConfig& cfg) {
    if (ds.size() == 0) throw Error("train: dataset is empty");
    if (cfg.optimizer.learning_rate < 0.0f) throw Error("train: learning rate must be >= 0");
    auto [train_set, val_set] = split_train_val(ds, cfg.validation_fraction, cfg.seed);
    if (train_set.size() == 0 || val_set.size() == 0)
        throw Error("train: dataset too small for validation fraction");

    Optimizer opt(m, cfg.optimizer);
    std::mt19937_64 shuffle_rng(cfg.seed ^ 0x5bd1e995u);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    TrainingCurve curve;
    std::vector<LayerParams> best_params = m.params;
    double best_rmse = std::numeric_limits<double>::infinity();
    std::size_t best_epoch = 0, since_best = 0;

    std::vector<LayerParams> grads;
    ForwardState state;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double loss_sum = 0;
        std::size_t batches = 0;
        for (std::size_t b = 0; b < train_set.size(); b += cfg.batch_size, ++batches) {
            const std::size_t n = std::min(cfg.batch_size, train_set.size() - b);
            Tensor x = gather_inputs(train_set, order, b, n), y, mask;
            gather_targets(train_set, order, b, n, y, mask);
            Tensor pred = forward(m, x, RunMode::train, &state,
                                  cfg.seed * 1315423911u + epoch * 2654435761u + b);
            auto [loss, grad] = mse_loss(pred, y, mask);
            if (!std::isfinite(loss))
                throw Error("train: non-finite loss at epoch " + std::to_string(epoch) +
                            ", batch " + std::to_string(batches + 1));
            loss_sum += double(loss);
            backward(m, state, grad, grads);
            opt.step(grads);
        }
        const EvalResult val = evaluate(m, val_set, cfg.batch_size);
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        curve.epochs.push_back({epoch, loss_sum / double(batches), val.mse, val.rmse_px, secs});
        if (cfg.verbose)
            std::fprintf(stderr, "epoch %zu train_mse %.5f val_rmse %.3f px (%.1fs)\n", epoch,
                         loss_sum / double(batches), val.rmse_px, secs);

        if (val.rmse_px < best_rmse) {
            best_rmse = val.rmse_px;
            best_epoch = epoch;
            best_params = m.params;
            since_best = 0;
        } else {
            ++since_best;
        }
        if (cfg.stop_below_val_rmse_px > 0.0f && val.rmse_px < cfg.stop_below_val_rmse_px) break;
        if (cfg.stop_below_train_rmse_px > 0.0f &&
            48.0 * std::sqrt(loss_sum / double(batches)) < double(cfg.stop_below_train_rmse_px))
            break;
        if (cfg.early_stop_patience > 0 && since_best >= cfg.early_stop_patience) break;
    }
    m.params = std::move(best_params);
    curve.best_epoch = best_epoch;
    curve.best_val_rmse_px = best_rmse;
    return curve;
}

TuneResult random_search_tune(const SearchSpace& space, std::size_t budget, const Dataset& ds,
                              const TrainConfig& base) {
    if (budget < 1) throw Error("random_search_tune: budget must be >= 1");
    std::mt19937_64 rng(base.seed);
    auto pick = [&rng](const auto& v) { return v[rng() % v.size()]; };

    TuneResult result;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t trial = 0; trial < budget; ++trial) {
        ModelSpec spec;
        spec.name = "tuned" + std::to_string(trial);
        spec.input_shape = {1, kImageSize, kImageSize};
        const std::size_t blocks = pick(space.conv_blocks);
        for (std::size_t bl = 0; bl < blocks; ++bl) {
            spec.layers.push_back(
                {.kind = LayerKind::conv, .filters = pick(space.block_filters) << bl,
                 .kernel = 3});
            spec.layers.push_back({.kind = LayerKind::relu});
            spec.layers.push_back({.kind = LayerKind::max_pool});
        }
        spec.head_begin = spec.layers.size();
        spec.layers.push_back({.kind = LayerKind::global_avg_pool});
        if (const std::size_t hidden = pick(space.hidden_dense); hidden > 0) {
            spec.layers.push_back({.kind = LayerKind::dense, .filters = hidden});
            spec.layers.push_back({.kind = LayerKind::relu});
        }
        spec.layers.push_back({.kind = LayerKind::dense, .filters = kNumCoords});

        TrainConfig cfg = base;
        cfg.optimizer.learning_rate = pick(space.learning_rates);
        cfg.seed = base.seed + trial;
        Model m = init_model(spec, cfg.seed);
        const TrainingCurve curve = train(m, ds, cfg);
        result.trials.push_back({spec, cfg.optimizer.learning_rate, curve.best_val_rmse_px});
        if (curve.best_val_rmse_px < best) {
            best = curve.best_val_rmse_px;
            result.best = spec;
            result.best_learning_rate = cfg.optimizer.learning_rate;
            result.best_index = trial;
        }
    }
    return result;
}

}  // namespace kpbench
