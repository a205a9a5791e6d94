#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>
#include <vector>

#include "kpbench/error.hpp"
#include "kpbench/training.hpp"

using namespace kpbench;

namespace {

// Smallest trainable model: flatten + dense. Input (1,2,2) so the dense
// weight matrix is 4xN.
ModelSpec flat_dense_spec(std::size_t out) {
    ModelSpec s;
    s.name = "flat";
    s.input_shape = {1, 2, 2};
    s.layers.push_back({.kind = LayerKind::flatten});
    s.head_begin = 1;
    s.layers.push_back({.kind = LayerKind::dense, .filters = out});
    return s;
}

// Cheap conv regressor for end-to-end training smoke tests.
ModelSpec small_net() {
    ModelSpec s;
    s.name = "small";
    s.input_shape = {1, kImageSize, kImageSize};
    s.layers.push_back({.kind = LayerKind::conv, .filters = 4, .kernel = 3, .stride = 2});
    s.layers.push_back({.kind = LayerKind::relu});
    s.layers.push_back({.kind = LayerKind::max_pool});
    s.head_begin = s.layers.size();
    s.layers.push_back({.kind = LayerKind::global_avg_pool});
    s.layers.push_back({.kind = LayerKind::dense, .filters = kNumCoords});
    return s;
}

// Mirror of m.params with gradient 2*(w - target) per trainable tensor:
// the gradient of sum (w_i - t_i)^2.
std::vector<LayerParams> quadratic_grads(const Model& m, float target) {
    std::vector<LayerParams> grads(m.params.size());
    for (std::size_t i = 0; i < m.params.size(); ++i) {
        const std::pair<const Tensor*, Tensor*> slots[] = {
            {&m.params[i].weights, &grads[i].weights},
            {&m.params[i].bias, &grads[i].bias},
            {&m.params[i].bn_gamma, &grads[i].bn_gamma},
            {&m.params[i].bn_beta, &grads[i].bn_beta}};
        for (auto [src, dst] : slots) {
            if (src->size() == 0) continue;
            *dst = Tensor(src->shape);
            for (std::size_t j = 0; j < src->size(); ++j)
                dst->data[j] = 2.0f * (src->data[j] - target);
        }
    }
    return grads;
}

float worst_distance(const Model& m, float target) {
    float worst = 0.0f;
    for (const auto& p : m.params)
        for (const Tensor* t : {&p.weights, &p.bias})
            for (float v : t->data) worst = std::max(worst, std::abs(v - target));
    return worst;
}

}  // namespace

TEST_SUITE("training") {

TEST_CASE("mse_loss worked examples") {
    // y=[0,0], pred=[3,4], full mask: (9+16)/2 = 12.5.
    const Tensor pred({1, 2}, {3.0f, 4.0f});
    const Tensor target({1, 2});
    const Tensor full({1, 2}, {1.0f, 1.0f});
    CHECK(mse_loss(pred, target, full).first == doctest::Approx(12.5f));
    // Masking the second coordinate: 9/1 = 9.0.
    const Tensor first_only({1, 2}, {1.0f, 0.0f});
    CHECK(mse_loss(pred, target, first_only).first == doctest::Approx(9.0f));
    CHECK_THROWS_AS(mse_loss(pred, Tensor({1, 3}), full), Error);
}

TEST_CASE("split_train_val partitions without loss or overlap") {
    const Dataset ds = synthesize_dataset(25, 3);
    const auto [train_set, val_set] = split_train_val(ds, 0.2f, 9);
    CHECK(val_set.size() == 5);
    CHECK(train_set.size() == 20);
    // Disjoint union: every image id appears exactly once across the split.
    std::vector<int> seen;
    for (const Sample& s : train_set.samples) seen.push_back(s.image_id);
    for (const Sample& s : val_set.samples) seen.push_back(s.image_id);
    std::sort(seen.begin(), seen.end());
    for (std::size_t i = 0; i < seen.size(); ++i) CHECK(seen[i] == int(i) + 1);

    const auto [t2, v2] = split_train_val(ds, 0.2f, 9);
    CHECK(t2 == train_set);
    const auto [t3, v3] = split_train_val(ds, 0.2f, 10);
    CHECK_FALSE(t3 == train_set);

    CHECK_THROWS_AS(split_train_val(ds, 0.0f, 1), Error);
    CHECK_THROWS_AS(split_train_val(ds, 1.0f, 1), Error);
}

TEST_CASE("optimizer with zero learning rate leaves weights in place") {
    Model m = init_model(flat_dense_spec(3), 5);
    const auto before = m.params[1].weights.data;
    OptimizerConfig cfg;
    cfg.learning_rate = 0.0f;
    Optimizer opt(m, cfg);
    for (int i = 0; i < 5; ++i) opt.step(quadratic_grads(m, 1.0f));
    CHECK(m.params[1].weights.data == before);
}

TEST_CASE("adam minimizes a quadratic within 200 steps") {
    Model m = init_model(flat_dense_spec(4), 17);
    OptimizerConfig cfg;  // adam defaults
    cfg.learning_rate = 0.05f;
    Optimizer opt(m, cfg);
    for (int i = 0; i < 200 && worst_distance(m, 0.7f) > 1e-3f; ++i)
        opt.step(quadratic_grads(m, 0.7f));
    CHECK(worst_distance(m, 0.7f) <= 1e-3f);
}

TEST_CASE("sgd with momentum minimizes a quadratic within 200 steps") {
    Model m = init_model(flat_dense_spec(4), 19);
    OptimizerConfig cfg;
    cfg.kind = OptimizerConfig::Kind::sgd_momentum;
    cfg.learning_rate = 0.05f;
    Optimizer opt(m, cfg);
    for (int i = 0; i < 200 && worst_distance(m, -0.3f) > 1e-3f; ++i)
        opt.step(quadratic_grads(m, -0.3f));
    CHECK(worst_distance(m, -0.3f) <= 1e-3f);
}

TEST_CASE("optimizer rejects mismatched gradient structure") {
    Model m = init_model(flat_dense_spec(2), 1);
    Optimizer opt(m, OptimizerConfig{});
    std::vector<LayerParams> empty(1);
    CHECK_THROWS_WITH_AS(opt.step(empty), doctest::Contains("structure"), Error);
}

TEST_CASE("train records one curve row per epoch and improves the loss") {
    const Dataset ds = synthesize_dataset(40, 13);
    Model m = init_model(small_net(), 13);
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.batch_size = 8;
    cfg.seed = 13;
    cfg.early_stop_patience = 0;
    const TrainingCurve curve = train(m, ds, cfg);
    REQUIRE(curve.epochs.size() == 4);
    for (std::size_t i = 0; i < curve.epochs.size(); ++i) {
        CHECK(curve.epochs[i].epoch == i + 1);
        CHECK(std::isfinite(curve.epochs[i].train_mse));
        CHECK(std::isfinite(curve.epochs[i].val_rmse_px));
        CHECK(curve.epochs[i].seconds >= 0.0);
    }
    CHECK(curve.best_epoch >= 1);
    CHECK(curve.best_val_rmse_px <= curve.epochs.front().val_rmse_px);
    CHECK(curve.epochs.back().train_mse < curve.epochs.front().train_mse);
}

TEST_CASE("training is deterministic in the seed") {
    const Dataset ds = synthesize_dataset(24, 29);
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 8;
    cfg.seed = 5;
    Model a = init_model(small_net(), 5);
    Model b = init_model(small_net(), 5);
    const TrainingCurve ca = train(a, ds, cfg);
    const TrainingCurve cb = train(b, ds, cfg);
    CHECK(a.params[0].weights.data == b.params[0].weights.data);
    CHECK(ca.epochs[1].train_mse == cb.epochs[1].train_mse);
}

TEST_CASE("early stopping halts after patience epochs without improvement") {
    const Dataset ds = synthesize_dataset(24, 31);
    Model m = init_model(small_net(), 7);
    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.batch_size = 8;
    cfg.optimizer.learning_rate = 0.0f;  // validation score can never improve
    cfg.early_stop_patience = 2;
    const TrainingCurve curve = train(m, ds, cfg);
    CHECK(curve.epochs.size() == 3);  // epoch 1 sets best, 2 misses, 3 stops
    CHECK(curve.best_epoch == 1);
}

TEST_CASE("stop_below_val_rmse_px exits once the target is reached") {
    const Dataset ds = synthesize_dataset(24, 37);
    Model m = init_model(small_net(), 9);
    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.batch_size = 8;
    cfg.stop_below_val_rmse_px = 1000.0f;  // trivially satisfied immediately
    const TrainingCurve curve = train(m, ds, cfg);
    CHECK(curve.epochs.size() == 1);
}

TEST_CASE("train input validation") {
    Model m = init_model(small_net(), 1);
    CHECK_THROWS_WITH_AS(train(m, Dataset{}, TrainConfig{}), doctest::Contains("empty"), Error);
    TrainConfig tiny;
    tiny.validation_fraction = 0.5f;
    CHECK_THROWS_AS(train(m, synthesize_dataset(1, 1), tiny), Error);
}

TEST_CASE("curve csv has the documented header and row count") {
    TrainingCurve c;
    c.epochs.push_back({1, 0.5, 0.4, 19.2, 1.25});
    c.epochs.push_back({2, 0.25, 0.2, 13.1, 1.5});
    std::ostringstream out;
    write_curve_csv(c, out);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "epoch,train_mse,val_mse,val_rmse_px,seconds");
    std::getline(in, line);
    CHECK(line.rfind("1,0.5,0.4,19.2,", 0) == 0);
    std::getline(in, line);
    CHECK(line.rfind("2,0.25,0.2,13.1,", 0) == 0);
}

TEST_CASE("random search picks the argmin trial deterministically") {
    const Dataset ds = synthesize_dataset(30, 41);
    SearchSpace space;
    space.conv_blocks = {1};
    space.block_filters = {4};
    space.hidden_dense = {0};
    space.learning_rates = {1e-3f, 3e-3f};
    TrainConfig base;
    base.epochs = 2;
    base.batch_size = 8;
    base.seed = 11;
    const TuneResult a = random_search_tune(space, 3, ds, base);
    REQUIRE(a.trials.size() == 3);
    for (const auto& t : a.trials) CHECK(a.trials[a.best_index].val_rmse_px <= t.val_rmse_px);
    CHECK(a.best.name == a.trials[a.best_index].spec.name);
    CHECK(a.best_learning_rate == a.trials[a.best_index].learning_rate);

    const TuneResult b = random_search_tune(space, 3, ds, base);
    CHECK(a.best_index == b.best_index);
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(a.trials[i].val_rmse_px == b.trials[i].val_rmse_px);

    CHECK_THROWS_AS(random_search_tune(space, 0, ds, base), Error);
}

}  // TEST_SUITE
