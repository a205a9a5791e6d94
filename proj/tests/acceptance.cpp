// Acceptance suite: one PASS/FAIL line per criterion, exit code = number of
// failures. Criterion 9 is skipped (reported as such, not failed) when the
// real dataset is absent; criterion 10 needs KPBENCH_BIN to drive the CLI.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gradcheck_util.hpp"
#include "kpbench/augmentation.hpp"
#include "kpbench/dataset.hpp"
#include "kpbench/evaluation.hpp"
#include "kpbench/imputation.hpp"
#include "kpbench/model.hpp"
#include "kpbench/training.hpp"

using namespace kpbench;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %2d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

void report_skip(int criterion, const std::string& detail) {
    std::printf("[SKIP] criterion %2d: %s\n", criterion, detail.c_str());
    std::fflush(stdout);
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof buf, format, args);
    va_end(args);
    return buf;
}

// ---- criterion 1: MobileNetV2 trunk parameter accounting ------------------

void criterion_1() {
    const Model m = build_mobilenetv2_regressor(1.0f, 0);
    const auto trunk = count_parameters(m, 0, m.spec.head_begin);
    report(1, trunk.total == 2'257'984,
           fmt("mobilenetv2 trunk parameters = %zu (expected 2257984; trainable %zu + "
               "bn statistics %zu)",
               trunk.total, trunk.trainable, trunk.non_trainable));
}

// ---- criterion 2: size law vs the published table -------------------------

std::size_t exact_header_bytes(const Model& m) {
    std::size_t n = 4 + 2 + 4;  // magic, version, tensor count
    for (std::size_t i = 0; i < m.params.size(); ++i) {
        const LayerParams& p = m.params[i];
        const std::pair<const char*, const Tensor*> fields[] = {
            {"weights", &p.weights},   {"bias", &p.bias},       {"bn_gamma", &p.bn_gamma},
            {"bn_beta", &p.bn_beta},   {"bn_mean", &p.bn_mean}, {"bn_var", &p.bn_var}};
        for (const auto& [suffix, t] : fields) {
            if (t->size() == 0) continue;
            const std::string name = "layer" + std::to_string(i) + "." + suffix;
            n += 2 + name.size() + 1 + 4 * t->rank();
        }
    }
    return n;
}

void criterion_2() {
    // Published (total parameters, reported decimal MB) pairs. One row is a
    // known outlier against the 4-bytes-per-parameter rule and is verified
    // to be one rather than silently included.
    const std::pair<double, double> published[] = {
        {1'890'366, 7.6}, {235'834, 1.0},   {306'750, 1.27},   {246'478, 1.03},
        {364'318, 1.50},  {2'257'984, 9.66}, {4'301'426, 18.48}};
    const std::pair<double, double> outlier{246'062, 1.58};

    bool ok = true;
    std::string note;
    double worst = 0.0;
    for (const auto& [params, mb] : published) {
        const double rel = std::abs(params * 4.0 / 1e6 - mb) / mb;
        worst = std::max(worst, rel);
        if (rel >= 0.10) ok = false;
    }
    const double outlier_rel =
        std::abs(outlier.first * 4.0 / 1e6 - outlier.second) / outlier.second;
    if (outlier_rel <= 0.10) {
        ok = false;
        note = "; expected outlier row unexpectedly conforms";
    }

    for (const char* name : {"baseline", "manual", "mobilenetv2"}) {
        const Model m = build_named_model(name, 0);
        const auto c = count_parameters(m);
        const std::size_t expected = 4 * c.total + exact_header_bytes(m);
        if (model_size_bytes(m) != expected) {
            ok = false;
            note += fmt("; %s size %zu != 4*params+header %zu", name, model_size_bytes(m),
                        expected);
        }
    }
    report(2, ok,
           fmt("size law 4 bytes/parameter: 7 published rows within 10%% (worst %.1f%%), "
               "246062->1.58MB row confirmed as a %.0f%% outlier, local sizes exact%s",
               worst * 100.0, outlier_rel * 100.0, note.c_str()));
}

// ---- criterion 3: gradient suite ------------------------------------------

void criterion_3() {
    const auto t0 = std::chrono::steady_clock::now();
    struct Row {
        std::string name;
        double worst;
        double tol;
    };
    std::vector<Row> rows;
    auto add = [&rows](const gradcheck::LayerCheck& c, double tol) {
        rows.push_back({c.name, c.worst_rel_error, tol});
    };
    using gradcheck::run_layer_check;
    add(run_layer_check("conv2d", 20, 1,
                        [](std::mt19937& r) { return gradcheck::trial_conv(r, false); }),
        1e-3);
    add(run_layer_check("depthwise", 20, 2,
                        [](std::mt19937& r) { return gradcheck::trial_conv(r, true); }),
        1e-3);
    add(run_layer_check("dense", 20, 3, gradcheck::trial_dense), 1e-3);
    add(run_layer_check("relu", 20, 4,
                        [](std::mt19937& r) { return gradcheck::trial_activation(r, false); }),
        1e-3);
    add(run_layer_check("relu6", 20, 5,
                        [](std::mt19937& r) { return gradcheck::trial_activation(r, true); }),
        1e-3);
    add(run_layer_check("max_pool", 20, 6, gradcheck::trial_max_pool), 1e-3);
    add(run_layer_check("global_avg_pool", 20, 7, gradcheck::trial_gap), 1e-3);
    add(run_layer_check("batch_norm", 20, 8, gradcheck::trial_batch_norm), 1e-3);
    add(run_layer_check("dropout", 20, 9, gradcheck::trial_dropout), 1e-3);
    add(run_layer_check("residual+flatten", 20, 10, gradcheck::trial_residual_flatten), 1e-3);
    add(run_layer_check("mse_loss", 20, 11, gradcheck::trial_mse_loss), 1e-4);

    bool ok = true;
    double worst = 0.0;
    std::string bad;
    for (const auto& r : rows) {
        worst = std::max(worst, r.worst);
        if (!(r.worst < r.tol)) {
            ok = false;
            bad += " " + r.name + fmt("=%.2e", r.worst);
        }
    }
    report(3, ok,
           fmt("finite-difference gradients, 11 layer kinds x 20 instances in double "
               "precision: worst rel error %.2e (%.1fs)%s",
               worst, seconds_since(t0), bad.c_str()));
}

// ---- criterion 4: imputation oracles --------------------------------------

float knn_oracle(const Dataset& ds, std::size_t i, std::size_t col, std::size_t k) {
    std::vector<std::pair<double, std::size_t>> by_dist;
    for (std::size_t j = 0; j < ds.size(); ++j) {
        if (j == i) continue;
        double d2 = 0;
        std::size_t shared = 0;
        for (std::size_t c = 0; c < kNumCoords; ++c)
            if (ds.samples[i].has(c) && ds.samples[j].has(c)) {
                const double d = double(ds.samples[i].keypoints[c]) -
                                 double(ds.samples[j].keypoints[c]);
                d2 += d * d;
                ++shared;
            }
        if (shared > 0) by_dist.emplace_back(std::sqrt(d2 * 30.0 / double(shared)), j);
    }
    std::stable_sort(by_dist.begin(), by_dist.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    double sum = 0;
    std::size_t taken = 0;
    for (const auto& [d, j] : by_dist) {
        if (!ds.samples[j].has(col)) continue;
        sum += ds.samples[j].keypoints[col];
        if (++taken == k) break;
    }
    return taken == k ? float(sum / double(taken)) : std::nanf("");
}

void criterion_4() {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::string note;

    // Fixture: column [1, gap, gap, 4] forward-fills to [1, 1, 1, 4].
    Dataset fix;
    const float fixture_col[] = {1.0f, std::nanf(""), std::nanf(""), 4.0f};
    for (float v : fixture_col) {
        Sample s;
        for (std::size_t c = 1; c < kNumCoords; ++c) s.keypoints[c] = 50.0f;
        if (!std::isnan(v)) s.keypoints[0] = v;
        fix.samples.push_back(s);
    }
    const Dataset filled = forward_fill(fix);
    const float expected[] = {1.0f, 1.0f, 1.0f, 4.0f};
    for (std::size_t i = 0; i < 4; ++i)
        if (filled.samples[i].keypoints[0] != expected[i]) {
            ok = false;
            note += "; forward_fill fixture mismatch";
            break;
        }

    // 200 random datasets, <= 20 rows, missingness over <= 6 columns, vs the
    // independent brute-force oracle.
    std::mt19937 rng(4242);
    std::uniform_real_distribution<float> coord(5.0f, 90.0f);
    std::size_t cells_checked = 0;
    float worst = 0.0f;
    for (int trial = 0; trial < 200 && ok; ++trial) {
        const std::size_t n = 4 + rng() % 17;          // 4..20 rows
        const std::size_t k = 1 + rng() % 3;
        const std::size_t miss_cols = 1 + rng() % 6;   // <= 6 affected columns
        Dataset ds;
        for (std::size_t i = 0; i < n; ++i) {
            Sample s;
            for (std::size_t c = 0; c < kNumCoords; ++c) s.keypoints[c] = coord(rng);
            if (i >= k + 1)  // keep enough fully-observed donor rows
                for (std::size_t c = 0; c < miss_cols; ++c)
                    if (rng() % 3 == 0) s.keypoints[c] = std::nanf("");
            ds.samples.push_back(s);
        }
        const Dataset out = knn_impute(ds, k);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < miss_cols; ++c) {
                if (ds.samples[i].has(c)) continue;
                const float want = knn_oracle(ds, i, c, k);
                const float got = out.samples[i].keypoints[c];
                worst = std::max(worst, std::abs(got - want));
                ++cells_checked;
                if (!(std::abs(got - want) <= 1e-6f * std::max(1.0f, std::abs(want)))) {
                    ok = false;
                    note += fmt("; knn mismatch trial %d row %zu col %zu: %g vs %g", trial, i,
                                c, double(got), double(want));
                }
            }
    }
    report(4, ok,
           fmt("forward_fill fixture [1,_,_,4]->[1,1,1,4] and knn vs brute-force oracle on "
               "200 random datasets (%zu imputed cells, worst abs diff %.2g, %.1fs)%s",
               cells_checked, double(worst), seconds_since(t0), note.c_str()));
}

// ---- criterion 5: augmentation marker-pixel suite -------------------------

Sample marker_sample(float mx, float my) {
    Sample s;
    for (std::size_t i = 0; i < kNumCoords; ++i) s.keypoints[i] = 48.0f;
    s.keypoints[0] = mx;
    s.keypoints[1] = my;
    const int cx = int(std::lround(mx)), cy = int(std::lround(my));
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
            s.image[std::size_t(cy + dy) * kImageSize + std::size_t(cx + dx)] =
                (dx == 0 && dy == 0) ? 255 : 120;
    return s;
}

std::pair<float, float> centroid(const Sample& s) {
    double sx = 0, sy = 0, sw = 0;
    for (std::size_t y = 0; y < kImageSize; ++y)
        for (std::size_t x = 0; x < kImageSize; ++x) {
            const double w = s.image[y * kImageSize + x];
            sx += w * double(x);
            sy += w * double(y);
            sw += w;
        }
    return {float(sx / sw), float(sy / sw)};
}

void criterion_5() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937 rng(555);
    std::uniform_real_distribution<float> pos(20.0f, 76.0f);
    std::uniform_real_distribution<float> rot(-15.0f, 15.0f);
    std::uniform_real_distribution<float> shf(-8.0f, 8.0f);

    bool ok = true;
    std::string note;
    std::size_t cases = 0, rejected = 0;
    float worst = 0.0f;
    while (cases < 500) {
        const Sample s = marker_sample(pos(rng), pos(rng));
        const float theta = rot(rng), dx = shf(rng), dy = shf(rng);
        const auto rotated = rotate_sample(s, theta);
        if (!rotated) { ++rejected; continue; }
        const auto shifted = shift_sample(*rotated, dx, dy);
        if (!shifted) { ++rejected; continue; }
        ++cases;
        const auto [cx, cy] = centroid(*shifted);
        const float err = std::hypot(cx - shifted->keypoints[0], cy - shifted->keypoints[1]);
        worst = std::max(worst, err);
        if (!(err < 1.0f)) {
            ok = false;
            note += fmt("; centroid off by %.2f px (theta %.1f, shift %.1f/%.1f)", err,
                        theta, dx, dy);
        }
        for (float v : shifted->keypoints)
            if (!(v >= 0.0f && v < 96.0f)) {
                ok = false;
                note += "; keypoint left [0,96)";
            }
        // Photometric ops leave keypoints bitwise untouched.
        if (adjust_brightness(*shifted, 1.3f).keypoints != shifted->keypoints ||
            add_gaussian_noise(*shifted, 9.0f, cases).keypoints != shifted->keypoints) {
            ok = false;
            note += "; photometric op moved a keypoint";
        }
    }
    report(5, ok,
           fmt("marker centroid within 1 px of the mapped keypoint on 500 rotate+shift "
               "cases (worst %.3f px, %zu out-of-frame rejections, %.1fs)%s",
               worst, rejected, seconds_since(t0), note.c_str()));
}

// ---- criterion 6: overfit capacity ----------------------------------------

// One training step stream on a fixed 8-sample batch; returns per-epoch
// train RMSE in px.
std::vector<double> overfit_run(std::uint64_t seed, std::size_t max_epochs, double target_px) {
    const Dataset ds = synthesize_dataset(8, seed);
    Model m = build_manual_cnn(seed);
    OptimizerConfig ocfg;
    ocfg.learning_rate = 2e-3f;
    Optimizer opt(m, ocfg);
    const Tensor x = to_input_tensor(ds, 0, 8);
    Tensor y, mask;
    to_target_tensors(ds, 0, 8, y, mask);

    std::vector<double> rmse_px;
    ForwardState state;
    std::vector<LayerParams> grads;
    for (std::size_t epoch = 0; epoch < max_epochs; ++epoch) {
        const Tensor pred = forward(m, x, RunMode::train, &state, seed);
        const auto [loss, grad] = mse_loss(pred, y, mask);
        rmse_px.push_back(48.0 * std::sqrt(double(loss)));
        if (rmse_px.back() < target_px) break;
        backward(m, state, grad, grads);
        opt.step(grads);
    }
    return rmse_px;
}

void criterion_6() {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<double> run = overfit_run(123, 500, 1.0);
    const bool reached = run.back() < 1.0;

    // Determinism per seed: an identical short rerun reproduces the loss
    // stream bitwise.
    const std::size_t probe = std::min<std::size_t>(10, run.size());
    const std::vector<double> rerun = overfit_run(123, probe, 0.0);
    bool deterministic = rerun.size() >= probe;
    for (std::size_t i = 0; deterministic && i < probe; ++i)
        deterministic = rerun[i] == run[i];

    report(6, reached && deterministic,
           fmt("manual CNN overfits 8 synthetic samples: train RMSE %.3f px after %zu "
               "epochs (< 1 px required within 500), loss stream bitwise reproducible: "
               "%s (%.1fs)",
               run.back(), run.size(), deterministic ? "yes" : "NO", seconds_since(t0)));
}

// ---- criterion 7: desk-scale end-to-end -----------------------------------

ModelSpec trend_net() {
    ModelSpec s;
    s.name = "trend";
    s.input_shape = {1, kImageSize, kImageSize};
    s.layers.push_back({.kind = LayerKind::conv, .filters = 8, .kernel = 3, .stride = 2});
    s.layers.push_back({.kind = LayerKind::relu});
    s.layers.push_back({.kind = LayerKind::max_pool});
    s.layers.push_back({.kind = LayerKind::conv, .filters = 16, .kernel = 3});
    s.layers.push_back({.kind = LayerKind::relu});
    s.layers.push_back({.kind = LayerKind::max_pool});
    s.head_begin = s.layers.size();
    s.layers.push_back({.kind = LayerKind::global_avg_pool});
    s.layers.push_back({.kind = LayerKind::dense, .filters = kNumCoords});
    return s;
}

double holdout_rmse(const Model& m, const Dataset& holdout) {
    const Tensor pred = predict_batch(m, holdout, 32);
    Tensor target, mask;
    to_target_tensors(holdout, 0, holdout.size(), target, mask);
    for (auto& v : target.data) v = denormalize_coord(v);
    return rmse(pred, target, mask);
}

void criterion_7() {
    const auto t0 = std::chrono::steady_clock::now();
    const Dataset ds = synthesize_dataset(2000, 7);
    Model m = build_manual_cnn(7);
    TrainConfig cfg;
    cfg.epochs = 100;
    cfg.batch_size = 32;
    cfg.seed = 7;
    cfg.validation_fraction = 0.2f;  // the 80/20 split
    cfg.early_stop_patience = 10;
    cfg.stop_below_val_rmse_px = 4.99f;
    const TrainingCurve curve = train(m, ds, cfg);
    const bool ok = curve.best_val_rmse_px < 5.0;
    report(7, ok,
           fmt("manual CNN on 2000 synthetic samples (80/20): validation RMSE %.3f px at "
               "epoch %zu of %zu (< 5 px required within 100, %.0fs)",
               curve.best_val_rmse_px, curve.best_epoch, curve.epochs.size(),
               seconds_since(t0)));

    // Soft, report-only trend over 3 seeds at reduced scale: augmented
    // training should not do worse than non-augmented on a common holdout.
    std::size_t aug_wins = 0;
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        const Dataset pool = synthesize_dataset(200, 90 + seed);
        auto [train_set, holdout] = split_train_val(pool, 0.25f, seed);
        TrainConfig tc;
        tc.epochs = 8;
        tc.batch_size = 16;
        tc.seed = seed;
        tc.early_stop_patience = 0;

        Model plain = init_model(trend_net(), seed);
        train(plain, train_set, tc);
        AugmentationSpec aug;
        aug.per_sample_variants = 2;
        aug.seed = seed;
        Model augmented = init_model(trend_net(), seed);
        train(augmented, augment_offline(train_set, aug), tc);

        const double plain_rmse = holdout_rmse(plain, holdout);
        const double aug_rmse = holdout_rmse(augmented, holdout);
        if (aug_rmse <= plain_rmse) ++aug_wins;
        std::printf("       trend seed %llu: augmented %.3f px vs plain %.3f px\n",
                    (unsigned long long)seed, aug_rmse, plain_rmse);
    }
    std::printf("       trend (report-only, not gated): augmented <= plain on %zu/3 seeds\n",
                aug_wins);
    std::fflush(stdout);
}

// ---- criterion 8: latency ordering ----------------------------------------

void criterion_8() {
    const auto t0 = std::chrono::steady_clock::now();
    const Dataset timing = synthesize_dataset(8, 5);
    Model manual = build_manual_cnn(1);
    Model baseline = build_baseline_cnn(1);
    Model mnv2 = build_mobilenetv2_regressor(1.0f, 1);

    const double t_manual = measure_inference_time(manual, timing, 2, 5);
    const double t_baseline = measure_inference_time(baseline, timing, 2, 5);
    Dataset small;
    small.samples.assign(timing.samples.begin(), timing.samples.begin() + 4);
    const double t_mnv2 = measure_inference_time(mnv2, small, 1, 5);

    report(8, t_manual < t_baseline,
           fmt("sec-per-100 medians over 5 reps: manual %.2f < baseline %.2f required; "
               "mobilenetv2 %.2f recorded for reference (%.0fs)",
               t_manual, t_baseline, t_mnv2, seconds_since(t0)));
}

// ---- criterion 9: real-data conditional check -----------------------------

void criterion_9() {
    const char* dir = std::getenv("KPBENCH_DATA_DIR");
    if (!dir) {
        report_skip(9, "real Kaggle data check skipped: KPBENCH_DATA_DIR not set");
        return;
    }
    const fs::path train_path = fs::path(dir) / "training.csv";
    const fs::path test_path = fs::path(dir) / "test.csv";
    if (!fs::exists(train_path)) {
        report_skip(9, "real Kaggle data check skipped: " + train_path.string() + " not found");
        return;
    }
    bool ok = true;
    std::string note;
    const Dataset train_ds = load_training_csv(train_path.string());
    if (train_ds.size() != 7049) {
        ok = false;
        note += fmt("; training rows %zu != 7049", train_ds.size());
    }
    const NullProfile p = null_profile(train_ds);
    const double complete_pct = 100.0 * double(p.complete) / double(p.total);
    if (std::abs(complete_pct - 30.36) > 0.05) {
        ok = false;
        note += fmt("; complete-case %.2f%% != 30.36 +- 0.05", complete_pct);
    }
    std::size_t test_rows = 0;
    if (fs::exists(test_path)) {
        std::ifstream f(test_path);
        test_rows = parse_test_csv(f).size();
        if (test_rows != 1783) {
            ok = false;
            note += fmt("; test rows %zu != 1783", test_rows);
        }
    } else {
        note += "; test.csv absent (training-only check)";
    }
    report(9, ok,
           fmt("real data: %zu training rows, %.2f%% complete-case, %zu test rows%s",
               train_ds.size(), complete_pct, test_rows, note.c_str()));
}

// ---- criterion 10: CLI determinism ----------------------------------------

struct Cli {
    std::string bin;
    fs::path dir;

    int run(const std::string& args, const std::string& stdout_file = "") const {
        std::string cmd = bin + " " + args + " 2>/dev/null";
        if (!stdout_file.empty()) cmd += " >" + stdout_file;
        const int status = std::system(cmd.c_str());
        return status == -1 ? -1 : WEXITSTATUS(status);
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void criterion_10() {
    const char* bin = std::getenv("KPBENCH_BIN");
    if (!bin) {
        report(10, false, "KPBENCH_BIN not set; cannot drive the CLI");
        return;
    }
    const auto t0 = std::chrono::steady_clock::now();
    Cli cli{bin, fs::temp_directory_path() / "kpbench_acceptance"};
    fs::remove_all(cli.dir);
    fs::create_directories(cli.dir);
    const std::string d = cli.dir.string() + "/";

    bool ok = true;
    std::string note;
    auto require = [&](bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            note += "; " + what;
        }
    };
    auto same_file = [&](const std::string& a, const std::string& b, const std::string& what) {
        require(slurp(a) == slurp(b) && !slurp(a).empty(), what + " not bitwise identical");
    };

    // synth twice to the same path; csv and manifest must reproduce exactly.
    require(cli.run("synth --n 20 --seed 4 --out " + d + "s1.csv") == 0, "synth run 1");
    fs::copy_file(d + "s1.csv", d + "s1_run1.csv");
    fs::copy_file(d + "s1.csv.manifest.json", d + "s1_run1.manifest.json");
    require(cli.run("synth --n 20 --seed 4 --out " + d + "s1.csv") == 0, "synth run 2");
    same_file(d + "s1.csv", d + "s1_run1.csv", "synth csv");
    same_file(d + "s1.csv.manifest.json", d + "s1_run1.manifest.json", "synth manifest");

    // impute (knn) on a gappy copy
    {
        Dataset gappy = load_training_csv(d + "s1.csv");
        gappy.samples[3].keypoints[2] = std::nanf("");
        gappy.samples[8].keypoints[11] = std::nanf("");
        save_training_csv(gappy, d + "gappy.csv");
    }
    require(cli.run("impute --method knn --k 3 --in " + d + "gappy.csv --out " + d +
                    "i1.csv") == 0,
            "impute run 1");
    require(cli.run("impute --method knn --k 3 --in " + d + "gappy.csv --out " + d +
                    "i2.csv") == 0,
            "impute run 2");
    same_file(d + "i1.csv", d + "i2.csv", "impute csv");

    // augment
    require(cli.run("augment --variants 2 --seed 6 --in " + d + "s1.csv --out " + d +
                    "a1.csv") == 0,
            "augment run 1");
    require(cli.run("augment --variants 2 --seed 6 --in " + d + "s1.csv --out " + d +
                    "a2.csv") == 0,
            "augment run 2");
    same_file(d + "a1.csv", d + "a2.csv", "augment csv");

    // train: weight files bitwise identical (curve timing column excluded by design)
    const std::string train_flags =
        " --model manual --data " + d + "s1.csv --epochs 1 --batch 8 --seed 2 --out ";
    require(cli.run("train" + train_flags + d + "w1.kpw") == 0, "train run 1");
    require(cli.run("train" + train_flags + d + "w2.kpw") == 0, "train run 2");
    same_file(d + "w1.kpw", d + "w2.kpw", "trained weights");

    // model describe stdout
    require(cli.run("model describe mobilenetv2", d + "m1.txt") == 0, "describe run 1");
    require(cli.run("model describe mobilenetv2", d + "m2.txt") == 0, "describe run 2");
    same_file(d + "m1.txt", d + "m2.txt", "describe output");

    // tune trial log (contains no timing columns)
    const std::string tune_flags =
        " --data " + d + "s1.csv --budget 2 --epochs 1 --batch 8 --seed 3 --out ";
    require(cli.run("tune" + tune_flags + d + "t1.csv") == 0, "tune run 1");
    require(cli.run("tune" + tune_flags + d + "t2.csv") == 0, "tune run 2");
    same_file(d + "t1.csv", d + "t2.csv", "tune trial log");

    // bench: all non-timing columns must agree across runs
    const std::string bench_flags = " --model manual --weights " + d + "w1.kpw --data " + d +
                                    "s1.csv --warmup 0 --reps 3 --bench-images 3 --out ";
    require(cli.run("bench" + bench_flags + d + "b1.csv") == 0, "bench run 1");
    require(cli.run("bench" + bench_flags + d + "b2.csv") == 0, "bench run 2");
    if (ok) {
        const auto r1 = load_report_csv(d + "b1.csv");
        const auto r2 = load_report_csv(d + "b2.csv");
        require(r1.size() == 1 && r2.size() == 1 && r1[0].rmse_px == r2[0].rmse_px &&
                    r1[0].params_total == r2[0].params_total &&
                    r1[0].size_bytes == r2[0].size_bytes,
                "bench non-timing columns differ");
    }

    report(10, ok,
           fmt("identical seeds give bitwise-identical non-timing outputs across synth, "
               "impute, augment, train, describe, tune, bench (%.0fs)%s",
               seconds_since(t0), note.c_str()));
}

}  // namespace

int main() {
    std::printf("kpbench acceptance suite\n");
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    std::printf("%s: %d failure(s)\n", g_failures == 0 ? "ALL PASS" : "FAILED", g_failures);
    return g_failures == 0 ? 0 : 1;
}
