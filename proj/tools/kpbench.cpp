// kpbench: facial keypoint regression pipeline driver.
// Subcommands cover data synthesis, imputation, offline augmentation,
// training, inference benchmarking, and the experiment grid.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "kpbench/augmentation.hpp"
#include "kpbench/dataset.hpp"
#include "kpbench/error.hpp"
#include "kpbench/evaluation.hpp"
#include "kpbench/imputation.hpp"
#include "kpbench/manifest.hpp"
#include "kpbench/model.hpp"
#include "kpbench/training.hpp"

namespace {

using namespace kpbench;

struct SynthOpts {
    std::size_t n = 200;
    std::uint64_t seed = 0;
    std::string out;
};

struct ImputeOpts {
    std::string method = "forward-fill";
    std::size_t k = 5;
    std::string in, out;
};

struct AugmentOpts {
    std::string in, out;
    AugmentationSpec spec;
};

struct TrainOpts {
    std::string model = "manual";
    std::string data;
    std::string impute = "none";
    std::string augment = "off";
    std::string out, curve;
    std::size_t k = 5;
    TrainConfig cfg;
    std::string optimizer = "adam";
    AugmentationSpec aug;
};

struct BenchOpts {
    std::string weights, model = "manual", data, out;
    std::size_t warmup = 3, reps = 7, batch = 1, bench_images = 100;
    std::string impute = "none", augment = "off";
};

struct GridOpts {
    std::string data, out;
    std::string models = "manual,mobilenetv2";
    std::string imputes = "none,knn";
    std::string augments = "off,on";
    std::size_t k = 5;
    TrainConfig cfg;
    std::size_t warmup = 3, reps = 5, bench_images = 100;
};

struct TuneOpts {
    std::string data, out;
    std::size_t budget = 5;
    TrainConfig cfg;
};

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

void emit_manifest(const std::string& subcommand, const std::vector<std::string>& args,
                   const std::vector<std::string>& inputs,
                   const std::vector<std::string>& outputs) {
    if (outputs.empty()) return;
    RunManifest m;
    m.subcommand = subcommand;
    m.args = args;
    for (const auto& p : inputs) m.input_hashes[p] = file_hash_hex(p);
    for (const auto& p : outputs) m.output_hashes[p] = file_hash_hex(p);
    write_manifest(m, outputs.front() + ".manifest.json");
}

// Imputation arm, then optional augmentation of the complete-case subset.
Dataset prepare_training_data(const Dataset& ds, const std::string& impute, std::size_t k,
                              const std::string& augment, const AugmentationSpec& aug) {
    Dataset prepared = ds;
    if (impute == "forward-fill")
        prepared = forward_fill(prepared);
    else if (impute == "knn")
        prepared = knn_impute(prepared, k);
    else if (impute != "none")
        throw Error("unknown imputation method '" + impute + "'");
    if (augment == "on")
        prepared = augment_offline(complete_subset(prepared), aug);
    else if (augment != "off")
        throw Error("--augment must be on or off");
    return prepared;
}

BenchRow run_cell(const std::string& model_name, const std::string& impute,
                  const std::string& augment, const Dataset& data, const GridOpts& g) {
    auto [train_raw, holdout] = split_train_val(data, 0.2f, g.cfg.seed);
    AugmentationSpec aug;
    aug.seed = g.cfg.seed;
    const Dataset prepared = prepare_training_data(train_raw, impute, g.k, augment, aug);

    Model m = build_named_model(model_name, g.cfg.seed);
    TrainConfig cfg = g.cfg;
    train(m, prepared, cfg);

    Tensor pred = predict_batch(m, holdout, 32);
    Tensor target, mask;
    to_target_tensors(holdout, 0, holdout.size(), target, mask);
    for (auto& v : target.data) v = denormalize_coord(v);

    Dataset timing_set;
    for (std::size_t i = 0; i < std::min(g.bench_images, holdout.size()); ++i)
        timing_set.samples.push_back(holdout.samples[i]);

    const auto counts = count_parameters(m);
    BenchRow row;
    row.model = model_name;
    row.impute = impute;
    row.augment = augment;
    row.params_trainable = counts.trainable;
    row.params_total = counts.total;
    row.size_bytes = model_size_bytes(m);
    row.rmse_px = rmse(pred, target, mask);
    row.sec_per_100 = measure_inference_time(m, timing_set, g.warmup, g.reps);
    row.warmup = g.warmup;
    row.reps = g.reps;
    row.hardware = hardware_descriptor();
    return row;
}

void write_report_outputs(const std::vector<BenchRow>& rows, const std::string& csv_path) {
    save_report_csv(rows, csv_path);
    std::ofstream txt(csv_path + ".txt");
    txt << format_report_table(rows);
    std::cout << format_report_table(rows);
}

void add_train_flags(CLI::App* cmd, TrainConfig& cfg, std::string* optimizer) {
    cmd->add_option("--epochs", cfg.epochs, "training epochs");
    cmd->add_option("--batch", cfg.batch_size, "mini-batch size");
    cmd->add_option("--lr", cfg.optimizer.learning_rate, "learning rate");
    cmd->add_option("--val-frac", cfg.validation_fraction, "validation fraction");
    cmd->add_option("--patience", cfg.early_stop_patience, "early stop patience (0 = off)");
    cmd->add_option("--stop-below", cfg.stop_below_val_rmse_px,
                    "stop once validation RMSE (px) drops below this (0 = off)");
    cmd->add_flag("--verbose", cfg.verbose, "per-epoch progress on stderr");
    if (optimizer) cmd->add_option("--optimizer", *optimizer, "adam or sgd");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"facial keypoint regression engine and benchmark harness"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);
    std::vector<std::string> raw_args(argv + 1, argv + argc);

    SynthOpts synth;
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic keypoint dataset");
    synth_cmd->add_option("--n", synth.n, "sample count");
    synth_cmd->add_option("--seed", synth.seed, "rng seed");
    synth_cmd->add_option("--out", synth.out, "output csv")->required();

    ImputeOpts impute;
    auto* impute_cmd = app.add_subcommand("impute", "fill missing keypoint labels");
    impute_cmd->add_option("--method", impute.method, "forward-fill or knn");
    impute_cmd->add_option("--k", impute.k, "neighbours for knn");
    impute_cmd->add_option("--in", impute.in, "input csv")->required();
    impute_cmd->add_option("--out", impute.out, "output csv")->required();

    AugmentOpts augment;
    auto* aug_cmd = app.add_subcommand("augment", "offline keypoint-consistent augmentation");
    aug_cmd->add_option("--in", augment.in, "input csv (complete-case)")->required();
    aug_cmd->add_option("--out", augment.out, "output csv")->required();
    aug_cmd->add_option("--rot", augment.spec.rotation_degrees, "max |rotation| degrees");
    aug_cmd->add_option("--shift", augment.spec.shift_pixels, "max |shift| px per axis");
    aug_cmd->add_option("--bright", augment.spec.brightness_delta, "brightness factor delta");
    aug_cmd->add_option("--noise", augment.spec.noise_sigma_max, "max noise sigma");
    aug_cmd->add_option("--variants", augment.spec.per_sample_variants, "variants per sample");
    aug_cmd->add_option("--seed", augment.spec.seed, "rng seed");

    TrainOpts tr;
    auto* train_cmd = app.add_subcommand("train", "train a model");
    train_cmd->add_option("--model", tr.model, "baseline, manual, or mobilenetv2");
    train_cmd->add_option("--data", tr.data, "training csv")->required();
    train_cmd->add_option("--impute", tr.impute, "none, forward-fill, or knn");
    train_cmd->add_option("--augment", tr.augment, "on or off");
    train_cmd->add_option("--k", tr.k, "neighbours for knn imputation");
    train_cmd->add_option("--out", tr.out, "output weight file")->required();
    train_cmd->add_option("--curve", tr.curve, "training curve csv");
    train_cmd->add_option("--seed", tr.cfg.seed, "rng seed");
    add_train_flags(train_cmd, tr.cfg, &tr.optimizer);

    BenchOpts bench;
    auto* bench_cmd = app.add_subcommand("bench", "measure RMSE and inference time");
    bench_cmd->add_option("--weights", bench.weights, "weight file")->required();
    bench_cmd->add_option("--model", bench.model, "model name the weights belong to");
    bench_cmd->add_option("--data", bench.data, "evaluation csv")->required();
    bench_cmd->add_option("--warmup", bench.warmup, "untimed warmup passes");
    bench_cmd->add_option("--reps", bench.reps, "timed repetitions (median reported)");
    bench_cmd->add_option("--batch", bench.batch, "inference batch size");
    bench_cmd->add_option("--bench-images", bench.bench_images, "images in the timing set");
    bench_cmd->add_option("--impute", bench.impute, "label for the report row");
    bench_cmd->add_option("--augment", bench.augment, "label for the report row");
    bench_cmd->add_option("--out", bench.out, "report csv")->required();

    auto* report_cmd = app.add_subcommand("report", "report utilities");
    report_cmd->require_subcommand(1);
    std::vector<std::string> merge_in;
    std::string merge_out;
    auto* merge_cmd = report_cmd->add_subcommand("merge", "merge report csv files");
    merge_cmd->add_option("files", merge_in, "input report csv files")->required();
    merge_cmd->add_option("--out", merge_out, "merged csv")->required();

    auto* model_cmd = app.add_subcommand("model", "model utilities");
    model_cmd->require_subcommand(1);
    std::string describe_name;
    auto* describe_cmd = model_cmd->add_subcommand("describe", "print the layer table");
    describe_cmd->add_option("name", describe_name, "baseline, manual, or mobilenetv2")
        ->required();

    GridOpts grid;
    auto* grid_cmd =
        app.add_subcommand("grid", "run the model x imputation x augmentation grid");
    grid_cmd->add_option("--data", grid.data, "training csv")->required();
    grid_cmd->add_option("--models", grid.models, "comma list of models");
    grid_cmd->add_option("--imputes", grid.imputes, "comma list of none,forward-fill,knn");
    grid_cmd->add_option("--augment", grid.augments, "comma list of off,on");
    grid_cmd->add_option("--k", grid.k, "neighbours for knn imputation");
    grid_cmd->add_option("--out", grid.out, "report csv")->required();
    grid_cmd->add_option("--seed", grid.cfg.seed, "rng seed");
    grid_cmd->add_option("--warmup", grid.warmup, "timing warmup passes");
    grid_cmd->add_option("--reps", grid.reps, "timing repetitions");
    grid_cmd->add_option("--bench-images", grid.bench_images, "images in the timing set");
    add_train_flags(grid_cmd, grid.cfg, nullptr);

    TuneOpts tune;
    auto* tune_cmd = app.add_subcommand("tune", "random-search architecture tuning");
    tune_cmd->add_option("--data", tune.data, "training csv")->required();
    tune_cmd->add_option("--budget", tune.budget, "number of trials");
    tune_cmd->add_option("--out", tune.out, "trial log csv")->required();
    tune_cmd->add_option("--seed", tune.cfg.seed, "rng seed");
    add_train_flags(tune_cmd, tune.cfg, nullptr);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    }

    try {
        if (*synth_cmd) {
            save_training_csv(synthesize_dataset(synth.n, synth.seed), synth.out);
            emit_manifest("synth", raw_args, {}, {synth.out});
        } else if (*impute_cmd) {
            const Dataset ds = load_training_csv(impute.in);
            const Dataset out = impute.method == "knn" ? knn_impute(ds, impute.k)
                               : impute.method == "forward-fill"
                                   ? forward_fill(ds)
                                   : throw Error("unknown imputation method '" + impute.method +
                                                 "' (expected forward-fill or knn)");
            save_training_csv(out, impute.out);
            emit_manifest("impute", raw_args, {impute.in}, {impute.out});
        } else if (*aug_cmd) {
            const Dataset ds = load_training_csv(augment.in);
            save_training_csv(augment_offline(ds, augment.spec), augment.out);
            emit_manifest("augment", raw_args, {augment.in}, {augment.out});
        } else if (*train_cmd) {
            if (tr.optimizer == "sgd")
                tr.cfg.optimizer.kind = OptimizerConfig::Kind::sgd_momentum;
            else if (tr.optimizer != "adam")
                throw Error("--optimizer must be adam or sgd");
            const Dataset ds = load_training_csv(tr.data);
            AugmentationSpec aug;
            aug.seed = tr.cfg.seed;
            const Dataset prepared = prepare_training_data(ds, tr.impute, tr.k, tr.augment, aug);
            Model m = build_named_model(tr.model, tr.cfg.seed);
            const TrainingCurve curve = train(m, prepared, tr.cfg);
            save_weights_file(m, tr.out);
            std::vector<std::string> outputs{tr.out};
            if (!tr.curve.empty()) {
                save_curve_csv(curve, tr.curve);
                outputs.push_back(tr.curve);
            }
            emit_manifest("train", raw_args, {tr.data}, outputs);
            std::printf("best epoch %zu, validation RMSE %.3f px\n", curve.best_epoch,
                        curve.best_val_rmse_px);
        } else if (*bench_cmd) {
            const ModelSpec spec = named_model_spec(bench.model);
            const Model m = load_weights_file(spec, bench.weights);
            const Dataset ds = load_training_csv(bench.data);
            if (ds.size() == 0) throw Error("bench: dataset is empty: " + bench.data);

            Tensor pred = predict_batch(m, ds, 32);
            Tensor target, mask;
            to_target_tensors(ds, 0, ds.size(), target, mask);
            for (auto& v : target.data) v = denormalize_coord(v);

            Dataset timing_set;
            for (std::size_t i = 0; i < std::min(bench.bench_images, ds.size()); ++i)
                timing_set.samples.push_back(ds.samples[i]);

            const auto counts = count_parameters(m);
            BenchRow row;
            row.model = bench.model;
            row.impute = bench.impute;
            row.augment = bench.augment;
            row.params_trainable = counts.trainable;
            row.params_total = counts.total;
            row.size_bytes = model_size_bytes(m);
            row.rmse_px = rmse(pred, target, mask);
            row.sec_per_100 =
                measure_inference_time(m, timing_set, bench.warmup, bench.reps, bench.batch);
            row.warmup = bench.warmup;
            row.reps = bench.reps;
            row.hardware = hardware_descriptor();
            write_report_outputs({row}, bench.out);
            emit_manifest("bench", raw_args, {bench.weights, bench.data},
                          {bench.out, bench.out + ".txt"});
        } else if (*merge_cmd) {
            std::vector<BenchRow> rows;
            for (const auto& path : merge_in)
                for (auto& r : load_report_csv(path)) rows.push_back(std::move(r));
            write_report_outputs(rows, merge_out);
            emit_manifest("report merge", raw_args, merge_in, {merge_out, merge_out + ".txt"});
        } else if (*describe_cmd) {
            std::cout << describe(build_named_model(describe_name, 0));
        } else if (*grid_cmd) {
            const Dataset data = load_training_csv(grid.data);
            std::vector<BenchRow> rows;
            for (const auto& model_name : split_list(grid.models))
                for (const auto& imp : split_list(grid.imputes))
                    for (const auto& aug : split_list(grid.augments))
                        rows.push_back(run_cell(model_name, imp, aug, data, grid));
            write_report_outputs(rows, grid.out);
            emit_manifest("grid", raw_args, {grid.data}, {grid.out, grid.out + ".txt"});
        } else if (*tune_cmd) {
            const Dataset ds = load_training_csv(tune.data);
            const TuneResult result = random_search_tune(SearchSpace{}, tune.budget, ds, tune.cfg);
            std::ofstream f(tune.out);
            if (!f) throw Error("cannot write trial log: " + tune.out);
            f << "trial,learning_rate,val_rmse_px,layers\n";
            for (std::size_t i = 0; i < result.trials.size(); ++i) {
                const auto& t = result.trials[i];
                f << i << ',' << t.learning_rate << ',' << t.val_rmse_px << ','
                  << t.spec.layers.size() << '\n';
            }
            f.close();
            emit_manifest("tune", raw_args, {tune.data}, {tune.out});
            std::printf("best trial %zu, validation RMSE %.3f px\n", result.best_index,
                        result.trials[result.best_index].val_rmse_px);
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "kpbench: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "kpbench: unexpected error: %s\n", e.what());
        return 1;
    }
    return 0;
}
