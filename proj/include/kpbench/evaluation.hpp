#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "kpbench/dataset.hpp"
#include "kpbench/model.hpp"

namespace kpbench {

// One report row per (model, imputation, augmentation) experiment cell.
struct BenchRow {
    std::string model;
    std::string impute = "none";
    std::string augment = "off";
    std::size_t params_trainable = 0;
    std::size_t params_total = 0;
    std::size_t size_bytes = 0;
    double rmse_px = 0.0;
    double sec_per_100 = 0.0;
    std::size_t warmup = 0;
    std::size_t reps = 0;
    std::string hardware;
};

// Root of the masked mean squared error, pixel units. pred/target (N,30).
double rmse(const Tensor& pred_px, const Tensor& target_px, const Tensor& mask);

// Order-preserving pixel-space predictions for the whole dataset.
Tensor predict_batch(const Model& m, const Dataset& ds, std::size_t batch_size);

// Core timing loop with injectable pass and clock (seconds). After `warmup`
// untimed passes, times `reps` passes and returns median(total/n_images)*100.
double measure_seconds_per_100(std::size_t n_images, std::size_t warmup, std::size_t reps,
                               const std::function<void()>& pass,
                               const std::function<double()>& now);

// Single-threaded wall-clock measurement of model inference over the dataset.
double measure_inference_time(const Model& m, const Dataset& ds, std::size_t warmup,
                              std::size_t reps, std::size_t batch_size = 1);

std::string hardware_descriptor();

// CSV column order: model,impute,augment,params_trainable,params_total,
// size_bytes,rmse_px,sec_per_100,warmup,reps,hardware
void write_report_csv(const std::vector<BenchRow>& rows, std::ostream& out);
std::vector<BenchRow> parse_report_csv(std::istream& in);
void save_report_csv(const std::vector<BenchRow>& rows, const std::string& path);
std::vector<BenchRow> load_report_csv(const std::string& path);

// Aligned text table mirroring the CSV (MB column in decimal megabytes).
std::string format_report_table(const std::vector<BenchRow>& rows);

}  // namespace kpbench
