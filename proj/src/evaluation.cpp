#include "kpbench/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "kpbench/error.hpp"
#include "kpbench/kernels.hpp"

namespace kpbench {

double rmse(const Tensor& pred_px, const Tensor& target_px, const Tensor& mask) {
    if (!pred_px.same_shape(target_px) || !pred_px.same_shape(mask))
        throw Error("rmse: shape mismatch");
    double se = 0, m = 0;
    for (std::size_t i = 0; i < pred_px.size(); ++i)
        if (mask.data[i] != 0.0f) {
            const double d = double(pred_px.data[i]) - double(target_px.data[i]);
            se += d * d;
            m += 1.0;
        }
    if (m == 0.0) throw Error("rmse: mask selects no coordinates");
    return std::sqrt(se / m);
}

Tensor predict_batch(const Model& m, const Dataset& ds, std::size_t batch_size) {
    if (batch_size < 1) throw Error("predict_batch: batch size must be >= 1");
    if (ds.size() == 0) return Tensor{};
    Tensor out({ds.size(), kNumCoords});
    for (std::size_t b = 0; b < ds.size(); b += batch_size) {
        const std::size_t n = std::min(batch_size, ds.size() - b);
        Tensor x = to_input_tensor(ds, b, n);
        Tensor pred = forward(m, x);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < kNumCoords; ++c)
                out.at(b + i, c) = denormalize_coord(pred.at(i, c));
    }
    return out;
}

double measure_seconds_per_100(std::size_t n_images, std::size_t warmup, std::size_t reps,
                               const std::function<void()>& pass,
                               const std::function<double()>& now) {
    if (n_images == 0) throw Error("measure_seconds_per_100: empty dataset");
    if (reps < 3) throw Error("measure_seconds_per_100: need at least 3 repetitions");
    for (std::size_t i = 0; i < warmup; ++i) pass();
    std::vector<double> per_image(reps);
    for (std::size_t r = 0; r < reps; ++r) {
        const double t0 = now();
        pass();
        per_image[r] = (now() - t0) / double(n_images);
    }
    std::sort(per_image.begin(), per_image.end());
    const double median = reps % 2 ? per_image[reps / 2]
                                   : 0.5 * (per_image[reps / 2 - 1] + per_image[reps / 2]);
    return median * 100.0;
}

double measure_inference_time(const Model& m, const Dataset& ds, std::size_t warmup,
                              std::size_t reps, std::size_t batch_size) {
    if (ds.size() == 0) throw Error("measure_inference_time: empty dataset");
    return measure_seconds_per_100(
        ds.size(), warmup, reps, [&] { predict_batch(m, ds, batch_size); },
        [] {
            return std::chrono::duration<double>(
                       std::chrono::steady_clock::now().time_since_epoch())
                .count();
        });
}

std::string hardware_descriptor() {
    std::string cpu = "unknown-cpu";
    std::ifstream f("/proc/cpuinfo");
    std::string line;
    while (std::getline(f, line)) {
        if (line.rfind("model name", 0) == 0) {
            const auto pos = line.find(':');
            if (pos != std::string::npos) {
                cpu = line.substr(pos + 2);
                break;
            }
        }
    }
    // Semicolons keep the descriptor CSV-safe.
    for (char& c : cpu)
        if (c == ',') c = ';';
    return cpu + " / " + std::to_string(std::thread::hardware_concurrency()) + " threads / " +
           kernels::isa_name(kernels::active_isa());
}

namespace {

const char* kHeader =
    "model,impute,augment,params_trainable,params_total,size_bytes,rmse_px,sec_per_100,warmup,"
    "reps,hardware";

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

void write_report_csv(const std::vector<BenchRow>& rows, std::ostream& out) {
    out << kHeader << '\n';
    char buf[512];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%s,%s,%zu,%zu,%zu,%.9g,%.9g,%zu,%zu,%s\n",
                      r.model.c_str(), r.impute.c_str(), r.augment.c_str(), r.params_trainable,
                      r.params_total, r.size_bytes, r.rmse_px, r.sec_per_100, r.warmup, r.reps,
                      r.hardware.c_str());
        out << buf;
    }
}

std::vector<BenchRow> parse_report_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error("report csv: missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kHeader) throw Error("report csv: unexpected header '" + line + "'");
    std::vector<BenchRow> rows;
    std::size_t rowno = 1;
    while (std::getline(in, line)) {
        ++rowno;
        if (line.empty() || line == "\r") continue;
        const auto cells = split(line, ',');
        if (cells.size() != 11)
            throw Error("report csv row " + std::to_string(rowno) + ": expected 11 cells, got " +
                        std::to_string(cells.size()));
        try {
            BenchRow r;
            r.model = cells[0];
            r.impute = cells[1];
            r.augment = cells[2];
            r.params_trainable = std::stoul(cells[3]);
            r.params_total = std::stoul(cells[4]);
            r.size_bytes = std::stoul(cells[5]);
            r.rmse_px = std::stod(cells[6]);
            r.sec_per_100 = std::stod(cells[7]);
            r.warmup = std::stoul(cells[8]);
            r.reps = std::stoul(cells[9]);
            r.hardware = cells[10];
            rows.push_back(std::move(r));
        } catch (const std::exception&) {
            throw Error("report csv row " + std::to_string(rowno) + ": bad numeric cell");
        }
    }
    return rows;
}

void save_report_csv(const std::vector<BenchRow>& rows, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw Error("cannot write report file: " + path);
    write_report_csv(rows, f);
}

std::vector<BenchRow> load_report_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open report file: " + path);
    return parse_report_csv(f);
}

std::string format_report_table(const std::vector<BenchRow>& rows) {
    std::ostringstream os;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-12s %-12s %-7s %12s %12s %8s %9s %11s\n", "model",
                  "impute", "augment", "trainable", "total", "MB", "rmse_px", "sec_per_100");
    os << buf;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%-12s %-12s %-7s %12zu %12zu %8.2f %9.3f %11.3f\n",
                      r.model.c_str(), r.impute.c_str(), r.augment.c_str(), r.params_trainable,
                      r.params_total, double(r.size_bytes) / 1e6, r.rmse_px, r.sec_per_100);
        os << buf;
    }
    return os.str();
}

}  // namespace kpbench
