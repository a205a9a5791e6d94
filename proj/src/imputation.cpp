#include "kpbench/imputation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "kpbench/error.hpp"

namespace kpbench {

Dataset forward_fill(const Dataset& ds) {
    Dataset out = ds;
    for (std::size_t c = 0; c < kNumCoords; ++c) {
        double sum = 0;
        std::size_t present = 0;
        for (const Sample& s : ds.samples)
            if (s.has(c)) {
                sum += s.keypoints[c];
                ++present;
            }
        if (present == 0) {
            if (!ds.samples.empty())
                throw Error("forward_fill: column " + keypoint_names()[c] +
                            " has no present values");
            continue;
        }
        const float mean = float(sum / double(present));
        float last = mean;  // leading gaps take the column mean
        bool seen = false;
        for (Sample& s : out.samples) {
            if (s.has(c)) {
                last = s.keypoints[c];
                seen = true;
            } else {
                s.keypoints[c] = seen ? last : mean;
            }
        }
    }
    return out;
}

Dataset knn_impute(const Dataset& ds, std::size_t k) {
    if (k < 1) throw Error("knn_impute: k must be >= 1");
    const std::size_t n = ds.size();
    Dataset out = ds;

    for (std::size_t i = 0; i < n; ++i) {
        const Sample& row = ds.samples[i];
        if (row.complete()) continue;

        // Missing-aware distance to every other row, over the original data.
        std::vector<std::pair<double, std::size_t>> dist;
        dist.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const Sample& other = ds.samples[j];
            double d2 = 0;
            std::size_t shared = 0;
            for (std::size_t c = 0; c < kNumCoords; ++c)
                if (row.has(c) && other.has(c)) {
                    const double d = double(row.keypoints[c]) - double(other.keypoints[c]);
                    d2 += d * d;
                    ++shared;
                }
            if (shared == 0) continue;
            dist.emplace_back(std::sqrt(d2 * double(kNumCoords) / double(shared)), j);
        }
        if (dist.empty())
            throw Error("knn_impute: row " + std::to_string(i + 1) +
                        " shares no coordinates with any other row");
        std::stable_sort(dist.begin(), dist.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });

        for (std::size_t c = 0; c < kNumCoords; ++c) {
            if (row.has(c)) continue;
            double sum = 0;
            std::size_t taken = 0;
            for (const auto& [d, j] : dist) {
                if (!ds.samples[j].has(c)) continue;
                sum += ds.samples[j].keypoints[c];
                if (++taken == k) break;
            }
            if (taken < k)
                throw Error("knn_impute: fewer than k=" + std::to_string(k) +
                            " donor rows for column " + keypoint_names()[c]);
            out.samples[i].keypoints[c] = float(sum / double(taken));
        }
    }
    return out;
}

}  // namespace kpbench
