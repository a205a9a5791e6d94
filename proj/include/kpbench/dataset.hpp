#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "kpbench/tensor.hpp"

namespace kpbench {

inline constexpr std::size_t kImageSize = 96;
inline constexpr std::size_t kNumPixels = kImageSize * kImageSize;
inline constexpr std::size_t kNumKeypoints = 15;
inline constexpr std::size_t kNumCoords = 2 * kNumKeypoints;

// One 96x96 grayscale face with 15 optionally-missing (x,y) keypoints in
// pixel units, origin top-left. Missing coordinates are NaN.
struct Sample {
    std::array<std::uint8_t, kNumPixels> image{};
    std::array<float, kNumCoords> keypoints{};
    int image_id = 0;

    Sample() { keypoints.fill(std::nanf("")); }

    bool has(std::size_t coord) const { return !std::isnan(keypoints[coord]); }
    bool complete() const {
        for (std::size_t i = 0; i < kNumCoords; ++i)
            if (!has(i)) return false;
        return true;
    }
    std::uint8_t pixel(std::size_t y, std::size_t x) const { return image[y * kImageSize + x]; }
};

struct Dataset {
    std::vector<Sample> samples;

    std::size_t size() const { return samples.size(); }
    bool operator==(const Dataset& o) const;
};

// The 30 coordinate column names of the public schema, alternating _x/_y.
const std::array<std::string, kNumCoords>& keypoint_names();

struct NullProfile {
    std::size_t total = 0;
    std::size_t complete = 0;
    std::size_t with_missing = 0;
    std::array<std::size_t, kNumCoords> per_column_missing{};
};

// Training CSV: header of 30 keypoint columns + Image; Image cell holds
// 9216 space-separated integers in [0,255], row-major.
Dataset parse_training_csv(std::istream& in);
// Test CSV: ImageId,Image; all keypoints come back missing.
Dataset parse_test_csv(std::istream& in);
void write_training_csv(const Dataset& ds, std::ostream& out);

Dataset load_training_csv(const std::string& path);
void save_training_csv(const Dataset& ds, const std::string& path);

NullProfile null_profile(const Dataset& ds);
Dataset complete_subset(const Dataset& ds);

// Deterministic synthetic faces: bright Gaussian blobs rendered at the
// generative keypoint positions, so ground truth is exact by construction.
Dataset synthesize_dataset(std::size_t n, std::uint64_t seed);

// Model space: pixels in [0,1], coordinates in [-1,1] via (v-48)/48.
inline float normalize_pixel(std::uint8_t p) { return float(p) / 255.0f; }
inline float normalize_coord(float v) { return (v - 48.0f) / 48.0f; }
inline float denormalize_coord(float v) { return v * 48.0f + 48.0f; }

// Batch [start, start+count) as a (count,1,96,96) input tensor.
Tensor to_input_tensor(const Dataset& ds, std::size_t start, std::size_t count);
// Normalized targets plus a presence mask (1 = coordinate available).
void to_target_tensors(const Dataset& ds, std::size_t start, std::size_t count, Tensor& targets,
                       Tensor& mask);

}  // namespace kpbench
