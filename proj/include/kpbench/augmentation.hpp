#pragma once

#include <cstdint>
#include <optional>

#include "kpbench/dataset.hpp"

namespace kpbench {

struct AugmentationSpec {
    float rotation_degrees = 15.0f;   // rotation drawn from +- this
    float shift_pixels = 8.0f;        // per-axis shift drawn from +- this
    float brightness_delta = 0.3f;    // factor drawn from [1-d, 1+d]
    float noise_sigma_max = 12.0f;    // sigma drawn from [0, max]
    std::size_t per_sample_variants = 4;
    std::uint64_t seed = 0;
};

// Counter-clockwise rotation about the image center (47.5, 47.5), bilinear
// sampling, zero fill. Keypoints follow the same map; a variant whose
// keypoints leave [0,96) is rejected (nullopt), never clamped.
std::optional<Sample> rotate_sample(const Sample& s, float theta_degrees);

std::optional<Sample> shift_sample(const Sample& s, float dx, float dy);

// pixel' = clamp(round(pixel * factor), 0, 255); keypoints untouched.
Sample adjust_brightness(const Sample& s, float factor);

Sample add_gaussian_noise(const Sample& s, float sigma, std::uint64_t seed);

// Originals plus up to per_sample_variants accepted random variants each.
// Input must be complete-case. Deterministic per (dataset, spec).
Dataset augment_offline(const Dataset& ds, const AugmentationSpec& spec);

}  // namespace kpbench
