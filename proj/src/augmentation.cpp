#include "kpbench/augmentation.hpp"

#include <cmath>
#include <random>

#include "kpbench/error.hpp"

namespace kpbench {

namespace {

constexpr float kCenter = (float(kImageSize) - 1.0f) / 2.0f;  // 47.5

inline bool in_frame(float v) { return v >= 0.0f && v < float(kImageSize); }

inline std::uint8_t clamp_pixel(float v) {
    const long r = std::lround(v);
    return std::uint8_t(r < 0 ? 0 : (r > 255 ? 255 : r));
}

// Bilinear read with zero outside the frame.
float sample_bilinear(const Sample& s, float y, float x) {
    const int x0 = int(std::floor(x)), y0 = int(std::floor(y));
    const float fx = x - float(x0), fy = y - float(y0);
    float acc = 0;
    for (int dy = 0; dy <= 1; ++dy)
        for (int dx = 0; dx <= 1; ++dx) {
            const int yy = y0 + dy, xx = x0 + dx;
            if (yy < 0 || yy >= int(kImageSize) || xx < 0 || xx >= int(kImageSize)) continue;
            const float w = (dx ? fx : 1.0f - fx) * (dy ? fy : 1.0f - fy);
            acc += w * float(s.image[std::size_t(yy) * kImageSize + std::size_t(xx)]);
        }
    return acc;
}

}  // namespace

std::optional<Sample> rotate_sample(const Sample& s, float theta_degrees) {
    const float theta = theta_degrees * float(M_PI) / 180.0f;
    const float c = std::cos(theta), sn = std::sin(theta);

    Sample out = s;
    // Keypoints first: reject before paying for the image resample.
    for (std::size_t i = 0; i < kNumKeypoints; ++i) {
        const float dx = s.keypoints[2 * i] - kCenter;
        const float dy = s.keypoints[2 * i + 1] - kCenter;
        const float nx = kCenter + dx * c + dy * sn;
        const float ny = kCenter - dx * sn + dy * c;
        if (!in_frame(nx) || !in_frame(ny)) return std::nullopt;
        out.keypoints[2 * i] = nx;
        out.keypoints[2 * i + 1] = ny;
    }
    for (std::size_t y = 0; y < kImageSize; ++y)
        for (std::size_t x = 0; x < kImageSize; ++x) {
            const float dx = float(x) - kCenter, dy = float(y) - kCenter;
            const float sx = kCenter + dx * c - dy * sn;
            const float sy = kCenter + dx * sn + dy * c;
            out.image[y * kImageSize + x] = clamp_pixel(sample_bilinear(s, sy, sx));
        }
    return out;
}

std::optional<Sample> shift_sample(const Sample& s, float dx, float dy) {
    Sample out = s;
    for (std::size_t i = 0; i < kNumKeypoints; ++i) {
        const float nx = s.keypoints[2 * i] + dx;
        const float ny = s.keypoints[2 * i + 1] + dy;
        if (!in_frame(nx) || !in_frame(ny)) return std::nullopt;
        out.keypoints[2 * i] = nx;
        out.keypoints[2 * i + 1] = ny;
    }
    for (std::size_t y = 0; y < kImageSize; ++y)
        for (std::size_t x = 0; x < kImageSize; ++x)
            out.image[y * kImageSize + x] =
                clamp_pixel(sample_bilinear(s, float(y) - dy, float(x) - dx));
    return out;
}

Sample adjust_brightness(const Sample& s, float factor) {
    Sample out = s;
    for (auto& px : out.image) px = clamp_pixel(float(px) * factor);
    return out;
}

Sample add_gaussian_noise(const Sample& s, float sigma, std::uint64_t seed) {
    Sample out = s;
    if (sigma <= 0.0f) return out;
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> noise(0.0f, sigma);
    for (auto& px : out.image) px = clamp_pixel(float(px) + noise(rng));
    return out;
}

Dataset augment_offline(const Dataset& ds, const AugmentationSpec& spec) {
    for (const Sample& s : ds.samples)
        if (!s.complete())
            throw Error("augment_offline: input contains missing keypoints; "
                        "apply complete_subset first");

    Dataset out;
    out.samples.reserve(ds.size() * (1 + spec.per_sample_variants));
    for (std::size_t i = 0; i < ds.size(); ++i) {
        out.samples.push_back(ds.samples[i]);
        // Per-sample RNG stream so results are order-independent.
        std::mt19937_64 rng(spec.seed * 0x9e3779b97f4a7c15ULL + i + 1);
        std::uniform_real_distribution<float> rot(-spec.rotation_degrees, spec.rotation_degrees);
        std::uniform_real_distribution<float> shf(-spec.shift_pixels, spec.shift_pixels);
        std::uniform_real_distribution<float> bri(1.0f - spec.brightness_delta,
                                                  1.0f + spec.brightness_delta);
        std::uniform_real_distribution<float> sig(0.0f, spec.noise_sigma_max);
        for (std::size_t v = 0; v < spec.per_sample_variants; ++v) {
            const float theta = rot(rng), dx = shf(rng), dy = shf(rng);
            const float factor = bri(rng), sigma = sig(rng);
            const std::uint64_t noise_seed = rng();
            auto rotated = rotate_sample(ds.samples[i], theta);
            if (!rotated) continue;
            auto shifted = shift_sample(*rotated, dx, dy);
            if (!shifted) continue;
            out.samples.push_back(
                add_gaussian_noise(adjust_brightness(*shifted, factor), sigma, noise_seed));
        }
    }
    for (std::size_t i = 0; i < out.samples.size(); ++i)
        out.samples[i].image_id = int(i) + 1;
    return out;
}

}  // namespace kpbench
