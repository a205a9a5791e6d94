#include "kpbench/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "kpbench/error.hpp"

namespace kpbench {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    // No quoting in this schema; the Image cell is the only one with spaces.
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    cells.push_back(cur);
    return cells;
}

void parse_image_cell(const std::string& cell, std::size_t row, Sample& s) {
    std::size_t count = 0;
    std::size_t i = 0;
    const std::size_t n = cell.size();
    while (i < n) {
        while (i < n && cell[i] == ' ') ++i;
        if (i >= n) break;
        int v = 0;
        bool digits = false;
        while (i < n && cell[i] != ' ') {
            const char c = cell[i];
            if (c < '0' || c > '9')
                throw Error("row " + std::to_string(row) + ": non-integer pixel in Image cell");
            v = v * 10 + (c - '0');
            if (v > 255) throw Error("row " + std::to_string(row) + ": pixel value > 255");
            digits = true;
            ++i;
        }
        if (!digits) break;
        if (count >= kNumPixels)
            throw Error("row " + std::to_string(row) + ": more than " +
                        std::to_string(kNumPixels) + " pixels");
        s.image[count++] = std::uint8_t(v);
    }
    if (count != kNumPixels)
        throw Error("row " + std::to_string(row) + ": expected " + std::to_string(kNumPixels) +
                    " pixels, got " + std::to_string(count));
}

float parse_coord(const std::string& cell, std::size_t row, std::size_t col) {
    try {
        std::size_t pos = 0;
        const float v = std::stof(cell, &pos);
        if (pos != cell.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw Error("row " + std::to_string(row) + ": bad value '" + cell + "' in column " +
                    keypoint_names()[col]);
    }
}

std::string format_coord(float v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", double(v));
    return buf;
}

}  // namespace

bool Dataset::operator==(const Dataset& o) const {
    if (samples.size() != o.samples.size()) return false;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].image != o.samples[i].image) return false;
        for (std::size_t c = 0; c < kNumCoords; ++c) {
            const bool ha = samples[i].has(c), hb = o.samples[i].has(c);
            if (ha != hb) return false;
            if (ha && samples[i].keypoints[c] != o.samples[i].keypoints[c]) return false;
        }
    }
    return true;
}

const std::array<std::string, kNumCoords>& keypoint_names() {
    static const std::array<std::string, kNumCoords> names = [] {
        const char* landmarks[kNumKeypoints] = {
            "left_eye_center",        "right_eye_center",        "left_eye_inner_corner",
            "left_eye_outer_corner",  "right_eye_inner_corner",  "right_eye_outer_corner",
            "left_eyebrow_inner_end", "left_eyebrow_outer_end",  "right_eyebrow_inner_end",
            "right_eyebrow_outer_end", "nose_tip",               "mouth_left_corner",
            "mouth_right_corner",     "mouth_center_top_lip",    "mouth_center_bottom_lip"};
        std::array<std::string, kNumCoords> out;
        for (std::size_t i = 0; i < kNumKeypoints; ++i) {
            out[2 * i] = std::string(landmarks[i]) + "_x";
            out[2 * i + 1] = std::string(landmarks[i]) + "_y";
        }
        return out;
    }();
    return names;
}

Dataset parse_training_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error("training csv: missing header row");
    const auto header = split_csv_line(line);
    if (header.size() != kNumCoords + 1)
        throw Error("training csv: expected " + std::to_string(kNumCoords + 1) +
                    " columns, got " + std::to_string(header.size()));
    for (std::size_t c = 0; c < kNumCoords; ++c)
        if (header[c] != keypoint_names()[c])
            throw Error("training csv: column " + std::to_string(c) + " is '" + header[c] +
                        "', expected '" + keypoint_names()[c] + "'");
    if (header.back() != "Image") throw Error("training csv: last column must be 'Image'");

    Dataset ds;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != kNumCoords + 1)
            throw Error("row " + std::to_string(row) + ": expected " +
                        std::to_string(kNumCoords + 1) + " cells, got " +
                        std::to_string(cells.size()));
        Sample s;
        s.image_id = int(ds.samples.size()) + 1;
        for (std::size_t c = 0; c < kNumCoords; ++c)
            if (!cells[c].empty()) s.keypoints[c] = parse_coord(cells[c], row, c);
        parse_image_cell(cells.back(), row, s);
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

Dataset parse_test_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error("test csv: missing header row");
    const auto header = split_csv_line(line);
    if (header.size() != 2 || header[0] != "ImageId" || header[1] != "Image")
        throw Error("test csv: expected header 'ImageId,Image'");
    Dataset ds;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != 2)
            throw Error("row " + std::to_string(row) + ": expected 2 cells, got " +
                        std::to_string(cells.size()));
        Sample s;
        try {
            s.image_id = std::stoi(cells[0]);
        } catch (const std::exception&) {
            throw Error("row " + std::to_string(row) + ": bad ImageId '" + cells[0] + "'");
        }
        parse_image_cell(cells[1], row, s);
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

void write_training_csv(const Dataset& ds, std::ostream& out) {
    for (std::size_t c = 0; c < kNumCoords; ++c) out << keypoint_names()[c] << ',';
    out << "Image\n";
    for (const Sample& s : ds.samples) {
        for (std::size_t c = 0; c < kNumCoords; ++c) {
            if (s.has(c)) out << format_coord(s.keypoints[c]);
            out << ',';
        }
        for (std::size_t i = 0; i < kNumPixels; ++i) {
            if (i) out << ' ';
            out << int(s.image[i]);
        }
        out << '\n';
    }
}

Dataset load_training_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open dataset file: " + path);
    return parse_training_csv(f);
}

void save_training_csv(const Dataset& ds, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw Error("cannot write dataset file: " + path);
    write_training_csv(ds, f);
}

NullProfile null_profile(const Dataset& ds) {
    NullProfile p;
    p.total = ds.size();
    for (const Sample& s : ds.samples) {
        bool any_missing = false;
        for (std::size_t c = 0; c < kNumCoords; ++c)
            if (!s.has(c)) {
                ++p.per_column_missing[c];
                any_missing = true;
            }
        if (any_missing)
            ++p.with_missing;
        else
            ++p.complete;
    }
    return p;
}

Dataset complete_subset(const Dataset& ds) {
    Dataset out;
    for (const Sample& s : ds.samples)
        if (s.complete()) out.samples.push_back(s);
    return out;
}

Dataset synthesize_dataset(std::size_t n, std::uint64_t seed) {
    // Face layout template; all positions stay inside [8,88) after a global
    // shift of +-8 px and per-landmark jitter of +-2.5 px.
    static const float layout[kNumKeypoints][2] = {
        {62, 38}, {34, 38}, {56, 39}, {69, 39}, {40, 39}, {27, 39}, {54, 30}, {72, 30},
        {42, 30}, {24, 30}, {48, 54}, {60, 70}, {36, 70}, {48, 66}, {48, 75}};
    constexpr float sigma = 2.2f;
    constexpr int radius = 7;

    Dataset ds;
    ds.samples.reserve(n);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> shift(-8.0f, 8.0f);
    std::uniform_real_distribution<float> jitter(-2.5f, 2.5f);
    for (std::size_t i = 0; i < n; ++i) {
        Sample s;
        s.image_id = int(i) + 1;
        const float dx = shift(rng), dy = shift(rng);
        for (std::size_t kp = 0; kp < kNumKeypoints; ++kp) {
            s.keypoints[2 * kp] = layout[kp][0] + dx + jitter(rng);
            s.keypoints[2 * kp + 1] = layout[kp][1] + dy + jitter(rng);
        }
        // Max-blended Gaussian blobs, peak 255 at each keypoint center.
        for (std::size_t kp = 0; kp < kNumKeypoints; ++kp) {
            const float cx = s.keypoints[2 * kp], cy = s.keypoints[2 * kp + 1];
            const int x0 = std::max(0, int(cx) - radius), x1 = std::min(int(kImageSize) - 1, int(cx) + radius);
            const int y0 = std::max(0, int(cy) - radius), y1 = std::min(int(kImageSize) - 1, int(cy) + radius);
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    const float d2 = (float(x) - cx) * (float(x) - cx) + (float(y) - cy) * (float(y) - cy);
                    const int v = int(std::lround(255.0 * std::exp(-double(d2) / (2.0 * sigma * sigma))));
                    auto& px = s.image[std::size_t(y) * kImageSize + std::size_t(x)];
                    if (v > px) px = std::uint8_t(v);
                }
        }
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

Tensor to_input_tensor(const Dataset& ds, std::size_t start, std::size_t count) {
    if (start + count > ds.size()) throw Error("to_input_tensor: range out of bounds");
    Tensor x({count, 1, kImageSize, kImageSize});
    for (std::size_t i = 0; i < count; ++i) {
        const auto& img = ds.samples[start + i].image;
        float* dst = x.ptr() + i * kNumPixels;
        for (std::size_t p = 0; p < kNumPixels; ++p) dst[p] = normalize_pixel(img[p]);
    }
    return x;
}

void to_target_tensors(const Dataset& ds, std::size_t start, std::size_t count, Tensor& targets,
                       Tensor& mask) {
    if (start + count > ds.size()) throw Error("to_target_tensors: range out of bounds");
    targets = Tensor({count, kNumCoords});
    mask = Tensor({count, kNumCoords});
    for (std::size_t i = 0; i < count; ++i) {
        const Sample& s = ds.samples[start + i];
        for (std::size_t c = 0; c < kNumCoords; ++c) {
            if (s.has(c)) {
                targets.at(i, c) = normalize_coord(s.keypoints[c]);
                mask.at(i, c) = 1.0f;
            }
        }
    }
}

}  // namespace kpbench
