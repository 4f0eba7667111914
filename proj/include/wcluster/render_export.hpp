#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <deque>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "wcluster/cluster.hpp"
#include "wcluster/common.hpp"
#include "wcluster/png_io.hpp"
#include "wcluster/preprocess.hpp"

namespace wcluster {

/// Convex blend sum_i palette[i] * mu[i] per channel, rounded half away from
/// zero and clamped to [0, 255]. All-zero weights give black.
inline Rgb blend_colors(std::span<const double> mu, std::span<const Rgb> palette) {
    double r = 0.0;
    double g = 0.0;
    double b = 0.0;
    for (std::size_t i = 0; i < mu.size() && i < palette.size(); ++i) {
        r += double(palette[i].r) * mu[i];
        g += double(palette[i].g) * mu[i];
        b += double(palette[i].b) * mu[i];
    }
    auto channel = [](double v) { return std::uint8_t(std::clamp(std::round(v), 0.0, 255.0)); };
    return {channel(r), channel(g), channel(b)};
}

inline std::vector<Rgb> display_colors(std::span<const Centroid> centroids) {
    std::vector<Rgb> out;
    out.reserve(centroids.size());
    for (const auto& c : centroids) {
        out.push_back(c.display);
    }
    return out;
}

struct ColoredPoint {
    float x = 0.0f;
    float y = 0.0f;
    float z = 0.0f;
    Rgb color;

    bool operator==(const ColoredPoint&) const = default;
};

struct ColoredCloud {
    std::vector<ColoredPoint> points;
    std::size_t frame_index = 0;
};

/// Valid points of `cloud` colored by their blended cluster weights.
inline ColoredCloud colorize(const OrganizedCloud& cloud, const WeightState& state, std::span<const Rgb> palette) {
    ColoredCloud out;
    out.frame_index = cloud.frame_index;
    out.points.reserve(cloud.valid_count());
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        const auto& p = cloud.points[i];
        if (!p.valid) {
            continue;
        }
        out.points.push_back({float(p.position.x), float(p.position.y), float(p.position.z),
                              blend_colors(state.mu(i), palette)});
    }
    return out;
}

namespace detail {

inline void append_float(std::string& line, float v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    line.append(buf, res.ptr);
}

} // namespace detail

/// ASCII PLY with float xyz and uchar rgb. Floats use shortest round-trip form.
inline void export_ply(const ColoredCloud& cloud, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DatasetError(DatasetError::Kind::Io, "cannot write " + path);
    }
    out << "ply\n"
        << "format ascii 1.0\n"
        << "element vertex " << cloud.points.size() << "\n"
        << "property float x\n"
        << "property float y\n"
        << "property float z\n"
        << "property uchar red\n"
        << "property uchar green\n"
        << "property uchar blue\n"
        << "end_header\n";
    std::string line;
    for (const auto& p : cloud.points) {
        line.clear();
        detail::append_float(line, p.x);
        line += ' ';
        detail::append_float(line, p.y);
        line += ' ';
        detail::append_float(line, p.z);
        line += ' ';
        line += std::to_string(p.color.r);
        line += ' ';
        line += std::to_string(p.color.g);
        line += ' ';
        line += std::to_string(p.color.b);
        line += '\n';
        out << line;
    }
    if (!out) {
        throw DatasetError(DatasetError::Kind::Io, "failed writing " + path);
    }
}

/// Argmax labels of currently valid cells; kNoLabel elsewhere.
inline LabelRaster label_raster(const OrganizedCloud& cloud, const WeightState& state) {
    if (state.k() > 254) {
        throw ConfigError("8-bit label rasters hold at most 254 clusters");
    }
    LabelRaster out(cloud.width, cloud.height, kNoLabel);
    for (std::size_t i = 0; i < cloud.points.size() && i < state.size(); ++i) {
        const auto label = state.label(i);
        if (cloud.points[i].valid && label != kUnlabeled) {
            out[i] = std::uint8_t(label);
        }
    }
    return out;
}

inline void export_labels(const LabelRaster& labels, const std::string& path) { png::write_gray8(path, labels); }

inline void export_labels(const OrganizedCloud& cloud, const WeightState& state, const std::string& path) {
    export_labels(label_raster(cloud, state), path);
}

struct PixelCoord {
    std::size_t row = 0;
    std::size_t col = 0;
};

struct ObjectMask {
    Grid<std::uint8_t> mask; // 1 inside the object
    std::uint8_t cluster_id = 0;
    PixelCoord seed;

    std::size_t area() const noexcept {
        return std::size_t(std::count(mask.data().begin(), mask.data().end(), std::uint8_t{1}));
    }
};

/// 8-connected region of pixels sharing the seed pixel's label.
inline ObjectMask extract_object_mask(const LabelRaster& labels, PixelCoord seed) {
    if (seed.row >= labels.height() || seed.col >= labels.width()) {
        throw InvalidSeed("seed pixel lies outside the raster");
    }
    const std::uint8_t id = labels.at(seed.row, seed.col);
    if (id == kNoLabel) {
        throw InvalidSeed("seed pixel is invalid or unlabeled");
    }
    ObjectMask result{Grid<std::uint8_t>(labels.width(), labels.height(), 0), id, seed};
    std::deque<PixelCoord> queue{seed};
    result.mask.at(seed.row, seed.col) = 1;
    while (!queue.empty()) {
        const PixelCoord p = queue.front();
        queue.pop_front();
        for (int dr = -1; dr <= 1; ++dr) {
            for (int dc = -1; dc <= 1; ++dc) {
                if (dr == 0 && dc == 0) {
                    continue;
                }
                const auto r = std::ptrdiff_t(p.row) + dr;
                const auto c = std::ptrdiff_t(p.col) + dc;
                if (r < 0 || c < 0 || r >= std::ptrdiff_t(labels.height()) || c >= std::ptrdiff_t(labels.width())) {
                    continue;
                }
                if (result.mask.at(std::size_t(r), std::size_t(c)) == 0 &&
                    labels.at(std::size_t(r), std::size_t(c)) == id) {
                    result.mask.at(std::size_t(r), std::size_t(c)) = 1;
                    queue.push_back({std::size_t(r), std::size_t(c)});
                }
            }
        }
    }
    return result;
}

inline ObjectMask extract_object_mask(const OrganizedCloud& cloud, const WeightState& state, PixelCoord seed) {
    return extract_object_mask(label_raster(cloud, state), seed);
}

/// Mask as an 8-bit PNG with 255 marking object pixels.
inline void export_mask(const ObjectMask& mask, const std::string& path) {
    Grid<std::uint8_t> img(mask.mask.width(), mask.mask.height(), 0);
    for (std::size_t i = 0; i < img.size(); ++i) {
        img[i] = mask.mask[i] != 0 ? 255 : 0;
    }
    png::write_gray8(path, img);
}

} // namespace wcluster
