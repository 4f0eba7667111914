#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "wcluster/camera.hpp"
#include "wcluster/common.hpp"
#include "wcluster/keyvalue.hpp"
#include "wcluster/png_io.hpp"

namespace wcluster {

/// Color and depth aligned on the depth grid. Depth is in meters, 0 = invalid.
struct RgbdFrame {
    Grid<double> depth;
    Grid<Rgb> color;
    std::size_t frame_index = 0;

    std::size_t width() const noexcept { return depth.width(); }
    std::size_t height() const noexcept { return depth.height(); }

    void validate() const {
        if (depth.width() != color.width() || depth.height() != color.height()) {
            throw DatasetError(DatasetError::Kind::DimensionMismatch, "color and depth rasters differ in size");
        }
        for (double d : depth.data()) {
            if (!std::isfinite(d) || d < 0.0) {
                throw DatasetError(DatasetError::Kind::Format, "depth values must be finite and non-negative");
            }
        }
    }
};

/// A frame pair as stored on disk; color may still be at color-sensor resolution.
struct RawFrame {
    Grid<Rgb> color;
    Grid<double> depth;
    std::size_t frame_index = 0;
};

struct FrameEntry {
    std::string color_path;
    std::string depth_path;
    std::optional<std::string> labels_path;
};

struct DatasetManifest {
    CameraIntrinsics intrinsics;
    bool pre_aligned = false;
    std::vector<FrameEntry> frames;
    std::filesystem::path base_dir; // relative frame paths resolve against this

    std::size_t frame_count() const noexcept { return frames.size(); }

    std::filesystem::path resolve(const std::string& p) const {
        const std::filesystem::path path(p);
        return path.is_absolute() ? path : base_dir / path;
    }

    bool has_labels() const noexcept {
        return !frames.empty() && std::all_of(frames.begin(), frames.end(),
                                              [](const FrameEntry& f) { return f.labels_path.has_value(); });
    }
};

namespace detail {

inline std::size_t manifest_size(const KeyValue& kv) {
    const auto v = to_integer(kv.value);
    if (!v || *v < 0) {
        throw DatasetError(DatasetError::Kind::Format,
                           "manifest line " + std::to_string(kv.line) + ": " + kv.key + " must be a non-negative integer");
    }
    return std::size_t(*v);
}

inline double manifest_double(const KeyValue& kv) {
    const auto v = to_double(kv.value);
    if (!v) {
        throw DatasetError(DatasetError::Kind::Format,
                           "manifest line " + std::to_string(kv.line) + ": " + kv.key + " must be a number");
    }
    return *v;
}

} // namespace detail

inline DatasetManifest parse_manifest(const std::vector<KeyValue>& kvs, std::filesystem::path base_dir) {
    DatasetManifest m;
    m.base_dir = std::move(base_dir);
    for (const auto& kv : kvs) {
        if (kv.key == "fov_x") {
            m.intrinsics.fov_x = detail::manifest_double(kv);
        } else if (kv.key == "fov_y") {
            m.intrinsics.fov_y = detail::manifest_double(kv);
        } else if (kv.key == "fov_preset") {
            const auto fov = fov_of(parse_fov_preset(kv.value));
            m.intrinsics.fov_x = fov.x;
            m.intrinsics.fov_y = fov.y;
        } else if (kv.key == "depth_width") {
            m.intrinsics.depth_width = detail::manifest_size(kv);
        } else if (kv.key == "depth_height") {
            m.intrinsics.depth_height = detail::manifest_size(kv);
        } else if (kv.key == "color_width") {
            m.intrinsics.color_width = detail::manifest_size(kv);
        } else if (kv.key == "color_height") {
            m.intrinsics.color_height = detail::manifest_size(kv);
        } else if (kv.key == "pre_aligned") {
            const auto b = to_bool(kv.value);
            if (!b) {
                throw DatasetError(DatasetError::Kind::Format, "manifest: pre_aligned must be true or false");
            }
            m.pre_aligned = *b;
        } else if (kv.key == "frame") {
            const auto parts = split(kv.value, ',');
            if (parts.size() < 2 || parts.size() > 3 || parts[0].empty() || parts[1].empty()) {
                throw DatasetError(DatasetError::Kind::Format,
                                   "manifest line " + std::to_string(kv.line) +
                                       ": frame expects color_path,depth_path[,labels_path]");
            }
            FrameEntry e{parts[0], parts[1], std::nullopt};
            if (parts.size() == 3 && !parts[2].empty()) {
                e.labels_path = parts[2];
            }
            m.frames.push_back(std::move(e));
        } else {
            throw DatasetError(DatasetError::Kind::Format,
                               "manifest line " + std::to_string(kv.line) + ": unknown key '" + kv.key + "'");
        }
    }
    if (m.frames.empty()) {
        throw DatasetError(DatasetError::Kind::Format, "manifest lists no frames");
    }
    try {
        m.intrinsics.validate();
    } catch (const ConfigError& e) {
        throw DatasetError(DatasetError::Kind::Format, std::string("manifest intrinsics: ") + e.what());
    }
    return m;
}

inline DatasetManifest load_manifest(const std::filesystem::path& path) {
    return parse_manifest(read_key_value_file(path.string()), path.parent_path());
}

inline void save_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw DatasetError(DatasetError::Kind::Io, "cannot write " + path.string());
    }
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    out << "fov_x = " << m.intrinsics.fov_x << "\n"
        << "fov_y = " << m.intrinsics.fov_y << "\n"
        << "depth_width = " << m.intrinsics.depth_width << "\n"
        << "depth_height = " << m.intrinsics.depth_height << "\n"
        << "color_width = " << m.intrinsics.color_width << "\n"
        << "color_height = " << m.intrinsics.color_height << "\n"
        << "pre_aligned = " << (m.pre_aligned ? "true" : "false") << "\n";
    for (const auto& f : m.frames) {
        out << "frame = " << f.color_path << "," << f.depth_path;
        if (f.labels_path) {
            out << "," << *f.labels_path;
        }
        out << "\n";
    }
}

inline Grid<double> depth_from_millimeters(const Grid<std::uint16_t>& mm) {
    Grid<double> out(mm.width(), mm.height());
    for (std::size_t i = 0; i < mm.size(); ++i) {
        out[i] = double(mm[i]) / 1000.0;
    }
    return out;
}

/// Rounds to the nearest millimeter; values beyond the 16-bit range become invalid (0).
inline Grid<std::uint16_t> depth_to_millimeters(const Grid<double>& meters) {
    Grid<std::uint16_t> out(meters.width(), meters.height());
    for (std::size_t i = 0; i < meters.size(); ++i) {
        const double mm = std::round(meters[i] * 1000.0);
        out[i] = (mm > 0.0 && mm <= 65535.0) ? std::uint16_t(mm) : std::uint16_t{0};
    }
    return out;
}

/// Loads frame `index`. Color comes back at depth resolution when the manifest
/// is pre-aligned, otherwise at color-sensor resolution (see map_color_to_depth).
inline RawFrame read_frame_pair(const DatasetManifest& manifest, std::size_t index) {
    if (index >= manifest.frame_count()) {
        throw DatasetError(DatasetError::Kind::OutOfRange, "frame index " + std::to_string(index) +
                                                               " out of range (" +
                                                               std::to_string(manifest.frame_count()) + " frames)");
    }
    const auto& entry = manifest.frames[index];
    const auto& intr = manifest.intrinsics;
    RawFrame frame;
    frame.frame_index = index;
    frame.depth = depth_from_millimeters(png::read_gray16(manifest.resolve(entry.depth_path).string()));
    frame.color = png::read_rgb(manifest.resolve(entry.color_path).string());
    if (frame.depth.width() != intr.depth_width || frame.depth.height() != intr.depth_height) {
        throw DatasetError(DatasetError::Kind::DimensionMismatch,
                           entry.depth_path + " is " + std::to_string(frame.depth.width()) + "x" +
                               std::to_string(frame.depth.height()) + " but the manifest declares " +
                               std::to_string(intr.depth_width) + "x" + std::to_string(intr.depth_height));
    }
    const std::size_t cw = manifest.pre_aligned ? intr.depth_width : intr.color_width;
    const std::size_t ch = manifest.pre_aligned ? intr.depth_height : intr.color_height;
    if (frame.color.width() != cw || frame.color.height() != ch) {
        throw DatasetError(DatasetError::Kind::DimensionMismatch,
                           entry.color_path + " is " + std::to_string(frame.color.width()) + "x" +
                               std::to_string(frame.color.height()) + " but " + std::to_string(cw) + "x" +
                               std::to_string(ch) + " was expected");
    }
    return frame;
}

inline LabelRaster read_truth_labels(const DatasetManifest& manifest, std::size_t index) {
    if (index >= manifest.frame_count()) {
        throw DatasetError(DatasetError::Kind::OutOfRange, "frame index out of range");
    }
    const auto& entry = manifest.frames[index];
    if (!entry.labels_path) {
        throw DatasetError(DatasetError::Kind::MissingFile, "frame " + std::to_string(index) + " has no labels");
    }
    return png::read_gray8(manifest.resolve(*entry.labels_path).string());
}

/// Nearest-neighbor source index for destination pixel `i` when resampling
/// `src` samples onto `dst` samples by a linear scale, clamped into range.
inline std::size_t rescale_index(std::size_t i, std::size_t dst, std::size_t src) noexcept {
    if (src == 0) {
        return 0;
    }
    const std::size_t j = dst == 0 ? 0 : (i * src) / dst;
    return std::min(j, src - 1);
}

/// Resamples `color` onto the depth grid with independent x/y scale factors.
inline RgbdFrame map_color_to_depth(const Grid<Rgb>& color, const Grid<double>& depth) {
    RgbdFrame out;
    out.depth = depth;
    out.color = Grid<Rgb>(depth.width(), depth.height());
    if (color.empty()) {
        return out;
    }
    for (std::size_t r = 0; r < depth.height(); ++r) {
        const std::size_t sr = rescale_index(r, depth.height(), color.height());
        for (std::size_t c = 0; c < depth.width(); ++c) {
            out.color.at(r, c) = color.at(sr, rescale_index(c, depth.width(), color.width()));
        }
    }
    return out;
}

/// Checked variant: rasters must match the sizes declared in `intrinsics`.
inline RgbdFrame map_color_to_depth(const Grid<Rgb>& color, const Grid<double>& depth,
                                    const CameraIntrinsics& intrinsics) {
    if (depth.width() != intrinsics.depth_width || depth.height() != intrinsics.depth_height) {
        throw DatasetError(DatasetError::Kind::DimensionMismatch, "depth raster does not match intrinsics");
    }
    const bool aligned = color.width() == depth.width() && color.height() == depth.height();
    if (!aligned && (color.width() != intrinsics.color_width || color.height() != intrinsics.color_height)) {
        throw DatasetError(DatasetError::Kind::DimensionMismatch, "color raster does not match intrinsics");
    }
    return map_color_to_depth(color, depth);
}

} // namespace wcluster
