#pragma once

// Ray-cast renderer for labeled synthetic RGB-D sequences. Depth is the camera
// z of the first surface hit along the pixel ray, so back-projection of the
// rendered depth lands exactly on the primitive surfaces.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "wcluster/camera.hpp"
#include "wcluster/common.hpp"
#include "wcluster/frame_io.hpp"
#include "wcluster/keyvalue.hpp"
#include "wcluster/png_io.hpp"
#include "wcluster/projection.hpp"

namespace wcluster {

enum class PrimitiveKind { Sphere, Box, Plane };

/// Offset of a primitive from its base position at a given frame.
struct Keyframe {
    std::size_t frame = 0;
    Vec3 offset;
};

struct Primitive {
    PrimitiveKind kind = PrimitiveKind::Sphere;
    Vec3 center;
    Vec3 extent{0.1, 0.1, 0.1}; // sphere: radius in x; box: half sizes; plane: disk radius in x
    Vec3 normal{0.0, 0.0, -1.0}; // planes only
    Rgb color{255, 255, 255};
    std::vector<Keyframe> path; // sorted by frame; piecewise linear, held constant outside

    Vec3 offset_at(std::size_t frame) const {
        if (path.empty()) {
            return {};
        }
        if (frame <= path.front().frame) {
            return path.front().offset;
        }
        for (std::size_t i = 1; i < path.size(); ++i) {
            if (frame <= path[i].frame) {
                const auto& a = path[i - 1];
                const auto& b = path[i];
                const double t = double(frame - a.frame) / double(b.frame - a.frame);
                return a.offset + (b.offset - a.offset) * t;
            }
        }
        return path.back().offset;
    }

    Vec3 center_at(std::size_t frame) const { return center + offset_at(frame); }
};

struct SyntheticSceneSpec {
    std::vector<Primitive> objects;
    std::optional<double> background_depth = 3.0; // fronto-parallel wall, label = background
    Rgb background_color{128, 128, 128};
    std::size_t frame_count = 1;
    double depth_noise = 0.0; // meters, Gaussian stddev
    double color_noise = 0.0; // per channel, Gaussian stddev

    void validate() const {
        if (frame_count < 1) {
            throw ConfigError("scene needs at least one frame");
        }
        if (objects.size() > 254) {
            throw ConfigError("at most 254 objects fit the 8-bit label encoding");
        }
        if (!(depth_noise >= 0.0) || !(color_noise >= 0.0)) {
            throw ConfigError("noise standard deviations must be non-negative");
        }
        if (background_depth && !(*background_depth > 0.0)) {
            throw ConfigError("background depth must be positive");
        }
        for (const auto& o : objects) {
            const bool positive = o.kind == PrimitiveKind::Box
                                      ? (o.extent.x > 0.0 && o.extent.y > 0.0 && o.extent.z > 0.0)
                                      : o.extent.x > 0.0;
            if (!positive) {
                throw ConfigError("primitive extents must be positive");
            }
            if (o.kind == PrimitiveKind::Plane && !(squared_norm(o.normal) > 0.0)) {
                throw ConfigError("plane normal must be non-zero");
            }
            for (std::size_t i = 1; i < o.path.size(); ++i) {
                if (o.path[i].frame <= o.path[i - 1].frame) {
                    throw ConfigError("trajectory keyframes must have strictly increasing frames");
                }
            }
            for (std::size_t f = 0; f < frame_count; ++f) {
                const Vec3 c = o.center_at(f);
                const double reach = o.kind == PrimitiveKind::Box ? o.extent.z : o.extent.x;
                if (c.z + reach <= 0.0) {
                    throw ConfigError("object lies entirely behind the camera at frame " + std::to_string(f));
                }
            }
        }
    }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Standard normal sample keyed by (seed, frame, pixel, channel).
inline double keyed_gaussian(std::uint64_t seed, std::uint64_t frame, std::uint64_t pixel,
                             std::uint64_t channel) noexcept {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ frame);
    h = splitmix64(h ^ pixel);
    h = splitmix64(h ^ channel);
    const std::uint64_t h2 = splitmix64(h);
    const double u1 = (double(h >> 11) + 1.0) * 0x1.0p-53; // (0, 1]
    const double u2 = double(h2 >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Smallest positive ray parameter t (camera z, since ray.z == 1) of a hit.
inline std::optional<double> intersect(const Primitive& p, const Vec3& center, const Vec3& ray) {
    constexpr double eps = 1e-12;
    switch (p.kind) {
    case PrimitiveKind::Sphere: {
        const double a = dot(ray, ray);
        const double b = dot(ray, center);
        const double c = dot(center, center) - p.extent.x * p.extent.x;
        const double disc = b * b - a * c;
        if (disc < 0.0) {
            return std::nullopt;
        }
        const double s = std::sqrt(disc);
        const double t0 = (b - s) / a;
        const double t1 = (b + s) / a;
        if (t0 > eps) {
            return t0;
        }
        if (t1 > eps) {
            return t1;
        }
        return std::nullopt;
    }
    case PrimitiveKind::Box: {
        double t_near = -std::numeric_limits<double>::infinity();
        double t_far = std::numeric_limits<double>::infinity();
        const double o[3] = {ray.x, ray.y, ray.z};
        const double lo[3] = {center.x - p.extent.x, center.y - p.extent.y, center.z - p.extent.z};
        const double hi[3] = {center.x + p.extent.x, center.y + p.extent.y, center.z + p.extent.z};
        for (int i = 0; i < 3; ++i) {
            if (std::abs(o[i]) < eps) {
                if (0.0 < lo[i] || 0.0 > hi[i]) {
                    return std::nullopt;
                }
                continue;
            }
            double t1 = lo[i] / o[i];
            double t2 = hi[i] / o[i];
            if (t1 > t2) {
                std::swap(t1, t2);
            }
            t_near = std::max(t_near, t1);
            t_far = std::min(t_far, t2);
        }
        if (t_near > t_far || t_far <= eps) {
            return std::nullopt;
        }
        return t_near > eps ? t_near : t_far;
    }
    case PrimitiveKind::Plane: {
        const double denom = dot(p.normal, ray);
        if (std::abs(denom) < eps) {
            return std::nullopt;
        }
        const double t = dot(p.normal, center) / denom;
        if (!(t > eps)) {
            return std::nullopt;
        }
        if (squared_norm(ray * t - center) > p.extent.x * p.extent.x) {
            return std::nullopt;
        }
        return t;
    }
    }
    return std::nullopt;
}

inline std::uint8_t noisy_channel(std::uint8_t v, double noise) noexcept {
    return std::uint8_t(std::clamp(std::round(double(v) + noise), 0.0, 255.0));
}

} // namespace detail

struct SyntheticSequence {
    std::vector<RgbdFrame> frames;
    std::vector<LabelRaster> truth; // object i -> label i + 1, background/no hit -> 255
};

/// Pure function of (spec, intrinsics, seed).
inline SyntheticSequence generate_synthetic_scene(const SyntheticSceneSpec& spec, const CameraIntrinsics& intrinsics,
                                                  std::uint64_t seed) {
    spec.validate();
    if (intrinsics.depth_width == 0 || intrinsics.depth_height == 0) {
        throw ConfigError("zero-extent raster");
    }
    const Projection proj{intrinsics};
    const std::size_t w = intrinsics.depth_width;
    const std::size_t h = intrinsics.depth_height;

    SyntheticSequence seq;
    seq.frames.reserve(spec.frame_count);
    seq.truth.reserve(spec.frame_count);
    std::vector<Vec3> centers(spec.objects.size());
    for (std::size_t f = 0; f < spec.frame_count; ++f) {
        for (std::size_t i = 0; i < spec.objects.size(); ++i) {
            centers[i] = spec.objects[i].center_at(f);
        }
        RgbdFrame frame;
        frame.frame_index = f;
        frame.depth = Grid<double>(w, h, 0.0);
        frame.color = Grid<Rgb>(w, h);
        LabelRaster truth(w, h, kNoLabel);

        for (std::size_t r = 0; r < h; ++r) {
            for (std::size_t c = 0; c < w; ++c) {
                const Vec3 ray = proj.ray(double(c), double(r));
                double best = std::numeric_limits<double>::infinity();
                std::optional<std::size_t> hit;
                for (std::size_t i = 0; i < spec.objects.size(); ++i) {
                    const auto t = detail::intersect(spec.objects[i], centers[i], ray);
                    if (t && *t < best) {
                        best = *t;
                        hit = i;
                    }
                }
                Rgb color;
                if (hit) {
                    color = spec.objects[*hit].color;
                    truth.at(r, c) = std::uint8_t(*hit + 1);
                } else if (spec.background_depth) {
                    best = *spec.background_depth;
                    color = spec.background_color;
                } else {
                    continue;
                }
                const std::uint64_t pixel = r * w + c;
                if (spec.depth_noise > 0.0) {
                    best = std::max(best + spec.depth_noise * detail::keyed_gaussian(seed, f, pixel, 0), 1e-3);
                }
                if (spec.color_noise > 0.0) {
                    color = {detail::noisy_channel(color.r, spec.color_noise * detail::keyed_gaussian(seed, f, pixel, 1)),
                             detail::noisy_channel(color.g, spec.color_noise * detail::keyed_gaussian(seed, f, pixel, 2)),
                             detail::noisy_channel(color.b, spec.color_noise * detail::keyed_gaussian(seed, f, pixel, 3))};
                }
                frame.depth.at(r, c) = best;
                frame.color.at(r, c) = color;
            }
        }
        seq.frames.push_back(std::move(frame));
        seq.truth.push_back(std::move(truth));
    }
    return seq;
}

/// Scene description file: scene contents plus the camera and seed used to render it.
struct SceneFile {
    SyntheticSceneSpec spec;
    CameraIntrinsics intrinsics;
    std::uint64_t seed = 0;
};

namespace detail {

[[noreturn]] inline void scene_error(const KeyValue& kv, const std::string& msg) {
    throw ConfigError("scene line " + std::to_string(kv.line) + ": " + msg);
}

inline Rgb parse_rgb(const KeyValue& kv, std::string_view text) {
    const auto v = to_vec3(text);
    if (!v || v->x < 0 || v->x > 255 || v->y < 0 || v->y > 255 || v->z < 0 || v->z > 255) {
        scene_error(kv, "color must be r,g,b in [0,255]");
    }
    return {std::uint8_t(v->x), std::uint8_t(v->y), std::uint8_t(v->z)};
}

inline Vec3 parse_vec(const KeyValue& kv, std::string_view text) {
    const auto v = to_vec3(text);
    if (!v) {
        scene_error(kv, "expected x,y,z but got '" + std::string(text) + "'");
    }
    return *v;
}

inline double parse_num(const KeyValue& kv, std::string_view text) {
    const auto v = to_double(text);
    if (!v) {
        scene_error(kv, "expected a number but got '" + std::string(text) + "'");
    }
    return *v;
}

// object = <sphere|box|plane> key=value ...
inline Primitive parse_object(const KeyValue& kv) {
    std::vector<std::string> tokens;
    {
        std::istringstream in(kv.value);
        std::string tok;
        while (in >> tok) {
            tokens.push_back(tok);
        }
    }
    if (tokens.empty()) {
        scene_error(kv, "object needs a kind");
    }
    Primitive p;
    if (tokens[0] == "sphere") {
        p.kind = PrimitiveKind::Sphere;
    } else if (tokens[0] == "box") {
        p.kind = PrimitiveKind::Box;
    } else if (tokens[0] == "plane") {
        p.kind = PrimitiveKind::Plane;
    } else {
        scene_error(kv, "unknown primitive '" + tokens[0] + "'");
    }
    bool has_extent = false;
    for (std::size_t i = 1; i < tokens.size(); ++i) {
        const auto eq = tokens[i].find('=');
        if (eq == std::string::npos) {
            scene_error(kv, "expected key=value, got '" + tokens[i] + "'");
        }
        const std::string key = tokens[i].substr(0, eq);
        const std::string value = tokens[i].substr(eq + 1);
        if (key == "center") {
            p.center = parse_vec(kv, value);
        } else if (key == "color") {
            p.color = parse_rgb(kv, value);
        } else if (key == "radius" && p.kind != PrimitiveKind::Box) {
            const double r = parse_num(kv, value);
            p.extent = {r, r, r};
            has_extent = true;
        } else if (key == "half_extents" && p.kind == PrimitiveKind::Box) {
            p.extent = parse_vec(kv, value);
            has_extent = true;
        } else if (key == "normal" && p.kind == PrimitiveKind::Plane) {
            p.normal = parse_vec(kv, value);
        } else if (key == "path") {
            for (const auto& step : split(value, ';')) {
                const auto colon = step.find(':');
                const auto frame = colon == std::string::npos ? std::nullopt : to_integer(step.substr(0, colon));
                if (!frame || *frame < 0) {
                    scene_error(kv, "path entries are frame:x,y,z");
                }
                p.path.push_back({std::size_t(*frame), parse_vec(kv, step.substr(colon + 1))});
            }
        } else {
            scene_error(kv, "unknown object attribute '" + key + "'");
        }
    }
    if (!has_extent) {
        scene_error(kv, p.kind == PrimitiveKind::Box ? "box needs half_extents" : "object needs radius");
    }
    return p;
}

} // namespace detail

inline SceneFile parse_scene(const std::vector<KeyValue>& kvs) {
    SceneFile scene;
    scene.intrinsics.depth_width = 128;
    scene.intrinsics.depth_height = 106;
    for (const auto& kv : kvs) {
        if (kv.key == "object") {
            scene.spec.objects.push_back(detail::parse_object(kv));
        } else if (kv.key == "frame_count") {
            const auto v = to_integer(kv.value);
            if (!v || *v < 1) {
                detail::scene_error(kv, "frame_count must be a positive integer");
            }
            scene.spec.frame_count = std::size_t(*v);
        } else if (kv.key == "background_depth") {
            if (kv.value == "none") {
                scene.spec.background_depth.reset();
            } else {
                scene.spec.background_depth = detail::parse_num(kv, kv.value);
            }
        } else if (kv.key == "background_color") {
            scene.spec.background_color = detail::parse_rgb(kv, kv.value);
        } else if (kv.key == "depth_noise") {
            scene.spec.depth_noise = detail::parse_num(kv, kv.value);
        } else if (kv.key == "color_noise") {
            scene.spec.color_noise = detail::parse_num(kv, kv.value);
        } else if (kv.key == "width" || kv.key == "height") {
            const auto v = to_integer(kv.value);
            if (!v || *v < 2) {
                detail::scene_error(kv, kv.key + " must be an integer >= 2");
            }
            (kv.key == "width" ? scene.intrinsics.depth_width : scene.intrinsics.depth_height) = std::size_t(*v);
        } else if (kv.key == "fov_preset") {
            const auto fov = fov_of(parse_fov_preset(kv.value));
            scene.intrinsics.fov_x = fov.x;
            scene.intrinsics.fov_y = fov.y;
        } else if (kv.key == "fov_x") {
            scene.intrinsics.fov_x = detail::parse_num(kv, kv.value);
        } else if (kv.key == "fov_y") {
            scene.intrinsics.fov_y = detail::parse_num(kv, kv.value);
        } else if (kv.key == "seed") {
            const auto v = to_integer(kv.value);
            if (!v || *v < 0) {
                detail::scene_error(kv, "seed must be a non-negative integer");
            }
            scene.seed = std::uint64_t(*v);
        } else {
            detail::scene_error(kv, "unknown key '" + kv.key + "'");
        }
    }
    scene.intrinsics.color_width = scene.intrinsics.depth_width;
    scene.intrinsics.color_height = scene.intrinsics.depth_height;
    scene.intrinsics.validate();
    scene.spec.validate();
    return scene;
}

inline SceneFile load_scene(const std::string& path) {
    std::vector<KeyValue> kvs;
    try {
        kvs = read_key_value_file(path);
    } catch (const DatasetError& e) {
        throw ConfigError(e.what());
    }
    return parse_scene(kvs);
}

/// Writes color/depth/truth PNGs plus manifest.txt into `out_dir`.
inline DatasetManifest write_synthetic_dataset(const SyntheticSequence& seq, const CameraIntrinsics& intrinsics,
                                               const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    DatasetManifest m;
    m.intrinsics = intrinsics;
    m.intrinsics.color_width = intrinsics.depth_width;
    m.intrinsics.color_height = intrinsics.depth_height;
    m.pre_aligned = true;
    m.base_dir = out_dir;
    char name[64];
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
        FrameEntry e;
        std::snprintf(name, sizeof name, "color_%06zu.png", i);
        e.color_path = name;
        std::snprintf(name, sizeof name, "depth_%06zu.png", i);
        e.depth_path = name;
        std::snprintf(name, sizeof name, "truth_%06zu.png", i);
        e.labels_path = name;
        png::write_rgb((out_dir / e.color_path).string(), seq.frames[i].color);
        png::write_gray16((out_dir / e.depth_path).string(), depth_to_millimeters(seq.frames[i].depth));
        png::write_gray8((out_dir / *e.labels_path).string(), seq.truth[i]);
        m.frames.push_back(std::move(e));
    }
    save_manifest(m, out_dir / "manifest.txt");
    return m;
}

} // namespace wcluster
