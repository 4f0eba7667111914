#pragma once

#include <cstddef>
#include <numbers>
#include <string>
#include <string_view>

#include "wcluster/common.hpp"

namespace wcluster {

/// Depth-sensor field of view and raster sizes. Color dimensions are only
/// used when color has to be resampled onto the depth grid.
struct CameraIntrinsics {
    double fov_x = 1.22173047;     // 70 degrees, Kinect V2 depth sensor
    double fov_y = 1.0471975511;   // 60 degrees
    std::size_t depth_width = 512;
    std::size_t depth_height = 424;
    std::size_t color_width = 1920;
    std::size_t color_height = 1080;

    void validate() const {
        if (!(fov_x > 0.0 && fov_x < std::numbers::pi) || !(fov_y > 0.0 && fov_y < std::numbers::pi)) {
            throw ConfigError("field of view must lie in (0, pi) radians");
        }
        if (depth_width < 2 || depth_height < 2 || color_width < 2 || color_height < 2) {
            throw ConfigError("raster dimensions must be at least 2");
        }
    }

    bool operator==(const CameraIntrinsics&) const = default;
};

enum class FovPreset { KinectV1, KinectV2 };

struct FieldOfView {
    double x;
    double y;
};

constexpr FieldOfView fov_of(FovPreset preset) noexcept {
    switch (preset) {
    case FovPreset::KinectV1:
        return {1.014468, 0.7898094};
    case FovPreset::KinectV2:
        break;
    }
    return {1.22173047, 1.0471975511};
}

inline FovPreset parse_fov_preset(std::string_view name) {
    if (name == "kinect-v1") {
        return FovPreset::KinectV1;
    }
    if (name == "kinect-v2") {
        return FovPreset::KinectV2;
    }
    throw ConfigError("unknown fov preset '" + std::string(name) + "' (expected kinect-v1 or kinect-v2)");
}

inline CameraIntrinsics with_fov(CameraIntrinsics intr, FieldOfView fov) {
    intr.fov_x = fov.x;
    intr.fov_y = fov.y;
    return intr;
}

} // namespace wcluster
