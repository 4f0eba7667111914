#pragma once

// Pinhole back-projection of depth pixels driven only by field of view and
// raster size:
//
//   scale_x = 2 tan(fov_x / 2)          scale_y = 2 tan(fov_y / 2)
//   Wx = pz * scale_x * (px / width  - 0.5)
//   Wy = pz * scale_y * (py / height - 0.5)
//   Wz = pz
//
// With `legacy_width_on_y` the vertical term divides by the raster width
// instead of the height, which reproduces the formula as originally printed.

#include <cmath>
#include <optional>

#include "wcluster/camera.hpp"
#include "wcluster/common.hpp"

namespace wcluster {

struct Projection {
    CameraIntrinsics intrinsics;
    bool legacy_width_on_y = false;

    double scale_x() const noexcept { return 2.0 * std::tan(intrinsics.fov_x / 2.0); }
    double scale_y() const noexcept { return 2.0 * std::tan(intrinsics.fov_y / 2.0); }

    double vertical_divisor() const noexcept {
        return double(legacy_width_on_y ? intrinsics.depth_width : intrinsics.depth_height);
    }

    /// Camera-space direction with unit z through pixel (px, py).
    Vec3 ray(double px, double py) const noexcept {
        return {scale_x() * (px / double(intrinsics.depth_width) - 0.5),
                scale_y() * (py / vertical_divisor() - 0.5), 1.0};
    }
};

/// Returns std::nullopt for non-positive or non-finite depth (the invalid-depth
/// encoding); callers mark the point invalid.
inline std::optional<Vec3> back_project(double px, double py, double pz, const Projection& proj) noexcept {
    if (!(pz > 0.0) || !std::isfinite(pz)) {
        return std::nullopt;
    }
    return proj.ray(px, py) * pz;
}

inline std::optional<Vec3> back_project(double px, double py, double pz, const CameraIntrinsics& intr) noexcept {
    return back_project(px, py, pz, Projection{intr});
}

/// Inverse of back_project: world point to (px, py, pz). Requires z > 0.
inline std::optional<Vec3> forward_project(const Vec3& w, const Projection& proj) noexcept {
    if (!(w.z > 0.0)) {
        return std::nullopt;
    }
    const double px = (w.x / (w.z * proj.scale_x()) + 0.5) * double(proj.intrinsics.depth_width);
    const double py = (w.y / (w.z * proj.scale_y()) + 0.5) * proj.vertical_divisor();
    return Vec3{px, py, w.z};
}

inline std::optional<Vec3> forward_project(const Vec3& w, const CameraIntrinsics& intr) noexcept {
    return forward_project(w, Projection{intr});
}

} // namespace wcluster
