#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "wcluster/common.hpp"
#include "wcluster/frame_io.hpp"
#include "wcluster/parallel.hpp"
#include "wcluster/projection.hpp"

namespace wcluster {

/// One element of the organized cloud: position (meters, camera frame), color
/// in [0, 255] and unit surface normal. `has_normal` is false where the grid
/// neighborhood could not produce one; such points still cluster on position
/// and color.
struct CloudPoint {
    Vec3 position;
    Vec3 color;
    Vec3 normal;
    bool valid = false;
    bool has_normal = false;
    std::size_t row = 0; // cell in the full-resolution depth raster
    std::size_t col = 0;
};

/// Points stored on the (possibly subsampled) sensor grid.
struct OrganizedCloud {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<CloudPoint> points;
    std::size_t frame_index = 0;

    CloudPoint& at(std::size_t row, std::size_t col) noexcept { return points[row * width + col]; }
    const CloudPoint& at(std::size_t row, std::size_t col) const noexcept { return points[row * width + col]; }

    std::size_t valid_count() const noexcept {
        return std::size_t(std::count_if(points.begin(), points.end(), [](const CloudPoint& p) { return p.valid; }));
    }
};

/// Closed working interval [near, far] in meters.
struct DepthRange {
    double near = 0.5;
    double far = 4.5;

    void validate() const {
        if (!(near >= 0.0 && near < far)) {
            throw ConfigError("depth range requires 0 <= depth-min < depth-max");
        }
    }

    bool contains(double z) const noexcept { return z >= near && z <= far; }
};

/// Back-projects every pixel of an aligned frame. Zero depth yields an invalid point.
inline OrganizedCloud build_cloud(const RgbdFrame& frame, const Projection& proj, std::size_t threads = 1) {
    OrganizedCloud cloud;
    cloud.width = frame.width();
    cloud.height = frame.height();
    cloud.frame_index = frame.frame_index;
    cloud.points.resize(cloud.width * cloud.height);
    parallel_for(cloud.height, threads, [&](std::size_t r0, std::size_t r1, std::size_t) {
        for (std::size_t r = r0; r < r1; ++r) {
            for (std::size_t c = 0; c < cloud.width; ++c) {
                CloudPoint& p = cloud.at(r, c);
                p.row = r;
                p.col = c;
                p.color = to_vec(frame.color.at(r, c));
                if (const auto w = back_project(double(c), double(r), frame.depth.at(r, c), proj)) {
                    p.position = *w;
                    p.valid = true;
                }
            }
        }
    });
    return cloud;
}

/// Central-difference normals on the organized grid,
///   n = normalize((P[r][c+1] - P[r][c-1]) x (P[r+1][c] - P[r-1][c])),
/// oriented towards the camera (nz <= 0). Border points, points with an
/// invalid 4-neighbor and degenerate (collinear) neighborhoods get no normal.
inline void compute_normals(OrganizedCloud& cloud, std::size_t threads = 1) {
    const std::size_t w = cloud.width;
    const std::size_t h = cloud.height;
    std::vector<Vec3> normals(cloud.points.size());
    std::vector<char> ok(cloud.points.size(), 0);
    parallel_for(h, threads, [&](std::size_t r0, std::size_t r1, std::size_t) {
        for (std::size_t r = r0; r < r1; ++r) {
            for (std::size_t c = 0; c < w; ++c) {
                const std::size_t i = r * w + c;
                if (!cloud.points[i].valid || r == 0 || c == 0 || r + 1 >= h || c + 1 >= w) {
                    continue;
                }
                const auto& left = cloud.at(r, c - 1);
                const auto& right = cloud.at(r, c + 1);
                const auto& up = cloud.at(r - 1, c);
                const auto& down = cloud.at(r + 1, c);
                if (!left.valid || !right.valid || !up.valid || !down.valid) {
                    continue;
                }
                const Vec3 du = right.position - left.position;
                const Vec3 dv = down.position - up.position;
                Vec3 n = cross(du, dv);
                const double len = norm(n);
                if (!(len > 1e-12 * norm(du) * norm(dv)) || !std::isfinite(len)) {
                    continue;
                }
                n = n * (1.0 / len);
                if (n.z > 0.0) {
                    n = n * -1.0;
                }
                normals[i] = n;
                ok[i] = 1;
            }
        }
    });
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        cloud.points[i].has_normal = ok[i] != 0;
        cloud.points[i].normal = ok[i] != 0 ? normals[i] : Vec3{};
    }
}

/// Invalidates points outside the closed depth interval.
inline void remove_background(OrganizedCloud& cloud, const DepthRange& range) {
    for (auto& p : cloud.points) {
        if (p.valid && !range.contains(p.position.z)) {
            p.valid = false;
        }
    }
}

/// Keeps grid cells whose row and column are multiples of `stride`.
inline OrganizedCloud subsample(const OrganizedCloud& cloud, std::size_t stride) {
    if (stride == 0) {
        throw ConfigError("stride must be at least 1");
    }
    if (stride == 1) {
        return cloud;
    }
    OrganizedCloud out;
    out.width = (cloud.width + stride - 1) / stride;
    out.height = (cloud.height + stride - 1) / stride;
    out.frame_index = cloud.frame_index;
    out.points.reserve(out.width * out.height);
    for (std::size_t r = 0; r < cloud.height; r += stride) {
        for (std::size_t c = 0; c < cloud.width; c += stride) {
            out.points.push_back(cloud.at(r, c));
        }
    }
    return out;
}

} // namespace wcluster
