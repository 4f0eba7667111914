#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <ostream>
#include <string>

#include "wcluster/cluster.hpp"
#include "wcluster/config.hpp"
#include "wcluster/frame_io.hpp"
#include "wcluster/preprocess.hpp"
#include "wcluster/projection.hpp"
#include "wcluster/render_export.hpp"

namespace wcluster {

struct FrameOutput {
    OrganizedCloud cloud;
    ColoredCloud colored;
    LabelRaster labels;
    std::uint64_t tau = 0;
    double seconds = 0.0; // processing time, no disk I/O
};

/// Mapping, back-projection, normals, background removal, subsampling,
/// clustering and color assignment for a stream of frames.
class Pipeline {
public:
    Pipeline(const PipelineConfig& config, const CameraIntrinsics& intrinsics)
        : config_((config.validate(), config)),
          projection_{intrinsics, config.legacy_width_on_y},
          clusterer_(config.cluster_params(), config.rng_seed, config.threads) {
        intrinsics.validate();
    }

    FrameOutput process(const RawFrame& raw) {
        const auto start = std::chrono::steady_clock::now();
        RgbdFrame frame = map_color_to_depth(raw.color, raw.depth, projection_.intrinsics);
        frame.frame_index = raw.frame_index;
        FrameOutput out = run(frame);
        out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return out;
    }

    FrameOutput process(const RgbdFrame& frame) {
        const auto start = std::chrono::steady_clock::now();
        FrameOutput out = run(frame);
        out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return out;
    }

    const StreamingClusterer& clusterer() const noexcept { return clusterer_; }
    const Projection& projection() const noexcept { return projection_; }

private:
    FrameOutput run(const RgbdFrame& frame) {
        if (frame.width() != projection_.intrinsics.depth_width ||
            frame.height() != projection_.intrinsics.depth_height) {
            throw DatasetError(DatasetError::Kind::DimensionMismatch, "frame size does not match intrinsics");
        }
        OrganizedCloud full = build_cloud(frame, projection_, config_.threads);
        compute_normals(full, config_.threads);
        remove_background(full, config_.depth_range);
        FrameOutput out;
        out.cloud = subsample(full, config_.stride);
        clusterer_.process(out.cloud);
        const auto colors = display_colors(clusterer_.centroids());
        out.colored = colorize(out.cloud, clusterer_.state(), colors);
        out.labels = label_raster(out.cloud, clusterer_.state());
        out.tau = clusterer_.clock().tau;
        return out;
    }

    PipelineConfig config_;
    Projection projection_;
    StreamingClusterer clusterer_;
};

inline std::string numbered(const char* prefix, std::size_t index, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%06zu.%s", prefix, index, ext);
    return buf;
}

/// Processes every manifest frame in order, writing frame_NNNNNN.ply and
/// labels_NNNNNN.png into `out_dir` and one progress line per frame to `log`.
inline void run_dataset(const PipelineConfig& config, DatasetManifest manifest, const std::filesystem::path& out_dir,
                        std::ostream& log) {
    if (config.pre_aligned) {
        manifest.pre_aligned = true;
    }
    Pipeline pipeline(config, config.intrinsics_for(manifest));
    std::filesystem::create_directories(out_dir);
    for (std::size_t i = 0; i < manifest.frame_count(); ++i) {
        const RawFrame raw = read_frame_pair(manifest, i);
        const FrameOutput out = pipeline.process(raw);
        export_ply(out.colored, (out_dir / numbered("frame", i, "ply")).string());
        export_labels(out.labels, (out_dir / numbered("labels", i, "png")).string());
        char line[160];
        std::snprintf(line, sizeof line, "frame %06zu tau=%llu points=%zu time_ms=%.3f\n", i,
                      static_cast<unsigned long long>(out.tau), out.colored.points.size(), out.seconds * 1e3);
        log << line;
    }
}

} // namespace wcluster
