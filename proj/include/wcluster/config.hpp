#pragma once

#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "wcluster/camera.hpp"
#include "wcluster/cluster.hpp"
#include "wcluster/common.hpp"
#include "wcluster/frame_io.hpp"
#include "wcluster/keyvalue.hpp"
#include "wcluster/parallel.hpp"
#include "wcluster/preprocess.hpp"

namespace wcluster {

/// Every tunable of the pipeline. Keys in config files and command-line flags
/// share the same names (`pos-scale` and `pos_scale` are both accepted).
struct PipelineConfig {
    std::size_t k = 10;
    double alpha = 0.01;
    std::optional<double> pos_scale; // defaults to 1 - alpha
    double gamma = 0.001;
    double psi = 1.0;
    std::size_t inner_iters = 1;
    DepthRange depth_range{0.5, 4.5};
    std::size_t stride = 1;
    std::optional<FovPreset> fov_preset;
    std::optional<double> fov_x;
    std::optional<double> fov_y;
    std::uint64_t rng_seed = 1;
    std::size_t threads = default_thread_count();
    bool freeze_centroids = false;
    bool legacy_width_on_y = false;
    bool pre_aligned = false;

    ClusterParams cluster_params() const {
        ClusterParams p;
        p.k = k;
        p.alpha = alpha;
        p.pos_scale = pos_scale ? *pos_scale : ClusterParams::saturating_pos_scale(alpha);
        p.gamma = gamma;
        p.psi = psi;
        p.inner_iters = inner_iters;
        p.freeze_centroids = freeze_centroids;
        return p;
    }

    void validate() const {
        cluster_params().validate();
        depth_range.validate();
        if (stride < 1) {
            throw ConfigError("stride must be at least 1");
        }
        if (threads < 1) {
            throw ConfigError("threads must be at least 1");
        }
        if (fov_x && !(*fov_x > 0.0 && *fov_x < std::numbers::pi)) {
            throw ConfigError("fov-x must lie in (0, pi)");
        }
        if (fov_y && !(*fov_y > 0.0 && *fov_y < std::numbers::pi)) {
            throw ConfigError("fov-y must lie in (0, pi)");
        }
    }

    /// Manifest intrinsics with any field-of-view override applied.
    CameraIntrinsics intrinsics_for(const DatasetManifest& manifest) const {
        CameraIntrinsics intr = manifest.intrinsics;
        if (fov_preset) {
            intr = with_fov(intr, fov_of(*fov_preset));
        }
        if (fov_x) {
            intr.fov_x = *fov_x;
        }
        if (fov_y) {
            intr.fov_y = *fov_y;
        }
        return intr;
    }

    /// Applies one `key = value` setting.
    void set(std::string key, const std::string& value) {
        for (auto& ch : key) {
            if (ch == '_') {
                ch = '-';
            }
        }
        auto number = [&]() {
            const auto v = to_double(value);
            if (!v) {
                throw ConfigError(key + ": expected a number, got '" + value + "'");
            }
            return *v;
        };
        auto count = [&]() {
            const auto v = to_integer(value);
            if (!v || *v < 0) {
                throw ConfigError(key + ": expected a non-negative integer, got '" + value + "'");
            }
            return std::size_t(*v);
        };
        auto flag = [&]() {
            const auto v = to_bool(value);
            if (!v) {
                throw ConfigError(key + ": expected true or false, got '" + value + "'");
            }
            return *v;
        };
        if (key == "k") {
            k = count();
        } else if (key == "alpha") {
            alpha = number();
        } else if (key == "pos-scale") {
            pos_scale = number();
        } else if (key == "gamma") {
            gamma = number();
        } else if (key == "psi") {
            psi = number();
        } else if (key == "inner-iters") {
            inner_iters = count();
        } else if (key == "depth-min") {
            depth_range.near = number();
        } else if (key == "depth-max") {
            depth_range.far = number();
        } else if (key == "stride") {
            stride = count();
        } else if (key == "fov-preset") {
            fov_preset = parse_fov_preset(value);
        } else if (key == "fov-x") {
            fov_x = number();
        } else if (key == "fov-y") {
            fov_y = number();
        } else if (key == "rng-seed") {
            rng_seed = count();
        } else if (key == "threads") {
            threads = count();
        } else if (key == "freeze-centroids") {
            freeze_centroids = flag();
        } else if (key == "legacy-width-on-y") {
            legacy_width_on_y = flag();
        } else if (key == "pre-aligned") {
            pre_aligned = flag();
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }

    void apply(const std::vector<KeyValue>& kvs) {
        for (const auto& kv : kvs) {
            set(kv.key, kv.value);
        }
    }
};

inline PipelineConfig load_config(const std::string& path) {
    PipelineConfig cfg;
    std::vector<KeyValue> kvs;
    try {
        kvs = read_key_value_file(path);
    } catch (const DatasetError& e) {
        throw ConfigError(e.what());
    }
    cfg.apply(kvs);
    return cfg;
}

} // namespace wcluster
