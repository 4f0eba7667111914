#pragma once

#include <sys/resource.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "wcluster/common.hpp"
#include "wcluster/config.hpp"
#include "wcluster/frame_io.hpp"
#include "wcluster/hungarian.hpp"
#include "wcluster/pipeline.hpp"

namespace wcluster {

/// Peak resident set size of this process in bytes (0 if unavailable).
inline std::uint64_t peak_resident_bytes() {
    rusage usage{};
    if (getrusage(RUSAGE_SELF, &usage) != 0) {
        return 0;
    }
    return std::uint64_t(usage.ru_maxrss) * 1024u; // kilobytes on Linux
}

inline std::string machine_descriptor() {
    std::string s = "hw_threads=" + std::to_string(std::thread::hardware_concurrency());
#if defined(__clang__)
    s += " compiler=clang-" __clang_version__;
#elif defined(__GNUC__)
    s += " compiler=gcc-" __VERSION__;
#endif
    return s;
}

struct BenchRow {
    std::size_t k = 0;
    double fps_mean = 0.0;
    double fps_std = 0.0;
    double seconds_per_frame = 0.0;
    std::uint64_t peak_mem_bytes = 0;
    std::size_t accumulator_bytes = 0; // delta storage of the weight state
    std::uint64_t iterations = 0;
    std::size_t threads = 1;
};

struct BenchReport {
    std::vector<BenchRow> rows;
    std::string machine;
};

/// Times the full processing loop for each k over frames already in memory.
/// Each repetition starts from a fresh weight state.
inline BenchReport sweep_k(std::span<const RawFrame> frames, const CameraIntrinsics& intrinsics,
                           std::span<const std::size_t> k_values, const PipelineConfig& base,
                           std::size_t repetitions = 1) {
    if (k_values.empty()) {
        throw ConfigError("sweep needs at least one k value");
    }
    if (frames.empty()) {
        throw DatasetError(DatasetError::Kind::Format, "sweep needs at least one frame");
    }
    for (std::size_t i = 0; i < k_values.size(); ++i) {
        if (k_values[i] < 2 || k_values[i] > 100) {
            throw ConfigError("sweep k values must lie in [2, 100]");
        }
        if (i > 0 && k_values[i] <= k_values[i - 1]) {
            throw ConfigError("sweep k values must be strictly increasing");
        }
    }
    repetitions = std::max<std::size_t>(1, repetitions);

    BenchReport report;
    report.machine = machine_descriptor();
    for (const std::size_t k : k_values) {
        PipelineConfig cfg = base;
        cfg.k = k;
        std::vector<double> fps;
        BenchRow row;
        row.k = k;
        row.threads = cfg.threads;
        double total_seconds = 0.0;
        for (std::size_t rep = 0; rep < repetitions; ++rep) {
            Pipeline pipeline(cfg, intrinsics);
            double seconds = 0.0;
            for (const auto& frame : frames) {
                seconds += pipeline.process(frame).seconds;
            }
            total_seconds += seconds;
            fps.push_back(double(frames.size()) / std::max(seconds, 1e-12));
            row.accumulator_bytes = pipeline.clusterer().state().accumulator_bytes();
            row.iterations = pipeline.clusterer().clock().tau;
        }
        double mean = 0.0;
        for (double f : fps) {
            mean += f;
        }
        mean /= double(fps.size());
        double var = 0.0;
        for (double f : fps) {
            var += (f - mean) * (f - mean);
        }
        row.fps_mean = mean;
        row.fps_std = fps.size() > 1 ? std::sqrt(var / double(fps.size() - 1)) : 0.0;
        row.seconds_per_frame = total_seconds / double(repetitions * frames.size());
        row.peak_mem_bytes = peak_resident_bytes();
        report.rows.push_back(row);
    }
    return report;
}

inline BenchReport sweep_k(const DatasetManifest& manifest, std::span<const std::size_t> k_values,
                           const PipelineConfig& base, std::size_t repetitions = 1) {
    DatasetManifest m = manifest;
    if (base.pre_aligned) {
        m.pre_aligned = true;
    }
    std::vector<RawFrame> frames;
    for (std::size_t i = 0; i < m.frame_count(); ++i) {
        frames.push_back(read_frame_pair(m, i));
    }
    return sweep_k(frames, base.intrinsics_for(m), k_values, base, repetitions);
}

inline void write_bench_csv(const BenchReport& report, std::ostream& out) {
    out << "k,fps_mean,fps_std,peak_mem_bytes,threads\n";
    for (const auto& r : report.rows) {
        out << r.k << ',' << r.fps_mean << ',' << r.fps_std << ',' << r.peak_mem_bytes << ',' << r.threads << '\n';
    }
}

struct ClassScore {
    std::uint8_t truth_label = 0;
    int predicted_label = -1; // -1 when no cluster was matched
    double iou = 0.0;
};

struct FrameQuality {
    double accuracy = 1.0;
    std::size_t evaluated_pixels = 0;
    std::vector<ClassScore> classes;
};

struct QualityReport {
    std::vector<FrameQuality> frames;
    double mean_accuracy = 1.0;
    std::vector<std::string> warnings;
};

/// Best-match accuracy of predicted labels against ground truth over pixels
/// whose truth is an object (not kNoLabel). Clusters are matched one-to-one to
/// truth classes by maximum overlap; per-class IoU uses the whole raster.
inline FrameQuality score_frame(const LabelRaster& labels, const LabelRaster& truth) {
    if (labels.width() != truth.width() || labels.height() != truth.height()) {
        throw DatasetError(DatasetError::Kind::DimensionMismatch, "label and truth rasters differ in size");
    }
    std::vector<std::uint8_t> classes;
    std::vector<std::uint8_t> clusters;
    {
        std::set<std::uint8_t> t;
        std::set<std::uint8_t> p;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            if (truth[i] != kNoLabel) {
                t.insert(truth[i]);
            }
            if (labels[i] != kNoLabel) {
                p.insert(labels[i]);
            }
        }
        classes.assign(t.begin(), t.end());
        clusters.assign(p.begin(), p.end());
    }
    std::array<int, 256> class_index{};
    std::array<int, 256> cluster_index{};
    class_index.fill(-1);
    cluster_index.fill(-1);
    for (std::size_t i = 0; i < classes.size(); ++i) {
        class_index[classes[i]] = int(i);
    }
    for (std::size_t i = 0; i < clusters.size(); ++i) {
        cluster_index[clusters[i]] = int(i);
    }

    const std::size_t nc = clusters.size();
    const std::size_t nt = classes.size();
    std::vector<double> overlap(nc * nt, 0.0);
    std::vector<std::size_t> cluster_area(nc, 0), class_area(nt, 0);
    std::size_t evaluated = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const int t = truth[i] == kNoLabel ? -1 : class_index[truth[i]];
        const int p = labels[i] == kNoLabel ? -1 : cluster_index[labels[i]];
        if (p >= 0) {
            ++cluster_area[std::size_t(p)];
        }
        if (t >= 0) {
            ++class_area[std::size_t(t)];
            ++evaluated;
            if (p >= 0) {
                overlap[std::size_t(p) * nt + std::size_t(t)] += 1.0;
            }
        }
    }

    FrameQuality q;
    q.evaluated_pixels = evaluated;
    const auto match = max_weight_assignment(overlap, nc, nt);
    std::vector<int> class_match(nt, -1);
    double matched = 0.0;
    for (std::size_t p = 0; p < nc; ++p) {
        if (match[p] >= 0) {
            class_match[std::size_t(match[p])] = int(p);
            matched += overlap[p * nt + std::size_t(match[p])];
        }
    }
    q.accuracy = evaluated == 0 ? 1.0 : matched / double(evaluated);
    for (std::size_t t = 0; t < nt; ++t) {
        ClassScore s;
        s.truth_label = classes[t];
        if (class_match[t] >= 0) {
            const auto p = std::size_t(class_match[t]);
            s.predicted_label = clusters[p];
            const double inter = overlap[p * nt + t];
            s.iou = inter / (double(cluster_area[p] + class_area[t]) - inter);
        }
        q.classes.push_back(s);
    }
    return q;
}

inline QualityReport score_against_truth(std::span<const LabelRaster> labels, std::span<const LabelRaster> truth) {
    if (labels.size() != truth.size()) {
        throw DatasetError(DatasetError::Kind::DimensionMismatch, "label and truth sequences differ in length");
    }
    QualityReport report;
    double sum = 0.0;
    for (std::size_t f = 0; f < labels.size(); ++f) {
        report.frames.push_back(score_frame(labels[f], truth[f]));
        if (report.frames.back().evaluated_pixels == 0) {
            report.warnings.push_back("frame " + std::to_string(f) +
                                      ": no object pixels in ground truth, accuracy defined as 1.0");
        }
        sum += report.frames.back().accuracy;
    }
    report.mean_accuracy = labels.empty() ? 1.0 : sum / double(labels.size());
    return report;
}

} // namespace wcluster
