#pragma once

// Streaming weighted k-means over organized clouds.
//
// Every grid cell carries k non-negative accumulators (delta). In each
// iteration a valid point finds the centroid minimizing the hybrid
// similarity
//
//   dist(p, c) = sqrt(s_pos^2 |xyz_p - xyz_c|^2 + alpha^2 |rgb_p - rgb_c|^2)
//   f(p, c)    = dist(p, c) + gamma (1 - cos theta(n_p, n_c))
//
// and that centroid's accumulator grows by psi. The normalized weights mu
// (delta / sum delta) give the label (argmax) and the display color blend.
// Accumulators persist across frames, keyed by grid cell, and never decay.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "wcluster/common.hpp"
#include "wcluster/parallel.hpp"
#include "wcluster/preprocess.hpp"

namespace wcluster {

inline constexpr std::size_t kPaletteSize = 100;

namespace detail {

inline Rgb hsv_to_rgb(double h, double s, double v) {
    const double c = v * s;
    const double hp = h * 6.0;
    const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    switch (int(hp) % 6) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
    }
    const double m = v - c;
    auto to8 = [m](double ch) { return std::uint8_t(std::lround((ch + m) * 255.0)); };
    return {to8(r), to8(g), to8(b)};
}

} // namespace detail

/// Fixed display palette; hues follow the golden-ratio sequence so that any
/// prefix is well spread.
inline const std::array<Rgb, kPaletteSize>& palette() {
    static const std::array<Rgb, kPaletteSize> colors = [] {
        std::array<Rgb, kPaletteSize> out{};
        constexpr double golden = 0.618033988749894848;
        for (std::size_t i = 0; i < kPaletteSize; ++i) {
            const double hue = std::fmod(0.05 + double(i) * golden, 1.0);
            const double sat = (i / 3) % 2 == 0 ? 0.85 : 0.55;
            const double val = i % 3 == 0 ? 0.95 : (i % 3 == 1 ? 0.75 : 0.55);
            out[i] = detail::hsv_to_rgb(hue, sat, val);
        }
        return out;
    }();
    return colors;
}

/// Clustering scales and loop settings. Construct, adjust, then validate().
struct ClusterParams {
    std::size_t k = 8;
    double alpha = 0.01;     // color scale
    double pos_scale = 0.99; // position scale
    double gamma = 0.001;    // normal-angle scale
    double psi = 1.0;        // accumulator increment per win
    std::size_t inner_iters = 1;
    bool freeze_centroids = false; // keep the k-means++ seeds for the whole sequence

    /// Position scale that saturates pos_scale + alpha <= 1.
    static double saturating_pos_scale(double alpha) {
        double s = 1.0 - alpha;
        while (s > 0.0 && s + alpha > 1.0) {
            s = std::nextafter(s, 0.0);
        }
        return s;
    }

    void validate() const {
        if (k < 2 || k > kPaletteSize) {
            throw ConfigError("k must lie in [2, " + std::to_string(kPaletteSize) + "] (got " + std::to_string(k) + ")");
        }
        if (!(alpha > 0.0 && alpha < 1.0)) {
            throw ConfigError("color scale alpha must satisfy 0 < alpha < 1 (got " + std::to_string(alpha) + ")");
        }
        if (!(pos_scale > 0.0)) {
            throw ConfigError("position scale must be positive (got " + std::to_string(pos_scale) + ")");
        }
        if (!(pos_scale + alpha <= 1.0)) {
            throw ConfigError("position and color scales must satisfy pos_scale + alpha <= 1 (got " +
                              std::to_string(pos_scale + alpha) + ")");
        }
        if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
            throw ConfigError("normal scale gamma must be finite and >= 0");
        }
        if (!(psi > 0.0 && psi <= 1.0)) {
            throw ConfigError("weight increment psi must satisfy 0 < psi <= 1 (got " + std::to_string(psi) + ")");
        }
        if (inner_iters < 1) {
            throw ConfigError("inner_iters must be at least 1");
        }
    }
};

struct Centroid {
    Vec3 position;
    Vec3 color;
    Vec3 normal;
    bool has_normal = false;
    Rgb display;
};

inline Centroid centroid_from_point(const CloudPoint& p, Rgb display = {}) {
    return {p.position, p.color, p.normal, p.has_normal, display};
}

/// Position/color term.
inline double dist(const CloudPoint& p, const Centroid& c, const ClusterParams& params) noexcept {
    const double s2 = params.pos_scale * params.pos_scale;
    const double a2 = params.alpha * params.alpha;
    return std::sqrt(s2 * squared_norm(p.position - c.position) + a2 * squared_norm(p.color - c.color));
}

/// gamma (1 - cos theta); zero when either normal is absent. For unit normals
/// 1 - cos theta = |n_p - n_c|^2 / 2, which is exactly zero for equal normals.
inline double normal_penalty(const CloudPoint& p, const Centroid& c, const ClusterParams& params) noexcept {
    if (!p.has_normal || !c.has_normal) {
        return 0.0;
    }
    return params.gamma * std::clamp(0.5 * squared_norm(p.normal - c.normal), 0.0, 2.0);
}

inline double similarity_f(const CloudPoint& p, const Centroid& c, const ClusterParams& params) noexcept {
    return dist(p, c, params) + normal_penalty(p, c, params);
}

/// Nearest centroid under similarity_f; ties go to the lowest index.
inline std::size_t nearest_centroid(const CloudPoint& p, std::span<const Centroid> centroids,
                                    const ClusterParams& params) noexcept {
    std::size_t best = 0;
    double best_f = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < centroids.size(); ++j) {
        const double f = similarity_f(p, centroids[j], params);
        if (f < best_f) {
            best_f = f;
            best = j;
        }
    }
    return best;
}

inline constexpr std::int32_t kUnlabeled = -1;

/// Per-cell accumulators (delta), normalized weights (mu) and argmax label.
class WeightState {
public:
    WeightState() = default;
    WeightState(std::size_t cells, std::size_t k)
        : k_(k), delta_(cells * k, 0.0), mu_(cells * k, 0.0), labels_(cells, kUnlabeled) {}

    std::size_t size() const noexcept { return labels_.size(); }
    std::size_t k() const noexcept { return k_; }

    std::span<double> delta(std::size_t cell) noexcept { return {delta_.data() + cell * k_, k_}; }
    std::span<const double> delta(std::size_t cell) const noexcept { return {delta_.data() + cell * k_, k_}; }
    std::span<double> mu(std::size_t cell) noexcept { return {mu_.data() + cell * k_, k_}; }
    std::span<const double> mu(std::size_t cell) const noexcept { return {mu_.data() + cell * k_, k_}; }

    std::int32_t label(std::size_t cell) const noexcept { return labels_[cell]; }
    void set_label(std::size_t cell, std::int32_t label) noexcept { labels_[cell] = label; }
    const std::vector<std::int32_t>& labels() const noexcept { return labels_; }

    /// Bytes held by the accumulators alone (k per cell).
    std::size_t accumulator_bytes() const noexcept { return delta_.size() * sizeof(double); }

    bool operator==(const WeightState&) const = default;

private:
    std::size_t k_ = 0;
    std::vector<double> delta_;
    std::vector<double> mu_;
    std::vector<std::int32_t> labels_;
};

/// delta[winner] += psi.
inline void update_weights(WeightState& state, std::size_t cell, std::size_t winner, double psi) noexcept {
    state.delta(cell)[winner] += psi;
}

/// mu = delta / sum(delta) (all zero while nothing has accumulated) and
/// label = argmax mu with ties to the lowest index.
inline void normalize_weights(WeightState& state, std::size_t cell) noexcept {
    const auto delta = state.delta(cell);
    const auto mu = state.mu(cell);
    double total = 0.0;
    for (double d : delta) {
        total += d;
    }
    if (!(total > 0.0)) {
        std::fill(mu.begin(), mu.end(), 0.0);
        state.set_label(cell, kUnlabeled);
        return;
    }
    std::size_t best = 0;
    for (std::size_t j = 0; j < delta.size(); ++j) {
        mu[j] = delta[j] / total;
        if (mu[j] > mu[best]) {
            best = j;
        }
    }
    state.set_label(cell, std::int32_t(best));
}

/// Cumulative iteration counter across the whole sequence.
struct IterationClock {
    std::uint64_t tau = 0;
};

namespace detail {

inline double uniform01(std::mt19937_64& eng) { return double(eng() >> 11) * 0x1.0p-53; }

inline std::size_t uniform_index(std::mt19937_64& eng, std::size_t n) {
    return std::min(std::size_t(uniform01(eng) * double(n)), n - 1);
}

} // namespace detail

/// k-means++ seeding over the valid points: the first seed uniformly, each
/// further seed with probability proportional to the squared similarity to
/// its nearest chosen seed. If every remaining point coincides with a seed,
/// the next seed is drawn uniformly.
inline std::vector<Centroid> seed_kmeanspp(std::span<const CloudPoint> points, std::size_t k,
                                           std::uint64_t rng_seed, const ClusterParams& params) {
    std::vector<std::size_t> valid;
    valid.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].valid) {
            valid.push_back(i);
        }
    }
    if (valid.size() < k) {
        throw ClusterError("k-means++ needs at least k = " + std::to_string(k) + " valid points, got " +
                           std::to_string(valid.size()));
    }
    if (k > kPaletteSize) {
        throw ClusterError("k exceeds the display palette");
    }
    const auto& colors = palette();
    std::mt19937_64 eng(rng_seed);
    std::vector<Centroid> seeds;
    seeds.reserve(k);
    seeds.push_back(centroid_from_point(points[valid[detail::uniform_index(eng, valid.size())]], colors[0]));

    std::vector<double> d2(valid.size());
    for (std::size_t i = 0; i < valid.size(); ++i) {
        const double f = similarity_f(points[valid[i]], seeds[0], params);
        d2[i] = f * f;
    }
    while (seeds.size() < k) {
        double total = 0.0;
        for (double d : d2) {
            total += d;
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            const double u = detail::uniform01(eng) * total;
            double acc = 0.0;
            pick = valid.size();
            for (std::size_t i = 0; i < valid.size(); ++i) {
                if (d2[i] <= 0.0) {
                    continue;
                }
                acc += d2[i];
                pick = i;
                if (acc > u) {
                    break;
                }
            }
        } else {
            pick = detail::uniform_index(eng, valid.size());
        }
        Centroid next = centroid_from_point(points[valid[pick]], colors[seeds.size()]);
        for (std::size_t i = 0; i < valid.size(); ++i) {
            const double f = similarity_f(points[valid[i]], next, params);
            d2[i] = std::min(d2[i], f * f);
        }
        seeds.push_back(next);
    }
    return seeds;
}

namespace detail {

struct CentroidAccumulator {
    double weight = 0.0;
    Vec3 position;
    Vec3 color;
    Vec3 normal;
    double normal_weight = 0.0;
};

} // namespace detail

/// Per cluster, the mean features of the valid points currently labeled with
/// it, each weighted by its mu for that cluster. Clusters with zero total
/// weight keep their previous centroid; a mean normal of (near) zero length is
/// flagged absent. Display colors are carried over.
inline std::vector<Centroid> update_centroids(const OrganizedCloud& cloud, const WeightState& state,
                                              std::span<const Centroid> current, std::size_t threads = 1) {
    const std::size_t k = current.size();
    const std::size_t n = cloud.points.size();
    const std::size_t chunks = effective_threads(n, threads);
    std::vector<std::vector<detail::CentroidAccumulator>> partial(chunks,
                                                                  std::vector<detail::CentroidAccumulator>(k));
    parallel_for(n, chunks, [&](std::size_t begin, std::size_t end, std::size_t chunk) {
        auto& acc = partial[chunk];
        for (std::size_t i = begin; i < end; ++i) {
            const CloudPoint& p = cloud.points[i];
            if (!p.valid) {
                continue;
            }
            const std::int32_t label = state.label(i);
            if (label < 0 || std::size_t(label) >= k) {
                continue;
            }
            const double w = state.mu(i)[std::size_t(label)];
            if (!(w > 0.0)) {
                continue;
            }
            auto& a = acc[std::size_t(label)];
            a.weight += w;
            a.position += p.position * w;
            a.color += p.color * w;
            if (p.has_normal) {
                a.normal += p.normal * w;
                a.normal_weight += w;
            }
        }
    });

    std::vector<Centroid> out(current.begin(), current.end());
    for (std::size_t j = 0; j < k; ++j) {
        detail::CentroidAccumulator total;
        for (const auto& part : partial) {
            total.weight += part[j].weight;
            total.position += part[j].position;
            total.color += part[j].color;
            total.normal += part[j].normal;
            total.normal_weight += part[j].normal_weight;
        }
        if (!(total.weight > 0.0)) {
            continue;
        }
        Centroid& c = out[j];
        c.position = total.position * (1.0 / total.weight);
        c.color = total.color * (1.0 / total.weight);
        c.has_normal = false;
        c.normal = {};
        if (total.normal_weight > 0.0) {
            const Vec3 mean = total.normal * (1.0 / total.normal_weight);
            const double len = norm(mean);
            if (len > 1e-6) {
                c.normal = mean * (1.0 / len);
                c.has_normal = true;
            }
        }
    }
    return out;
}

/// Runs params.inner_iters clustering iterations on one frame. Invalid cells
/// keep their accumulators and labels untouched.
inline void step_frame(const OrganizedCloud& cloud, WeightState& state, std::vector<Centroid>& centroids,
                       IterationClock& clock, const ClusterParams& params, std::size_t threads = 1) {
    if (state.size() != cloud.points.size()) {
        throw ClusterError("weight state has " + std::to_string(state.size()) + " cells but the cloud has " +
                           std::to_string(cloud.points.size()));
    }
    if (centroids.size() != state.k()) {
        throw ClusterError("centroid count does not match k");
    }
    for (std::size_t iter = 0; iter < params.inner_iters; ++iter) {
        const std::span<const Centroid> snapshot(centroids);
        parallel_for(cloud.points.size(), threads, [&](std::size_t begin, std::size_t end, std::size_t) {
            for (std::size_t i = begin; i < end; ++i) {
                const CloudPoint& p = cloud.points[i];
                if (!p.valid) {
                    continue;
                }
                update_weights(state, i, nearest_centroid(p, snapshot, params), params.psi);
                normalize_weights(state, i);
            }
        });
        if (!params.freeze_centroids) {
            centroids = update_centroids(cloud, state, centroids, threads);
        }
        ++clock.tau;
    }
}

/// Owns the persistent state of one stream: seeds on the first frame, then
/// accumulates across frames of identical grid size.
class StreamingClusterer {
public:
    StreamingClusterer(ClusterParams params, std::uint64_t rng_seed, std::size_t threads = 1)
        : params_(params), rng_seed_(rng_seed), threads_(std::max<std::size_t>(1, threads)) {
        params_.validate();
    }

    void process(const OrganizedCloud& cloud) {
        if (centroids_.empty()) {
            centroids_ = seed_kmeanspp(cloud.points, params_.k, rng_seed_, params_);
            state_ = WeightState(cloud.points.size(), params_.k);
        }
        step_frame(cloud, state_, centroids_, clock_, params_, threads_);
    }

    bool seeded() const noexcept { return !centroids_.empty(); }
    const WeightState& state() const noexcept { return state_; }
    const std::vector<Centroid>& centroids() const noexcept { return centroids_; }
    const IterationClock& clock() const noexcept { return clock_; }
    const ClusterParams& params() const noexcept { return params_; }

private:
    ClusterParams params_;
    std::uint64_t rng_seed_;
    std::size_t threads_;
    WeightState state_;
    std::vector<Centroid> centroids_;
    IterationClock clock_;
};

} // namespace wcluster
