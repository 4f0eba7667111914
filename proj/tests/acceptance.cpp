// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "test_support.hpp"

using namespace wcluster;
using namespace wcluster::testing;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

OrganizedCloud prepare(const RgbdFrame& frame, const CameraIntrinsics& intr) {
    auto cloud = build_cloud(frame, Projection{intr});
    compute_normals(cloud);
    remove_background(cloud, DepthRange{});
    return cloud;
}

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, format, a, b, c);
    return buf;
}

// 1. back-projection round trip
Outcome back_projection_exactness() {
    const CameraIntrinsics intr = with_fov(CameraIntrinsics{}, fov_of(FovPreset::KinectV2));
    const Projection proj{intr};
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> px(0.0, double(intr.depth_width));
    std::uniform_real_distribution<double> py(0.0, double(intr.depth_height));
    std::uniform_real_distribution<double> pz(0.05, 8.0);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const Vec3 in{px(rng), py(rng), pz(rng)};
        const auto back = forward_project(*back_project(in.x, in.y, in.z, proj), proj);
        if (!back) {
            return {false, "forward projection rejected a back-projected point"};
        }
        worst = std::max({worst, std::abs(back->x - in.x) / std::max(1.0, in.x),
                          std::abs(back->y - in.y) / std::max(1.0, in.y), std::abs(back->z - in.z) / in.z});
    }
    const auto center = back_project(double(intr.depth_width) / 2.0, double(intr.depth_height) / 2.0, 2.0, proj);
    const bool exact_center = center && center->x == 0.0 && center->y == 0.0;
    return {worst <= 1e-6 && exact_center,
            fmt("max relative error %.3g, center pixel exact=", worst) + (exact_center ? "yes" : "no")};
}

// 2. simplex and non-negativity after every iteration
Outcome simplex_invariant() {
    const auto intr = small_camera(64, 64);
    auto spec = entering_sphere_scene(20);
    spec.depth_noise = 0.005;
    spec.color_noise = 3.0;
    const auto seq = generate_synthetic_scene(spec, intr, 5);
    ClusterParams params;
    params.k = 5;
    params.inner_iters = 2;
    StreamingClusterer clusterer(params, 11);
    std::size_t checked = 0;
    double worst = 0.0;
    for (const auto& frame : seq.frames) {
        const auto cloud = prepare(frame, intr);
        clusterer.process(cloud);
        const WeightState& s = clusterer.state();
        for (std::size_t i = 0; i < s.size(); ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < s.k(); ++j) {
                if (s.delta(i)[j] < 0.0 || s.mu(i)[j] < 0.0 || s.mu(i)[j] > 1.0) {
                    return {false, "negative accumulator or weight outside [0,1]"};
                }
                sum += s.mu(i)[j];
            }
            const double err = std::min(std::abs(sum), std::abs(sum - 1.0));
            worst = std::max(worst, err);
            ++checked;
        }
    }
    // also check between the inner iterations of one frame
    WeightState state(seq.frames[0].depth.size(), 5);
    const auto cloud = prepare(seq.frames[0], intr);
    auto centroids = seed_kmeanspp(cloud.points, 5, 3, params);
    IterationClock clock;
    ClusterParams single = params;
    single.inner_iters = 1;
    for (int it = 0; it < 20; ++it) {
        step_frame(cloud, state, centroids, clock, single);
        for (std::size_t i = 0; i < state.size(); ++i) {
            double sum = 0.0;
            for (double m : state.mu(i)) {
                sum += m;
            }
            worst = std::max(worst, std::min(std::abs(sum), std::abs(sum - 1.0)));
        }
    }
    return {worst <= 1e-9, fmt("%.0f cell checks, worst simplex deviation %.3g", double(checked), worst)};
}

// 3. fixpoint labels equal an independent Lloyd k-means from the same seeds
struct OraclePoint {
    double f[6]; // x y z r g b
    double n[3];
    bool has_n;
};

double oracle_f(const OraclePoint& p, const OraclePoint& c, double ps, double a, double g) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i) {
        s += ps * ps * (p.f[i] - c.f[i]) * (p.f[i] - c.f[i]);
        s += a * a * (p.f[3 + i] - c.f[3 + i]) * (p.f[3 + i] - c.f[3 + i]);
    }
    double pen = 0.0;
    if (p.has_n && c.has_n) {
        const double cosv = p.n[0] * c.n[0] + p.n[1] * c.n[1] + p.n[2] * c.n[2];
        pen = g * (1.0 - cosv);
    }
    return std::sqrt(s) + pen;
}

std::vector<int> lloyd(const std::vector<OraclePoint>& pts, std::vector<OraclePoint> cents, double ps, double a,
                       double g) {
    const std::size_t k = cents.size();
    std::vector<int> assign(pts.size(), -1);
    for (int iter = 0; iter < 1000; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            int best = 0;
            double bf = oracle_f(pts[i], cents[0], ps, a, g);
            for (std::size_t j = 1; j < k; ++j) {
                const double fj = oracle_f(pts[i], cents[j], ps, a, g);
                if (fj < bf) {
                    bf = fj;
                    best = int(j);
                }
            }
            changed |= assign[i] != best;
            assign[i] = best;
        }
        if (!changed) {
            break;
        }
        for (std::size_t j = 0; j < k; ++j) {
            OraclePoint m{};
            double cnt = 0.0, ncnt = 0.0;
            for (std::size_t i = 0; i < pts.size(); ++i) {
                if (assign[i] != int(j)) {
                    continue;
                }
                cnt += 1.0;
                for (int d = 0; d < 6; ++d) {
                    m.f[d] += pts[i].f[d];
                }
                if (pts[i].has_n) {
                    ncnt += 1.0;
                    for (int d = 0; d < 3; ++d) {
                        m.n[d] += pts[i].n[d];
                    }
                }
            }
            if (cnt == 0.0) {
                continue;
            }
            for (double& v : m.f) {
                v /= cnt;
            }
            const double len = std::sqrt(m.n[0] * m.n[0] + m.n[1] * m.n[1] + m.n[2] * m.n[2]);
            m.has_n = ncnt > 0.0 && len > 1e-6;
            for (double& v : m.n) {
                v = m.has_n ? v / len : 0.0;
            }
            cents[j] = m;
        }
    }
    return assign;
}

// True when the partition matches the generating blobs up to relabeling.
bool recovers_blobs(const std::vector<int>& assign, const std::vector<std::size_t>& blob, std::size_t k) {
    std::vector<int> blob_of(k, -1), cluster_of(k, -1);
    for (std::size_t i = 0; i < assign.size(); ++i) {
        const auto c = std::size_t(assign[i]);
        if (blob_of[c] < 0 && cluster_of[blob[i]] < 0) {
            blob_of[c] = int(blob[i]);
            cluster_of[blob[i]] = int(c);
        }
        if (blob_of[c] != int(blob[i]) || cluster_of[blob[i]] != int(c)) {
            return false;
        }
    }
    return true;
}

// Well-posed instances (the shared seeds hold exactly one point of each blob and
// the Lloyd solution is the generating partition) must match exactly. A seed pair
// inside one blob lets the lagging streaming labels settle in a different local
// optimum than Lloyd, so agreement there is reported only.
Outcome oracle_equivalence() {
    std::mt19937_64 rng(2024);
    const int instances = 200;
    int posed = 0, posed_agree = 0, other = 0, other_agree = 0;
    std::size_t iterations = 0;
    std::string why;
    for (int inst = 0; inst < instances; ++inst) {
        const std::size_t k = 2 + rng() % 5;
        const std::size_t n = 100 + rng() % 401;
        std::uniform_real_distribution<double> pos(-4.0, 4.0), col(0.0, 255.0);
        std::normal_distribution<double> jitter(0.0, 1.0);
        const double spread = std::uniform_real_distribution<double>(0.1, 0.5)(rng);
        std::vector<Vec3> centers, colors, normals;
        while (centers.size() < k) {
            const Vec3 cand{pos(rng), pos(rng), 2.0 + pos(rng)};
            if (std::all_of(centers.begin(), centers.end(), [&](const Vec3& c) { return norm(cand - c) >= 1.0; })) {
                centers.push_back(cand);
            }
        }
        for (std::size_t b = 0; b < k; ++b) {
            colors.push_back({col(rng), col(rng), col(rng)});
            Vec3 nv{jitter(rng), jitter(rng), -std::abs(jitter(rng)) - 0.5};
            normals.push_back(nv * (1.0 / norm(nv)));
        }
        OrganizedCloud cloud;
        cloud.width = n;
        cloud.height = 1;
        std::vector<OraclePoint> opts;
        std::vector<std::size_t> blob;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t b = i % k;
            blob.push_back(b);
            CloudPoint p;
            p.valid = true;
            p.col = i;
            p.position = centers[b] + Vec3{jitter(rng), jitter(rng), jitter(rng)} * spread;
            p.color = colors[b] + Vec3{jitter(rng), jitter(rng), jitter(rng)} * 4.0;
            p.has_normal = i % 7 != 0;
            if (p.has_normal) {
                Vec3 nv = normals[b] + Vec3{jitter(rng), jitter(rng), jitter(rng)} * 0.05;
                p.normal = nv * (1.0 / norm(nv));
            }
            cloud.points.push_back(p);
            opts.push_back({{p.position.x, p.position.y, p.position.z, p.color.x, p.color.y, p.color.z},
                            {p.normal.x, p.normal.y, p.normal.z},
                            p.has_normal});
        }
        ClusterParams params;
        params.k = k;
        params.alpha = 0.01;
        params.pos_scale = 0.99;
        params.gamma = 0.01;
        const std::uint64_t seed = rng();
        auto centroids = seed_kmeanspp(cloud.points, k, seed, params);

        std::vector<OraclePoint> oseeds;
        for (const auto& c : centroids) {
            oseeds.push_back({{c.position.x, c.position.y, c.position.z, c.color.x, c.color.y, c.color.z},
                              {c.normal.x, c.normal.y, c.normal.z},
                              c.has_normal});
        }
        const auto expect = lloyd(opts, oseeds, params.pos_scale, params.alpha, params.gamma);

        WeightState state(n, k);
        IterationClock clock;
        bool fixpoint = false;
        for (int it = 0; it < 5000 && !fixpoint; ++it, ++iterations) {
            const auto before = state.labels();
            step_frame(cloud, state, centroids, clock, params);
            fixpoint = before == state.labels();
            for (std::size_t i = 0; fixpoint && i < n; ++i) {
                fixpoint = std::int32_t(nearest_centroid(cloud.points[i], centroids, params)) == state.label(i);
            }
        }
        bool same = fixpoint;
        for (std::size_t i = 0; same && i < n; ++i) {
            same = state.label(i) == expect[i];
        }
        std::vector<int> seeds_in_blob(k, 0);
        for (const auto& c : oseeds) {
            for (std::size_t i = 0; i < n; ++i) {
                if (cloud.points[i].position == Vec3{c.f[0], c.f[1], c.f[2]}) {
                    ++seeds_in_blob[blob[i]];
                    break;
                }
            }
        }
        const bool one_seed_each =
            std::all_of(seeds_in_blob.begin(), seeds_in_blob.end(), [](int v) { return v == 1; });
        if (one_seed_each && recovers_blobs(expect, blob, k)) {
            ++posed;
            posed_agree += same;
            if (!same && why.empty()) {
                why = " (first mismatch: instance " + std::to_string(inst) + (fixpoint ? ")" : ", no fixpoint)");
            }
        } else {
            ++other;
            other_agree += same;
        }
    }
    return {posed >= 10 && posed_agree == posed,
            std::to_string(posed_agree) + "/" + std::to_string(posed) +
                " well-posed instances identical to Lloyd k-means" + why + "; " + std::to_string(other_agree) + "/" +
                std::to_string(other) + " remaining instances also identical (reported only)" +
                fmt("; %.0f iterations in total", double(iterations))};
}

// 4. monotone takeover and psi-scale invariance on replayed win sequences
Outcome takeover_and_scale() {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int takeover_ok = 0, scale_ok = 0;
    const int trials = 2000;
    for (int t = 0; t < trials; ++t) {
        const std::size_t k = 2 + rng() % 10;
        const std::size_t i = rng() % k;
        const std::size_t j = (i + 1 + rng() % (k - 1)) % k;
        const std::size_t n = rng() % 50;
        const std::size_t m = n + 1 + rng() % 50;
        const double psi = 1e-3 + (1.0 - 1e-3) * unit(rng);
        WeightState s(1, k);
        for (std::size_t a = 0; a < n; ++a) {
            update_weights(s, 0, i, psi);
            normalize_weights(s, 0);
        }
        for (std::size_t a = 0; a < m; ++a) {
            update_weights(s, 0, j, psi);
            normalize_weights(s, 0);
        }
        takeover_ok += s.label(0) == std::int32_t(j);

        // arbitrary win sequence replayed with psi and c * psi
        const double c = std::exp(std::uniform_real_distribution<double>(-6.0, 6.0)(rng));
        const double base = std::min(1.0, 1.0 / c) * (0.05 + 0.95 * unit(rng));
        WeightState x(1, k), y(1, k);
        bool same = true;
        const std::size_t len = 1 + rng() % 200;
        for (std::size_t a = 0; a < len; ++a) {
            const std::size_t w = rng() % k;
            update_weights(x, 0, w, base);
            update_weights(y, 0, w, base * c);
            normalize_weights(x, 0);
            normalize_weights(y, 0);
            same &= x.label(0) == y.label(0);
        }
        scale_ok += same;
    }
    return {takeover_ok == trials && scale_ok == trials,
            fmt("takeover %.0f/%.0f, psi rescaling %.0f/2000 label sequences unchanged", takeover_ok, trials,
                scale_ok)};
}

// 5. three solid objects on a wall, k = 4, 15 iterations. Accuracy over object
// pixels is the library score; the wall is additionally counted as a fourth class.
Outcome desk_scene() {
    const auto intr = small_camera(128, 106);
    const auto seq = generate_synthetic_scene(three_object_scene(1), intr, 0);
    const auto cloud = prepare(seq.frames[0], intr);
    LabelRaster with_wall = seq.truth[0];
    for (std::size_t i = 0; i < with_wall.size(); ++i) {
        if (with_wall[i] == kNoLabel && cloud.points[i].valid) {
            with_wall[i] = 254;
        }
    }
    int good = 0;
    std::string accs;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        PipelineConfig cfg;
        cfg.k = 4;
        cfg.alpha = 0.1;
        cfg.threads = 1;
        StreamingClusterer c(cfg.cluster_params(), seed);
        for (int it = 0; it < 15; ++it) {
            c.process(cloud);
        }
        const auto labels = label_raster(cloud, c.state());
        const double objects = score_frame(labels, seq.truth[0]).accuracy;
        const double all = score_frame(labels, with_wall).accuracy;
        good += objects >= 0.95 && all >= 0.95;
        accs += fmt(" %.3f/%.3f", objects, all);
    }
    return {good >= 8, std::to_string(good) + "/10 seeds reach accuracy >= 0.95 (objects/objects+wall):" + accs};
}

// 6. sphere entering at frame 5 acquires its own stable cluster
Outcome entering_object() {
    const auto intr = small_camera(128, 106);
    const auto spec = entering_sphere_scene(20);
    const auto seq = generate_synthetic_scene(spec, intr, 0);
    std::vector<OrganizedCloud> clouds;
    for (const auto& f : seq.frames) {
        clouds.push_back(prepare(f, intr));
    }
    int good = 0;
    std::string detail;
    const int seeds = 10;
    for (std::uint64_t seed = 1; seed <= std::uint64_t(seeds); ++seed) {
        PipelineConfig cfg;
        cfg.k = 10;
        cfg.alpha = 0.05;
        cfg.threads = 1;
        StreamingClusterer c(cfg.cluster_params(), seed);
        double iou15 = 0.0;
        bool stable = true;
        int cluster15 = -1;
        for (std::size_t f = 0; f < clouds.size(); ++f) {
            c.process(clouds[f]);
            if (f < 15) {
                continue;
            }
            // seed the mask at the truth sphere's pixel centroid
            const auto& truth = seq.truth[f];
            double sr = 0, sc = 0, cnt = 0;
            for (std::size_t r = 0; r < truth.height(); ++r) {
                for (std::size_t col = 0; col < truth.width(); ++col) {
                    if (truth.at(r, col) == 2) {
                        sr += double(r);
                        sc += double(col);
                        cnt += 1;
                    }
                }
            }
            const PixelCoord px{std::size_t(std::lround(sr / cnt)), std::size_t(std::lround(sc / cnt))};
            double iou = 0.0;
            int cluster = -1;
            try {
                const auto mask = extract_object_mask(clouds[f], c.state(), px);
                double inter = 0, uni = 0;
                for (std::size_t i = 0; i < truth.size(); ++i) {
                    const bool a = mask.mask[i] == 1, b = truth[i] == 2;
                    inter += a && b;
                    uni += a || b;
                }
                iou = inter / uni;
                cluster = mask.cluster_id;
            } catch (const InvalidSeed&) {
            }
            if (f == 15) {
                iou15 = iou;
                cluster15 = cluster;
            }
            stable &= cluster == cluster15 && iou >= 0.8;
        }
        good += iou15 >= 0.8 && stable;
        detail += fmt(" %.3f", iou15) + (stable ? "" : "(unstable)");
    }
    return {good >= 8, std::to_string(good) + "/" + std::to_string(seeds) +
                           " seeds (need 8): IoU at frame 15, held through frame 19:" + detail};
}

// 7. runtime and accumulator storage grow with k
Outcome k_sweep_shape() {
    const CameraIntrinsics intr = small_camera(512, 424);
    const auto seq = generate_synthetic_scene(three_object_scene(1), intr, 0);
    const std::vector<RawFrame> frames{{seq.frames[0].color, seq.frames[0].depth, 0}};
    PipelineConfig cfg;
    cfg.threads = 1;
    const std::vector<std::size_t> ks{2, 10, 25, 50};
    const auto report = sweep_k(frames, intr, ks, cfg, 5);
    bool increasing = true;
    std::string detail;
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        const auto& r = report.rows[i];
        if (i > 0) {
            increasing &= r.seconds_per_frame > report.rows[i - 1].seconds_per_frame;
            increasing &= r.accumulator_bytes > report.rows[i - 1].accumulator_bytes;
        }
        detail += " k=" + std::to_string(r.k) + fmt(": %.1f ms %.2f fps", r.seconds_per_frame * 1e3, r.fps_mean) +
                  " delta=" + std::to_string(r.accumulator_bytes) + "B peak_rss=" + std::to_string(r.peak_mem_bytes) +
                  "B;";
    }
    return {increasing, "strictly increasing=" + std::string(increasing ? "yes" : "no") + ";" + detail};
}

// 8. plane normals within 2 degrees for tilts up to 45 degrees
Outcome plane_normals() {
    const auto intr = small_camera(128, 106);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> tilt(0.0, 45.0), az(0.0, 2.0 * std::numbers::pi);
    double worst = 0.0;
    std::size_t checked = 0;
    std::vector<double> tilts{0.0, 45.0};
    for (int i = 0; i < 30; ++i) {
        tilts.push_back(tilt(rng));
    }
    for (const double t_deg : tilts) {
        const double t = t_deg * std::numbers::pi / 180.0;
        const double phi = az(rng);
        const Vec3 truth{std::sin(t) * std::cos(phi), std::sin(t) * std::sin(phi), -std::cos(t)};
        SyntheticSceneSpec spec;
        spec.background_depth.reset();
        spec.objects = {plane({0.0, 0.0, 2.5}, truth, 100.0, {90, 90, 90})};
        auto cloud = build_cloud(generate_synthetic_scene(spec, intr, 0).frames[0], Projection{intr});
        compute_normals(cloud);
        for (std::size_t r = 1; r + 1 < cloud.height; ++r) {
            for (std::size_t c = 1; c + 1 < cloud.width; ++c) {
                const auto& p = cloud.at(r, c);
                if (!p.has_normal) {
                    return {false, "interior pixel without a normal"};
                }
                const double ang = std::acos(std::clamp(dot(p.normal, truth), -1.0, 1.0)) * 180.0 / std::numbers::pi;
                worst = std::max(worst, ang);
                ++checked;
            }
        }
    }
    return {worst <= 2.0, fmt("%.0f interior normals over %.0f orientations, worst error %.2e deg", double(checked),
                              double(tilts.size()), worst)};
}

// 9. identical runs give identical bytes
Outcome determinism() {
    TempDir dir;
    const auto intr = small_camera(96, 80);
    auto spec = entering_sphere_scene(10);
    spec.depth_noise = 0.01;
    spec.color_noise = 5.0;
    const auto manifest = write_synthetic_dataset(generate_synthetic_scene(spec, intr, 4), intr, dir / "data");
    PipelineConfig cfg;
    cfg.k = 6;
    cfg.threads = 1;
    cfg.rng_seed = 12345;
    std::ostringstream log_a, log_b;
    run_dataset(cfg, manifest, dir / "a", log_a);
    run_dataset(cfg, manifest, dir / "b", log_b);
    std::size_t compared = 0;
    for (std::size_t i = 0; i < manifest.frame_count(); ++i) {
        for (const auto& name : {numbered("frame", i, "ply"), numbered("labels", i, "png")}) {
            const auto a = read_file(dir / "a" / name);
            const auto b = read_file(dir / "b" / name);
            if (a.empty() || a != b) {
                return {false, name + " differs between runs"};
            }
            ++compared;
        }
    }
    return {true, std::to_string(compared) + " output files byte-identical across two runs"};
}

struct Criterion {
    int id;
    const char* name;
    double limit_seconds; // 0: no runtime bound
    std::function<Outcome()> run;
};

} // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "back-projection round trip", 1.0, back_projection_exactness},
        {2, "weight simplex invariant", 5.0, simplex_invariant},
        {3, "Lloyd oracle equivalence", 10.0, oracle_equivalence},
        {4, "monotone takeover and psi scaling", 1.0, takeover_and_scale},
        {5, "three-object scene accuracy", 30.0, desk_scene},
        {6, "entering object mask", 60.0, entering_object},
        {7, "runtime and storage versus k", 0.0, k_sweep_shape},
        {8, "plane normal accuracy", 5.0, plane_normals},
        {9, "deterministic outputs", 0.0, determinism},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = Clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(Clock::now() - start).count();
        const bool in_time = c.limit_seconds <= 0.0 || secs < c.limit_seconds;
        const bool pass = o.pass && in_time;
        failures += !pass;
        std::printf("criterion %d %-36s %s  [%.2f s%s] %s\n", c.id, c.name, pass ? "PASS" : "FAIL", secs,
                    c.limit_seconds > 0.0 ? fmt(" / limit %.0f s", c.limit_seconds).c_str() : "",
                    o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", int(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
