// Command-line front end: run | gen | bench | score | mask.
//
// Exit codes: 0 success, 2 invalid configuration or usage, 3 dataset error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wcluster/wcluster.hpp"

namespace fs = std::filesystem;
using namespace wcluster;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDataset = 3;

// Valued pipeline flags; each one shares its name with a config-file key.
const char* const kValueFlags[] = {"k",         "alpha",     "pos-scale",  "gamma", "psi",   "inner-iters",
                                   "depth-min", "depth-max", "stride",     "fov-preset", "fov-x", "fov-y",
                                   "rng-seed",  "threads"};
const std::pair<const char*, const char*> kSwitchFlags[] = {
    {"freeze-centroids", "keep the k-means++ seeds fixed for the whole run"},
    {"legacy-width-on-y", "divide the vertical pixel term by the raster width"},
    {"pre-aligned", "color rasters already share the depth grid"}};

struct PipelineFlags {
    std::optional<std::string> config_path;
    std::map<std::string, std::string> values;
    std::map<std::string, bool> switches;
};

void add_pipeline_flags(CLI::App* cmd, PipelineFlags& flags) {
    cmd->add_option("--config", flags.config_path, "flat key = value config file; flags override it");
    for (const char* name : kValueFlags) {
        cmd->add_option_function<std::string>(
            std::string("--") + name, [&flags, name](const std::string& v) { flags.values[name] = v; },
            std::string("override config key ") + name);
    }
    for (const auto& [name, help] : kSwitchFlags) {
        cmd->add_flag_callback(std::string("--") + name, [&flags, name = name] { flags.switches[name] = true; }, help);
    }
}

PipelineConfig resolve_config(const PipelineFlags& flags) {
    PipelineConfig cfg = flags.config_path ? load_config(*flags.config_path) : PipelineConfig{};
    for (const auto& [key, value] : flags.values) {
        cfg.set(key, value);
    }
    for (const auto& [key, on] : flags.switches) {
        cfg.set(key, on ? "true" : "false");
    }
    cfg.validate();
    return cfg;
}

std::vector<std::size_t> parse_k_values(const std::string& text) {
    std::vector<std::size_t> out;
    for (const auto& part : split(text, ',')) {
        const auto v = to_integer(part);
        if (!v || *v < 0) {
            throw ConfigError("--k-values expects a comma separated list of integers");
        }
        out.push_back(std::size_t(*v));
    }
    return out;
}

PixelCoord parse_pixel(const std::string& text) {
    const auto parts = split(text, ',');
    const auto r = parts.size() == 2 ? to_integer(parts[0]) : std::nullopt;
    const auto c = parts.size() == 2 ? to_integer(parts[1]) : std::nullopt;
    if (!r || !c || *r < 0 || *c < 0) {
        throw ConfigError("--seed-pixel expects row,col");
    }
    return {std::size_t(*r), std::size_t(*c)};
}

int cmd_run(const PipelineFlags& flags, const std::string& manifest_path, const std::string& out_dir) {
    const PipelineConfig cfg = resolve_config(flags);
    const DatasetManifest manifest = load_manifest(manifest_path);
    run_dataset(cfg, manifest, out_dir, std::cout);
    return 0;
}

int cmd_gen(const std::string& scene_path, const std::string& out_dir) {
    const SceneFile scene = load_scene(scene_path);
    const auto seq = generate_synthetic_scene(scene.spec, scene.intrinsics, scene.seed);
    const auto manifest = write_synthetic_dataset(seq, scene.intrinsics, out_dir);
    std::cout << "wrote " << manifest.frame_count() << " frames to " << (fs::path(out_dir) / "manifest.txt").string()
              << "\n";
    return 0;
}

int cmd_bench(const PipelineFlags& flags, const std::string& manifest_path, const std::string& k_text,
              std::size_t repetitions, const std::optional<std::string>& csv_path) {
    const PipelineConfig cfg = resolve_config(flags);
    const DatasetManifest manifest = load_manifest(manifest_path);
    const auto k_values = parse_k_values(k_text);
    const BenchReport report = sweep_k(manifest, k_values, cfg, repetitions);
    std::cerr << "machine: " << report.machine << "\n";
    if (csv_path) {
        std::ofstream out(*csv_path);
        if (!out) {
            throw DatasetError(DatasetError::Kind::Io, "cannot write " + *csv_path);
        }
        write_bench_csv(report, out);
    } else {
        write_bench_csv(report, std::cout);
    }
    return 0;
}

int cmd_score(const std::string& manifest_path, const std::string& labels_dir) {
    const DatasetManifest manifest = load_manifest(manifest_path);
    std::vector<LabelRaster> labels;
    std::vector<LabelRaster> truth;
    for (std::size_t i = 0; i < manifest.frame_count(); ++i) {
        truth.push_back(read_truth_labels(manifest, i));
        labels.push_back(png::read_gray8((fs::path(labels_dir) / numbered("labels", i, "png")).string()));
    }
    const QualityReport report = score_against_truth(labels, truth);
    for (const auto& w : report.warnings) {
        std::cerr << "warning: " << w << "\n";
    }
    std::cout << "frame,accuracy\n";
    for (std::size_t i = 0; i < report.frames.size(); ++i) {
        std::cout << i << ',' << report.frames[i].accuracy;
        for (const auto& c : report.frames[i].classes) {
            std::cout << ",class" << int(c.truth_label) << "_iou=" << c.iou;
        }
        std::cout << "\n";
    }
    std::cout << "mean," << report.mean_accuracy << "\n";
    return 0;
}

int cmd_mask(const std::string& labels_path, const std::string& seed_text, const std::string& out_path) {
    const LabelRaster labels = png::read_gray8(labels_path);
    const ObjectMask mask = extract_object_mask(labels, parse_pixel(seed_text));
    export_mask(mask, out_path);
    std::cout << "cluster " << int(mask.cluster_id) << ": " << mask.area() << " pixels\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Streaming weighted k-means for organized RGB-D point clouds"};
    app.require_subcommand(1);

    PipelineFlags run_flags;
    std::string run_manifest;
    std::string run_out;
    auto* run = app.add_subcommand("run", "cluster a dataset, writing per-frame PLY and label rasters");
    run->add_option("--manifest", run_manifest, "dataset manifest")->required();
    run->add_option("--out", run_out, "output directory")->required();
    add_pipeline_flags(run, run_flags);

    std::string gen_scene;
    std::string gen_out;
    auto* gen = app.add_subcommand("gen", "render a synthetic scene description to a dataset");
    gen->add_option("--scene", gen_scene, "scene description file")->required();
    gen->add_option("--out", gen_out, "output directory")->required();

    PipelineFlags bench_flags;
    std::string bench_manifest;
    std::string bench_k = "2,10,25,50";
    std::size_t bench_reps = 3;
    std::optional<std::string> bench_csv;
    auto* bench = app.add_subcommand("bench", "frame rate and memory versus k");
    bench->add_option("--manifest", bench_manifest, "dataset manifest")->required();
    bench->add_option("--k-values", bench_k, "comma separated, strictly increasing")->capture_default_str();
    bench->add_option("--repetitions", bench_reps, "runs per k")->capture_default_str();
    bench->add_option("--csv", bench_csv, "write the report here instead of stdout");
    add_pipeline_flags(bench, bench_flags);

    std::string score_manifest;
    std::string score_labels;
    auto* score = app.add_subcommand("score", "best-match accuracy of label rasters against ground truth");
    score->add_option("--manifest", score_manifest, "dataset manifest with truth rasters")->required();
    score->add_option("--labels-dir", score_labels, "directory holding labels_NNNNNN.png")->required();

    std::string mask_labels;
    std::string mask_seed;
    std::string mask_out;
    auto* mask = app.add_subcommand("mask", "extract the object under a seed pixel from a label raster");
    mask->add_option("--labels", mask_labels, "label raster PNG")->required();
    mask->add_option("--seed-pixel", mask_seed, "row,col")->required();
    mask->add_option("--out", mask_out, "mask PNG to write")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*run) {
            return cmd_run(run_flags, run_manifest, run_out);
        }
        if (*gen) {
            return cmd_gen(gen_scene, gen_out);
        }
        if (*bench) {
            return cmd_bench(bench_flags, bench_manifest, bench_k, bench_reps, bench_csv);
        }
        if (*score) {
            return cmd_score(score_manifest, score_labels);
        }
        if (*mask) {
            return cmd_mask(mask_labels, mask_seed, mask_out);
        }
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const InvalidSeed& e) {
        std::cerr << "invalid seed: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DatasetError& e) {
        std::cerr << "dataset error: " << e.what() << "\n";
        return kExitDataset;
    } catch (const ClusterError& e) {
        std::cerr << "clustering error: " << e.what() << "\n";
        return kExitDataset;
    }
    return 0;
}
