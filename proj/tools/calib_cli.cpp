// Command-line surface for the single-image calibration pipeline:
// detect, calibrate, synth, eval, train-zs, train-fs, sweep.
//
// Exit codes: 0 success, 1 error, 2 degraded calibration, 64 usage.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "calib/image.hpp"
#include "calib/json_io.hpp"
#include "calib/lsd.hpp"
#include "calib/metrics.hpp"
#include "calib/pipeline.hpp"
#include "calib/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace calib;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitDegraded = 2;
constexpr int kExitUsage = 64;
constexpr int kLowRes = 224;

struct PipelineOptions {
    pipeline::PipelineConfig cfg;
    std::string mode = "deterministic";
    std::string scorer = "fallback";
    std::string zs_params_path;
    std::string frame_scorer_path;

    std::optional<zsnet::ScorerParams> net;
    std::optional<framescore::FrameScorerModel> frame_model;

    void attach(CLI::App* cmd) {
        cmd->add_option("--seed", cfg.seed, "RNG seed (all sampling derives from it)")
            ->capture_default_str();
        cmd->add_option("--delta-z-deg", cfg.zenith.delta_z_deg,
                        "vertical-line angle gate, degrees from horizontal")
            ->capture_default_str();
        cmd->add_option("--delta-p-deg", cfg.zenith.delta_p_deg, "positive label threshold")
            ->capture_default_str();
        cmd->add_option("--delta-n-deg", cfg.zenith.delta_n_deg, "negative label threshold")
            ->capture_default_str();
        cmd->add_option("--delta-c", cfg.zenith.delta_c, "zenith selection threshold")
            ->capture_default_str();
        cmd->add_option("--n-lines", cfg.zenith.n_lines, "max vertical lines |L_z|")
            ->capture_default_str();
        cmd->add_option("--n-zenith", cfg.zenith.n_candidates, "zenith candidates |Z|")
            ->capture_default_str();
        cmd->add_option("--n-frames", cfg.frames.n_frames, "frame hypotheses to draw")
            ->capture_default_str();
        cmd->add_option("--min-frames", cfg.frames.min_frames, "minimum valid hypotheses")
            ->capture_default_str();
        cmd->add_option("--junction-radius", cfg.frames.junction_radius,
                        "junction adjacency radius, px")
            ->capture_default_str();
        cmd->add_option("--vert-closeness-deg", cfg.frames.vert_closeness_deg,
                        "zenith-vanishing classification tolerance, degrees")
            ->capture_default_str();
        cmd->add_option("--max-pitch-deg", cfg.frames.max_pitch_deg,
                        "reject hypotheses pitched beyond this (0 disables)")
            ->capture_default_str();
        cmd->add_option("--min-pair-angle-deg", cfg.frames.min_pair_angle_deg,
                        "reject near-parallel segment pairs (0 disables)")
            ->capture_default_str();
        cmd->add_option("--hyp-fov-min-deg", cfg.frames.fov_min_deg,
                        "reject hypotheses below this vertical FoV (0 disables)")
            ->capture_default_str();
        cmd->add_option("--hyp-fov-max-deg", cfg.frames.fov_max_deg,
                        "reject hypotheses above this vertical FoV (0 disables)")
            ->capture_default_str();
        cmd->add_option("--sigma", cfg.score.sigma, "similarity bell width")
            ->capture_default_str();
        cmd->add_option("--delta-s", cfg.score.delta_s, "similarity label threshold")
            ->capture_default_str();
        cmd->add_option("--k", cfg.score.k, "top-k aggregation size")->capture_default_str();
        cmd->add_option("--min-length", cfg.detector.min_length, "segment length gate, px")
            ->capture_default_str();
        cmd->add_option("--angle-tol-deg", cfg.detector.angle_tol_deg,
                        "detector level-line tolerance")
            ->capture_default_str();
        cmd->add_option("--density-min", cfg.detector.density_min, "detector region density gate")
            ->capture_default_str();
        cmd->add_option("--fallback-tol-deg", cfg.fallback_tol_deg,
                        "consensus tolerance of the fallback zenith scorer")
            ->capture_default_str();
        cmd->add_option("--mode", mode, "deterministic | oracle")
            ->check(CLI::IsMember({"deterministic", "oracle"}))
            ->capture_default_str();
        cmd->add_option("--scorer", scorer, "zenith scorer: fallback | zsnet")
            ->check(CLI::IsMember({"fallback", "zsnet"}))
            ->capture_default_str();
        cmd->add_option("--zs-params", zs_params_path, "trained zenith scorer parameters (JSON)");
        cmd->add_option("--frame-scorer", frame_scorer_path,
                        "optional lightweight frame scorer model (JSON)");
    }

    void finalize() {
        cfg.mode = mode == "oracle" ? framescore::ScoreMode::oracle
                                    : framescore::ScoreMode::deterministic;
        if (scorer == "zsnet") {
            if (zs_params_path.empty())
                throw CLI::ValidationError("--scorer zsnet requires --zs-params");
            net = scorer_from_json(load_json(zs_params_path));
        }
        if (!frame_scorer_path.empty())
            frame_model = frame_scorer_from_json(load_json(frame_scorer_path));
    }

    json effective_config() const {
        json j;
        j["seed"] = cfg.seed;
        j["delta_z_deg"] = cfg.zenith.delta_z_deg;
        j["delta_p_deg"] = cfg.zenith.delta_p_deg;
        j["delta_n_deg"] = cfg.zenith.delta_n_deg;
        j["delta_c"] = cfg.zenith.delta_c;
        j["n_lines"] = cfg.zenith.n_lines;
        j["n_zenith"] = cfg.zenith.n_candidates;
        j["n_frames"] = cfg.frames.n_frames;
        j["min_frames"] = cfg.frames.min_frames;
        j["junction_radius"] = cfg.frames.junction_radius;
        j["vert_closeness_deg"] = cfg.frames.vert_closeness_deg;
        j["max_pitch_deg"] = cfg.frames.max_pitch_deg;
        j["min_pair_angle_deg"] = cfg.frames.min_pair_angle_deg;
        j["hyp_fov_min_deg"] = cfg.frames.fov_min_deg;
        j["hyp_fov_max_deg"] = cfg.frames.fov_max_deg;
        j["sigma"] = cfg.score.sigma;
        j["delta_s"] = cfg.score.delta_s;
        j["k"] = cfg.score.k;
        j["min_length"] = cfg.detector.min_length;
        j["angle_tol_deg"] = cfg.detector.angle_tol_deg;
        j["density_min"] = cfg.detector.density_min;
        j["fallback_tol_deg"] = cfg.fallback_tol_deg;
        j["mode"] = mode;
        j["scorer"] = scorer;
        if (!zs_params_path.empty()) j["zs_params"] = zs_params_path;
        if (!frame_scorer_path.empty()) j["frame_scorer"] = frame_scorer_path;
        return j;
    }
};

std::vector<Segment> segments_from_image(const std::string& path,
                                         const lsd::DetectorConfig& dcfg) {
    const GrayImage full = read_image(path);
    const GrayImage low = downsample(full, kLowRes, kLowRes);
    return lsd::detect_segments(low, dcfg);
}

double round6(double v) { return v; }

json result_to_json(const pipeline::CalibrationOutput& out, const PipelineOptions& opts) {
    const double r2d = 180.0 / 3.14159265358979323846;
    json j;
    j["f_px"] = round6(out.camera.f);
    j["fov_deg"] = round6(out.camera.vertical_fov_deg());
    j["pitch_deg"] = round6(out.camera.psi * r2d);
    j["roll_deg"] = round6(out.camera.phi * r2d);
    j["yaw_deg"] = round6(out.camera.theta * r2d);
    auto y_at = [&](double x) {
        return -(out.horizon.a * x + out.horizon.c) / out.horizon.b / out.camera.height;
    };
    if (out.horizon.b != 0.0) {
        j["horizon"] = {{"left_y_norm", y_at(0.0)},
                        {"right_y_norm", y_at(static_cast<double>(out.camera.width))}};
    } else {
        j["horizon"] = {{"left_y_norm", nullptr}, {"right_y_norm", nullptr}};
    }
    j["score"] = out.score;
    j["mode"] = out.mode_label;
    j["degraded"] = out.degraded;
    j["notes"] = out.notes;
    j["stats"] = {{"n_lines", out.n_lines},
                  {"n_zenith_candidates", out.n_candidates},
                  {"n_selected", out.n_selected},
                  {"n_hypotheses", out.n_hypotheses},
                  {"frame_shortfall", out.frame_shortfall}};
    j["config"] = opts.effective_config();
    return j;
}

void dump_maps(const fs::path& dir, const std::vector<Segment>& segments,
               const pipeline::CalibrationOutput& out, const GrayImage* image) {
    fs::create_directories(dir);
    const PseudoIntrinsics pi = PseudoIntrinsics::for_image(kLowRes, kLowRes);
    const GrayImage line_map = framescore::rasterize(segments, kLowRes, kLowRes);
    write_pgm(line_map, (dir / "line_map.pgm").string());
    if (out.best_index < 0) return;
    const auto& best = out.hypotheses[static_cast<std::size_t>(out.best_index)];
    const auto maps = framescore::activation_maps(segments, pi, best, kLowRes, kLowRes);
    const char* names[3] = {"activation_x.pgm", "activation_y.pgm", "activation_z.pgm"};
    for (int d = 0; d < 3; ++d) write_pgm(maps[static_cast<std::size_t>(d)], (dir / names[d]).string());

    const GrayImage gray = image ? *image : GrayImage(kLowRes, kLowRes, 0.0);
    const auto tensor = framescore::export_channels(gray, segments, pi, best);
    std::ofstream bin(dir / "channels.bin", std::ios::binary);
    bin.write(reinterpret_cast<const char*>(tensor.data()),
              static_cast<std::streamsize>(tensor.size() * sizeof(float)));
    json header;
    header["dtype"] = "float32";
    header["layout"] = "chw";
    header["height"] = kLowRes;
    header["width"] = kLowRes;
    header["channels"] = 17;
    header["channel_names"] = framescore::channel_names();
    save_json(header, (dir / "channels.json").string());
}

// ------------------------------------------------------------------ synth

int cmd_synth(const std::string& out_dir, int n_scenes, synth::SynthConfig scfg, bool render) {
    fs::create_directories(out_dir);
    Rng rng(scfg.seed);
    for (int i = 0; i < n_scenes; ++i) {
        const synth::Scene scene = synth::generate_scene(scfg, rng);
        char name[32];
        std::snprintf(name, sizeof(name), "scene_%05d", i);
        const fs::path dir = fs::path(out_dir) / name;
        fs::create_directories(dir);
        write_segments(scene.segments, (dir / "segments.txt").string());
        save_json(annotation_to_json(scene.annotation), (dir / "gt.json").string());
        if (render)
            write_pgm(synth::render_wireframe(scene.segments, scfg.width, scfg.height),
                      (dir / "image.pgm").string());
    }
    std::cout << "wrote " << n_scenes << " scenes to " << out_dir << "\n";
    return kExitOk;
}

// ------------------------------------------------------------------- eval

struct DatasetScene {
    std::string name;
    std::vector<Segment> segments;
    synth::SceneAnnotation annotation;
};

std::vector<DatasetScene> load_dataset(const std::string& dir, int* skipped) {
    if (!fs::is_directory(dir)) throw EmptyInput("dataset directory not found: " + dir);
    std::vector<fs::path> scene_dirs;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_directory() && entry.path().filename().string().rfind("scene_", 0) == 0)
            scene_dirs.push_back(entry.path());
    std::sort(scene_dirs.begin(), scene_dirs.end());
    if (scene_dirs.empty()) throw EmptyInput("no scene_* directories in " + dir);

    std::vector<DatasetScene> out;
    for (const auto& sd : scene_dirs) {
        const fs::path gt = sd / "gt.json";
        if (!fs::exists(gt)) {
            std::cerr << "warning: missing gt.json in " << sd << ", skipped\n";
            if (skipped) ++*skipped;
            continue;
        }
        DatasetScene scene;
        scene.name = sd.filename().string();
        scene.annotation = annotation_from_json(load_json(gt.string()));
        scene.segments = read_segments((sd / "segments.txt").string());
        out.push_back(std::move(scene));
    }
    if (out.empty()) throw EmptyInput("no usable scenes in " + dir);
    return out;
}

struct EvalResult {
    std::vector<std::string> names;
    std::vector<metrics::EvalRecord> records;
    metrics::Summary summary;
};

EvalResult run_eval(const std::vector<DatasetScene>& scenes, const PipelineOptions& opts) {
    EvalResult r;
    pipeline::PipelineConfig cfg = opts.cfg;
    const std::uint64_t base_seed = cfg.seed;
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        cfg.seed = Rng::derive(base_seed, i).next_u64();
        const auto& scene = scenes[i];
        metrics::EvalRecord rec;
        try {
            const auto out = pipeline::run_calibration(
                scene.segments, scene.annotation.cam.width, scene.annotation.cam.height, cfg,
                &scene.annotation, opts.net ? &*opts.net : nullptr,
                opts.frame_model ? &*opts.frame_model : nullptr);
            rec = pipeline::evaluate_output(out, scene.annotation);
        } catch (const CalibError& e) {
            std::cerr << "warning: " << scene.name << ": " << e.what() << "\n";
            rec.angle_deg = rec.pitch_deg = rec.roll_deg = rec.fov_deg = 90.0;
            rec.horizon = std::numeric_limits<double>::infinity();
            rec.degraded = true;
        }
        r.names.push_back(scene.name);
        r.records.push_back(rec);
    }
    r.summary = metrics::summarize(r.records);
    return r;
}

std::string records_csv(const EvalResult& r) {
    std::string csv = "scene,angle_deg,pitch_deg,roll_deg,fov_deg,horizon,degraded\n";
    for (std::size_t i = 0; i < r.records.size(); ++i) {
        const auto& rec = r.records[i];
        csv += r.names[i] + "," + metrics::format_value(rec.angle_deg) + "," +
               metrics::format_value(rec.pitch_deg) + "," +
               metrics::format_value(rec.roll_deg) + "," +
               metrics::format_value(rec.fov_deg) + "," + metrics::format_value(rec.horizon) +
               "," + (rec.degraded ? "1" : "0") + "\n";
    }
    return csv;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    f << text;
}

int cmd_eval(const std::string& dataset, const std::string& out_dir, PipelineOptions& opts,
             bool with_svg) {
    int skipped = 0;
    const auto scenes = load_dataset(dataset, &skipped);
    const EvalResult r = run_eval(scenes, opts);
    fs::create_directories(out_dir);
    write_text(fs::path(out_dir) / "records.csv", records_csv(r));
    write_text(fs::path(out_dir) / "summary.csv", metrics::summary_csv(r.summary));
    std::vector<double> herr;
    for (const auto& rec : r.records) herr.push_back(rec.horizon);
    const auto curve = metrics::error_curve(herr);
    write_text(fs::path(out_dir) / "curve.csv", metrics::curve_csv(curve));
    if (with_svg) write_text(fs::path(out_dir) / "curve.svg", metrics::curve_svg(curve));
    std::cout << "scenes evaluated: " << r.records.size() << " (skipped " << skipped << ")\n"
              << metrics::summary_csv(r.summary);
    return kExitOk;
}

// ------------------------------------------------------------------ sweep

struct SweepAxis {
    std::string key;
    std::vector<double> values;
};

void apply_sweep_value(pipeline::PipelineConfig& cfg, const std::string& key, double v) {
    if (key == "delta-z") cfg.zenith.delta_z_deg = v;
    else if (key == "delta-p") cfg.zenith.delta_p_deg = v;
    else if (key == "delta-n") cfg.zenith.delta_n_deg = v;
    else if (key == "delta-c") cfg.zenith.delta_c = v;
    else if (key == "delta-s") cfg.score.delta_s = v;
    else if (key == "k") cfg.score.k = static_cast<int>(v);
    else if (key == "n-lines") cfg.zenith.n_lines = static_cast<int>(v);
    else if (key == "n-zenith") cfg.zenith.n_candidates = static_cast<int>(v);
    else if (key == "density-min") cfg.detector.density_min = v;
    else throw CLI::ValidationError("unknown sweep key: " + key);
}

int cmd_sweep(const std::string& dataset, const std::string& out_path,
              const std::vector<std::string>& vary, PipelineOptions& opts) {
    std::vector<SweepAxis> axes;
    for (const std::string& spec : vary) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos)
            throw CLI::ValidationError("--vary expects key=v1,v2,...: " + spec);
        SweepAxis axis;
        axis.key = spec.substr(0, eq);
        std::string rest = spec.substr(eq + 1);
        std::size_t pos = 0;
        while (pos <= rest.size()) {
            const auto comma = rest.find(',', pos);
            const std::string tok = rest.substr(pos, comma == std::string::npos ? std::string::npos
                                                                                : comma - pos);
            if (!tok.empty()) axis.values.push_back(std::stod(tok));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (axis.values.empty())
            throw CLI::ValidationError("--vary has no values: " + spec);
        axes.push_back(std::move(axis));
    }
    if (axes.empty()) axes.push_back({"k", {static_cast<double>(opts.cfg.score.k)}});

    int skipped = 0;
    const auto scenes = load_dataset(dataset, &skipped);

    std::string csv;
    for (const auto& axis : axes) csv += axis.key + ",";
    csv += "angle_mean,angle_median,pitch_mean,pitch_median,roll_mean,roll_median,"
           "fov_mean,fov_median,auc_percent,degraded_count\n";

    std::vector<std::size_t> idx(axes.size(), 0);
    bool done = false;
    while (!done) {
        PipelineOptions row_opts = opts;
        std::string prefix;
        for (std::size_t a = 0; a < axes.size(); ++a) {
            apply_sweep_value(row_opts.cfg, axes[a].key, axes[a].values[idx[a]]);
            prefix += metrics::format_value(axes[a].values[idx[a]]) + ",";
        }
        const EvalResult r = run_eval(scenes, row_opts);
        const auto& s = r.summary;
        csv += prefix + metrics::format_value(s.angle.mean) + "," +
               metrics::format_value(s.angle.median) + "," + metrics::format_value(s.pitch.mean) +
               "," + metrics::format_value(s.pitch.median) + "," +
               metrics::format_value(s.roll.mean) + "," + metrics::format_value(s.roll.median) +
               "," + metrics::format_value(s.fov.mean) + "," +
               metrics::format_value(s.fov.median) + "," + metrics::format_value(s.auc_percent) +
               "," + std::to_string(s.degraded_count) + "\n";

        // Advance the grid, last axis fastest.
        for (std::size_t a = axes.size(); a-- > 0;) {
            if (++idx[a] < axes[a].values.size()) break;
            idx[a] = 0;
            if (a == 0) done = true;
        }
    }
    if (out_path.empty()) {
        std::cout << csv;
    } else {
        write_text(out_path, csv);
        std::cout << "wrote sweep table to " << out_path << "\n";
    }
    return kExitOk;
}

// --------------------------------------------------------------- training

int cmd_train_zs(const std::string& dataset, const std::string& out_path,
                 zsnet::TrainConfig tcfg, zenith::ZenithConfig zcfg, std::uint64_t seed) {
    int skipped = 0;
    const auto scenes = load_dataset(dataset, &skipped);
    std::vector<zsnet::TrainBatch> batches;
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        zcfg.seed = Rng::derive(seed, i).next_u64();
        try {
            batches.push_back(pipeline::make_train_batch(
                scenes[i].segments, scenes[i].annotation.cam.width,
                scenes[i].annotation.cam.height, scenes[i].annotation.z_gt, zcfg));
        } catch (const CalibError& e) {
            std::cerr << "warning: " << scenes[i].name << ": " << e.what() << "\n";
        }
    }
    if (batches.empty()) throw EmptyInput("no trainable scenes in " + dataset);
    zsnet::ScorerParams params = zsnet::ScorerParams::init(seed);
    const zsnet::TrainHistory hist = zsnet::train(params, batches, tcfg);
    save_json(scorer_to_json(params), out_path);
    std::cout << "epoch,cls,loc\n";
    for (std::size_t e = 0; e < hist.cls.size(); ++e)
        std::cout << e << "," << metrics::format_value(hist.cls[e]) << ","
                  << metrics::format_value(hist.loc[e]) << "\n";
    std::cout << "batches: " << batches.size() << ", params written to " << out_path << "\n";
    return kExitOk;
}

int cmd_train_fs(const std::string& dataset, const std::string& out_path, PipelineOptions& opts) {
    int skipped = 0;
    const auto scenes = load_dataset(dataset, &skipped);
    const PseudoIntrinsics pi = PseudoIntrinsics::for_image(kLowRes, kLowRes);
    std::vector<std::pair<framescore::FrameFeatures, int>> data;
    pipeline::PipelineConfig cfg = opts.cfg;
    const std::uint64_t base_seed = cfg.seed;
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        cfg.seed = Rng::derive(base_seed, i).next_u64();
        try {
            const auto out = pipeline::run_calibration(scenes[i].segments, kLowRes, kLowRes,
                                                       cfg, &scenes[i].annotation);
            if (out.degraded) continue;
            framescore::SceneRaster raster(scenes[i].segments, pi, kLowRes, kLowRes);
            for (const auto& hyp : out.hypotheses) {
                const auto stats = raster.score(hyp);
                const auto sim = framescore::gt_similarity(hyp, scenes[i].annotation, cfg.score);
                data.push_back({framescore::make_features(stats, hyp.f_px, pi),
                                sim.label ? 1 : 0});
            }
        } catch (const CalibError& e) {
            std::cerr << "warning: " << scenes[i].name << ": " << e.what() << "\n";
        }
    }
    if (data.empty()) throw EmptyInput("no hypotheses collected from " + dataset);
    const auto model = framescore::train_frame_scorer(data);
    save_json(frame_scorer_to_json(model), out_path);
    std::cout << "samples: " << data.size() << ", model written to " << out_path << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Single-image camera calibration from line segments"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value configuration file (flags override)");

    // ---- detect
    auto* detect = app.add_subcommand("detect", "Detect line segments in an image");
    std::string detect_image, detect_out = "-";
    lsd::DetectorConfig detect_cfg;
    detect->add_option("--image", detect_image, "input image (PGM P5; PNG optional)")
        ->required();
    detect->add_option("--out", detect_out, "output segment file ('-' for stdout)");
    detect->add_option("--min-length", detect_cfg.min_length, "")->capture_default_str();
    detect->add_option("--angle-tol-deg", detect_cfg.angle_tol_deg, "")->capture_default_str();
    detect->add_option("--density-min", detect_cfg.density_min, "")->capture_default_str();

    // ---- calibrate
    auto* calibrate = app.add_subcommand("calibrate", "Calibrate a camera from one image");
    std::string cal_image, cal_segments, cal_gt, cal_out, cal_dump;
    PipelineOptions cal_opts;
    calibrate->add_option("--image", cal_image, "input image");
    calibrate->add_option("--segments", cal_segments, "precomputed segment file (low-res px)");
    calibrate->add_option("--gt", cal_gt, "ground-truth annotation (enables oracle mode)");
    calibrate->add_option("--out", cal_out, "result JSON path (default stdout)");
    calibrate->add_option("--dump-maps", cal_dump, "directory for line/activation map dumps");
    cal_opts.attach(calibrate);

    // ---- synth
    auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic annotated scenes");
    std::string synth_out;
    int synth_n = 1;
    bool synth_render = false;
    synth::SynthConfig scfg;
    synth_cmd->add_option("--out", synth_out, "output dataset directory")->required();
    synth_cmd->add_option("--n-scenes", synth_n, "number of scenes")->capture_default_str();
    synth_cmd->add_option("--seed", scfg.seed, "")->capture_default_str();
    synth_cmd->add_option("--fov-min", scfg.fov_min_deg, "")->capture_default_str();
    synth_cmd->add_option("--fov-max", scfg.fov_max_deg, "")->capture_default_str();
    synth_cmd->add_option("--pitch-min", scfg.pitch_min_deg, "")->capture_default_str();
    synth_cmd->add_option("--pitch-max", scfg.pitch_max_deg, "")->capture_default_str();
    synth_cmd->add_option("--roll-min", scfg.roll_min_deg, "")->capture_default_str();
    synth_cmd->add_option("--roll-max", scfg.roll_max_deg, "")->capture_default_str();
    synth_cmd->add_option("--yaw-min", scfg.yaw_min_deg, "")->capture_default_str();
    synth_cmd->add_option("--yaw-max", scfg.yaw_max_deg, "")->capture_default_str();
    synth_cmd->add_option("--n-boxes", scfg.n_boxes, "")->capture_default_str();
    synth_cmd->add_option("--noise-px", scfg.noise_px, "endpoint noise sigma")
        ->capture_default_str();
    synth_cmd->add_option("--outlier-frac", scfg.outlier_frac, "")->capture_default_str();
    synth_cmd->add_flag("--atlanta", scfg.atlanta, "add a second horizontal frame family");
    synth_cmd->add_option("--atlanta-yaw-deg", scfg.atlanta_yaw_deg, "")->capture_default_str();
    synth_cmd->add_flag("--render", synth_render, "also write image.pgm wireframes");

    // ---- eval
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate the pipeline on a dataset");
    std::string eval_dataset, eval_out = "eval_out";
    bool eval_svg = false;
    PipelineOptions eval_opts;
    eval_cmd->add_option("--dataset", eval_dataset, "dataset directory (scene_*/)")->required();
    eval_cmd->add_option("--out-dir", eval_out, "report directory")->capture_default_str();
    eval_cmd->add_flag("--svg", eval_svg, "also write curve.svg");
    eval_opts.attach(eval_cmd);

    // ---- train-zs
    auto* train_zs = app.add_subcommand("train-zs", "Train the zenith set scorer");
    std::string tzs_dataset, tzs_out = "zs_params.json";
    zsnet::TrainConfig tcfg;
    zenith::ZenithConfig tzs_zcfg;
    std::uint64_t tzs_seed = 1;
    train_zs->add_option("--dataset", tzs_dataset, "training dataset directory")->required();
    train_zs->add_option("--out", tzs_out, "output parameter file")->capture_default_str();
    train_zs->add_option("--epochs", tcfg.epochs, "")->capture_default_str();
    train_zs->add_option("--lr", tcfg.lr, "initial learning rate")->capture_default_str();
    train_zs->add_option("--lambda-loc", tcfg.lambda_loc, "")->capture_default_str();
    train_zs->add_option("--seed", tzs_seed, "")->capture_default_str();
    train_zs->add_option("--n-lines", tzs_zcfg.n_lines, "")->capture_default_str();
    train_zs->add_option("--n-zenith", tzs_zcfg.n_candidates, "")->capture_default_str();
    train_zs->add_option("--delta-p-deg", tzs_zcfg.delta_p_deg, "")->capture_default_str();
    train_zs->add_option("--delta-n-deg", tzs_zcfg.delta_n_deg, "")->capture_default_str();

    // ---- train-fs
    auto* train_fs = app.add_subcommand("train-fs", "Train the lightweight frame scorer");
    std::string tfs_dataset, tfs_out = "fs_model.json";
    PipelineOptions tfs_opts;
    train_fs->add_option("--dataset", tfs_dataset, "training dataset directory")->required();
    train_fs->add_option("--out", tfs_out, "output model file")->capture_default_str();
    tfs_opts.attach(train_fs);

    // ---- sweep
    auto* sweep = app.add_subcommand("sweep", "Parameter sensitivity sweep");
    std::string sweep_dataset, sweep_out;
    std::vector<std::string> sweep_vary;
    PipelineOptions sweep_opts;
    sweep->add_option("--dataset", sweep_dataset, "dataset directory")->required();
    sweep->add_option("--out", sweep_out, "output CSV (default stdout)");
    sweep->add_option("--vary", sweep_vary,
                      "axis as key=v1,v2,... (repeatable; keys: delta-z delta-p delta-n "
                      "delta-c delta-s k n-lines n-zenith density-min)");
    sweep_opts.attach(sweep);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*detect) {
            const auto segments = segments_from_image(detect_image, detect_cfg);
            if (detect_out == "-") {
                std::cout << format_segments(segments);
            } else {
                write_segments(segments, detect_out);
                std::cout << "wrote " << segments.size() << " segments to " << detect_out << "\n";
            }
            return kExitOk;
        }

        if (*calibrate) {
            if (cal_image.empty() == cal_segments.empty()) {
                std::cerr << "calibrate: exactly one of --image / --segments is required\n";
                return kExitUsage;
            }
            cal_opts.finalize();
            std::optional<synth::SceneAnnotation> gt;
            if (!cal_gt.empty()) gt = annotation_from_json(load_json(cal_gt));
            if (cal_opts.cfg.mode == framescore::ScoreMode::oracle && !gt) {
                std::cerr << "calibrate: --mode oracle requires --gt\n";
                return kExitUsage;
            }
            std::optional<GrayImage> low;
            std::vector<Segment> segments;
            if (!cal_image.empty()) {
                low = downsample(read_image(cal_image), kLowRes, kLowRes);
                segments = lsd::detect_segments(*low, cal_opts.cfg.detector);
            } else {
                segments = read_segments(cal_segments);
            }
            const auto out = pipeline::run_calibration(
                segments, kLowRes, kLowRes, cal_opts.cfg, gt ? &*gt : nullptr,
                cal_opts.net ? &*cal_opts.net : nullptr,
                cal_opts.frame_model ? &*cal_opts.frame_model : nullptr);
            const json result = result_to_json(out, cal_opts);
            if (cal_out.empty()) {
                std::cout << result.dump(2) << "\n";
            } else {
                save_json(result, cal_out);
            }
            if (!cal_dump.empty())
                dump_maps(cal_dump, segments, out, low ? &*low : nullptr);
            return out.degraded ? kExitDegraded : kExitOk;
        }

        if (*synth_cmd) return cmd_synth(synth_out, synth_n, scfg, synth_render);

        if (*eval_cmd) {
            eval_opts.finalize();
            return cmd_eval(eval_dataset, eval_out, eval_opts, eval_svg);
        }

        if (*train_zs) return cmd_train_zs(tzs_dataset, tzs_out, tcfg, tzs_zcfg, tzs_seed);

        if (*train_fs) {
            tfs_opts.finalize();
            return cmd_train_fs(tfs_dataset, tfs_out, tfs_opts);
        }

        if (*sweep) {
            sweep_opts.finalize();
            return cmd_sweep(sweep_dataset, sweep_out, sweep_vary, sweep_opts);
        }
    } catch (const CLI::Error& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitUsage;
}
