#include <catch2/catch_amalgamated.hpp>

#include "calib/framescore.hpp"
#include "calib/json_io.hpp"
#include "calib/pipeline.hpp"

using namespace calib;
using namespace calib::framescore;

namespace {

const PseudoIntrinsics kPi = PseudoIntrinsics::for_image(224, 224);

framegen::FrameHypothesis hypothesis_from_camera(const CameraParams& cam) {
    framegen::FrameHypothesis hyp;
    hyp.f_px = cam.f;
    hyp.rotation = cam.rotation();
    const double f_rel = cam.f / kPi.f_pseudo;
    for (int a = 0; a < 3; ++a) {
        const Vec3 axis{a == 0 ? 1.0 : 0.0, a == 1 ? 1.0 : 0.0, a == 2 ? 1.0 : 0.0};
        const Vec3 d = mat_apply(hyp.rotation, axis);
        hyp.vps[static_cast<std::size_t>(a)] =
            normalized(HomPoint{f_rel * d.x, f_rel * d.y, d.z});
    }
    return hyp;
}

} // namespace

TEST_CASE("rasterize: reference strokes") {
    const std::vector<Segment> one = {Segment::from_endpoints(0, 10, 9, 10)};
    const GrayImage m = rasterize(one, 224, 224);
    int lit = 0;
    for (double v : m.data) lit += v > 0.0;
    CHECK(lit == 10);
    for (int x = 0; x < 10; ++x) CHECK(m.at(x, 10) == 1.0);

    CHECK(rasterize(std::vector<Segment>{}, 32, 32).data ==
          std::vector<double>(32 * 32, 0.0));

    // Overlapping strokes stay binary.
    const std::vector<Segment> two = {Segment::from_endpoints(0, 10, 9, 10),
                                      Segment::from_endpoints(0, 10, 9, 10)};
    const GrayImage m2 = rasterize(two, 224, 224);
    for (double v : m2.data) CHECK((v == 0.0 || v == 1.0));
}

TEST_CASE("activation_maps: exact vanishing direction saturates its map") {
    // Segments all pass through the zenith of an upright camera.
    CameraParams cam;
    cam.f = 180.0;
    cam.psi = 0.25;
    const auto hyp = hypothesis_from_camera(cam);
    std::vector<Segment> segs;
    const HomPoint z_px = from_pseudo(hyp.vps[1], kPi);
    for (int i = 0; i < 6; ++i) {
        // Lines through the zenith VP in pixel space.
        const double x = 30.0 + 30.0 * i;
        const HomPoint a{x, 40.0, 1.0};
        const HomLine l = line_from_endpoints(a, z_px);
        // Second endpoint along the line, 80 px away.
        const double dx = l.b, dy = -l.a;
        const double n = std::hypot(dx, dy);
        segs.push_back(Segment::from_endpoints(a.x, a.y, a.x + 80 * dx / n, a.y + 80 * dy / n));
    }
    const GrayImage line_map = rasterize(segs, 224, 224);
    const auto maps = activation_maps(segs, kPi, hyp, 224, 224);
    for (std::size_t i = 0; i < line_map.data.size(); ++i) {
        if (line_map.data[i] == 0.0) {
            CHECK(maps[1].data[i] == 0.0);
            continue;
        }
        CHECK(maps[1].data[i] > 1.0 - 1e-9);
        CHECK(maps[0].data[i] < 1.0);
        CHECK(maps[2].data[i] < 1.0);
    }
    CHECK(manhattan_score(line_map, maps) > 1.0 - 1e-9);

    const auto empty = activation_maps(std::vector<Segment>{}, kPi, hyp, 64, 64);
    for (const auto& m : empty)
        for (double v : m.data) CHECK(v == 0.0);
}

TEST_CASE("manhattan_score: constructed rasters") {
    GrayImage line_map(32, 32, 0.0);
    std::array<GrayImage, 3> maps = {GrayImage(32, 32, 0.0), GrayImage(32, 32, 0.0),
                                     GrayImage(32, 32, 0.0)};
    for (int x = 0; x < 10; ++x) line_map.at(x, 5) = 1.0;
    for (int x = 0; x < 5; ++x) maps[0].at(x, 5) = 1.0;
    CHECK(manhattan_score(line_map, maps) == Catch::Approx(0.5));

    for (int x = 5; x < 10; ++x) maps[2].at(x, 5) = 1.0;
    CHECK(manhattan_score(line_map, maps) == Catch::Approx(1.0));

    for (auto& m : maps) m = GrayImage(32, 32, 0.0);
    CHECK(manhattan_score(line_map, maps) == 0.0);

    CHECK_THROWS_AS(manhattan_score(GrayImage(32, 32, 0.0), maps), EmptyLineMap);
}

TEST_CASE("manhattan_score: monotone under extra activation") {
    Rng rng(3);
    GrayImage line_map(64, 64, 0.0);
    std::array<GrayImage, 3> maps = {GrayImage(64, 64, 0.0), GrayImage(64, 64, 0.0),
                                     GrayImage(64, 64, 0.0)};
    for (int i = 0; i < 200; ++i)
        line_map.at(static_cast<int>(rng.uniform_int(64)), static_cast<int>(rng.uniform_int(64))) = 1.0;
    double prev = manhattan_score(line_map, maps);
    for (int step = 0; step < 50; ++step) {
        auto& m = maps[rng.uniform_int(3)];
        const int x = static_cast<int>(rng.uniform_int(64));
        const int y = static_cast<int>(rng.uniform_int(64));
        m.at(x, y) = std::min(1.0, m.at(x, y) + rng.uniform01());
        const double cur = manhattan_score(line_map, maps);
        CHECK(cur >= prev - 1e-15);
        prev = cur;
    }
}

TEST_CASE("SceneRaster: fast path matches the dense maps") {
    synth::SynthConfig cfg;
    cfg.seed = 21;
    cfg.noise_px = 1.0;
    Rng rng(cfg.seed);
    const synth::Scene scene = synth::generate_scene(cfg, rng);
    SceneRaster raster(scene.segments, kPi, 224, 224);
    const GrayImage line_map = rasterize(scene.segments, 224, 224);
    Rng camrng(22);
    synth::SynthConfig camcfg;
    for (int i = 0; i < 5; ++i) {
        const auto hyp = hypothesis_from_camera(synth::sample_camera(camcfg, camrng));
        const auto maps = activation_maps(scene.segments, kPi, hyp, 224, 224);
        const double dense = manhattan_score(line_map, maps);
        const auto stats = raster.score(hyp);
        CHECK(stats.m == Catch::Approx(dense).epsilon(1e-12));
        for (int d = 0; d < 3; ++d) {
            double mx = 0.0;
            for (double v : maps[static_cast<std::size_t>(d)].data) mx = std::max(mx, v);
            CHECK(stats.max[static_cast<std::size_t>(d)] == Catch::Approx(mx).epsilon(1e-12));
        }
    }
}

TEST_CASE("gt_similarity: perfect hypothesis and closed-form offsets") {
    synth::SynthConfig cfg;
    cfg.seed = 23;
    Rng rng(cfg.seed);
    const synth::Scene scene = synth::generate_scene(cfg, rng);
    const auto hyp = hypothesis_from_camera(scene.annotation.cam);
    const ScoreConfig sc;
    const GtSimilarity sim = gt_similarity(hyp, scene.annotation, sc);
    CHECK(sim.s_z == Catch::Approx(1.0).margin(1e-9));
    CHECK(sim.s_h == Catch::Approx(1.0).margin(1e-9));
    CHECK(sim.s_vh == Catch::Approx(1.0).margin(1e-9));
    CHECK(sim.label);
}

TEST_CASE("horizon_border_similarity: exp(-0.25) at a half-height offset") {
    const int W = 224, H = 224;
    const HomLine gt{0, 1, -112.0};
    const HomLine off{0, 1, -112.0 - 0.5 * H};
    CHECK(horizon_border_similarity(off, gt, W, H) ==
          Catch::Approx(std::exp(-0.25)).epsilon(1e-12));
    CHECK(std::exp(-0.25) == Catch::Approx(0.7788007830714049).epsilon(1e-12));

    // Vertical prediction misses the borders entirely.
    CHECK(horizon_border_similarity({1, 0, -50}, gt, W, H) == 0.0);
}

TEST_CASE("combined_similarity: exp(-2) at s_h = s_v = 0.8") {
    const double svh = combined_similarity(0.8, 0.8, 0.1);
    CHECK(svh == Catch::Approx(std::exp(-2.0)).epsilon(1e-12));
    CHECK(svh == Catch::Approx(0.1353352832366127).epsilon(1e-12));
    const ScoreConfig sc;
    CHECK(svh < sc.delta_s);   // label c = 0
}

TEST_CASE("final_score: oracle and deterministic modes") {
    framegen::FrameHypothesis hyp;
    hyp.m = 0.7;
    hyp.s_vh = 1.0;
    CHECK(final_score(hyp, ScoreMode::oracle) == Catch::Approx(0.7));
    CHECK(final_score(hyp, ScoreMode::deterministic) == Catch::Approx(0.7));

    hyp.m = 0.0;
    hyp.s_vh = 0.9;
    CHECK(final_score(hyp, ScoreMode::oracle) == 0.0);

    hyp.m = 0.5;
    hyp.s_vh = 0.25;
    CHECK(final_score(hyp, ScoreMode::oracle) == Catch::Approx(0.125));
    CHECK(final_score(hyp, ScoreMode::deterministic) == Catch::Approx(0.5));
}

TEST_CASE("aggregate_topk: single hypothesis, default k, tie-break") {
    const ScoreConfig sc;
    CHECK(sc.k == 8);

    CameraParams cam;
    cam.f = 200.0;
    cam.psi = 0.2;
    cam.phi = -0.1;
    cam.theta = 0.3;
    auto hyp = hypothesis_from_camera(cam);
    hyp.s = 0.4;
    const TopkResult one = aggregate_topk({hyp}, sc, kPi, 224, 224);
    CHECK(one.camera.f == Catch::Approx(cam.f));
    CHECK(one.camera.psi == Catch::Approx(cam.psi).margin(1e-9));
    CHECK(one.camera.phi == Catch::Approx(cam.phi).margin(1e-9));
    CHECK(one.camera.theta == Catch::Approx(cam.theta).margin(1e-9));

    // Equal scores: the earlier hypothesis wins the yaw slot.
    CameraParams cam2 = cam;
    cam2.theta = -0.2;
    auto hyp2 = hypothesis_from_camera(cam2);
    hyp2.s = 0.4;
    const TopkResult tie = aggregate_topk({hyp, hyp2}, sc, kPi, 224, 224);
    CHECK(tie.best_index == 0);
    CHECK(tie.camera.theta == Catch::Approx(cam.theta).margin(1e-9));

    CHECK_THROWS_AS(aggregate_topk({}, sc, kPi, 224, 224), NoHypotheses);
}

TEST_CASE("aggregate_topk: top-k set invariant to positive score scaling") {
    Rng rng(29);
    std::vector<framegen::FrameHypothesis> hyps;
    synth::SynthConfig cfg;
    for (int i = 0; i < 32; ++i) {
        auto hyp = hypothesis_from_camera(synth::sample_camera(cfg, rng));
        hyp.s = rng.uniform01();
        hyps.push_back(hyp);
    }
    const ScoreConfig sc;
    const TopkResult a = aggregate_topk(hyps, sc, kPi, 224, 224);
    for (auto& h : hyps) h.s *= 41.5;
    const TopkResult b = aggregate_topk(hyps, sc, kPi, 224, 224);
    CHECK(a.topk_indices == b.topk_indices);
    CHECK(a.best_index == b.best_index);
}

TEST_CASE("aggregate_topk: noise-free pipeline lands within 0.1 degrees") {
    synth::SynthConfig cfg;
    cfg.seed = 11;
    Rng rng(cfg.seed);
    const synth::Scene scene = synth::generate_scene(cfg, rng);
    pipeline::PipelineConfig pcfg;
    pcfg.seed = 11;
    const auto out = pipeline::run_calibration(scene.segments, 224, 224, pcfg);
    REQUIRE_FALSE(out.degraded);
    const auto rec = pipeline::evaluate_output(out, scene.annotation);
    CHECK(rec.angle_deg < 0.1);
    CHECK(rec.fov_deg < 0.1);
}

TEST_CASE("ranking by m keeps a GT-consistent hypothesis in the top k") {
    synth::SynthConfig scfg;
    pipeline::PipelineConfig pcfg;
    const ScoreConfig sc;
    Rng rng(12);
    int scenes = 0, hit = 0;
    for (int i = 0; i < 100; ++i) {
        synth::Scene scene;
        try {
            scene = synth::generate_scene(scfg, rng);
        } catch (const CalibError&) {
            continue;
        }
        pcfg.seed = 7000 + static_cast<std::uint64_t>(i);
        try {
            const auto out = pipeline::run_calibration(scene.segments, 224, 224, pcfg);
            if (out.degraded) { ++scenes; continue; }
            const TopkResult top = aggregate_topk(out.hypotheses, sc, kPi, 224, 224);
            bool found = false;
            for (int idx : top.topk_indices) {
                const auto sim = gt_similarity(out.hypotheses[static_cast<std::size_t>(idx)],
                                               scene.annotation, sc);
                if (sim.s_vh > 0.99) found = true;
            }
            ++scenes;
            hit += found ? 1 : 0;
        } catch (const CalibError&) {
            ++scenes;
        }
    }
    REQUIRE(scenes >= 95);
    CHECK(static_cast<double>(hit) / scenes >= 0.95);
}

TEST_CASE("frame scorer: learns the similarity labels and round-trips") {
    // Features from real pipeline hypotheses, labels from the GT bell.
    synth::SynthConfig scfg;
    scfg.noise_px = 1.0;
    scfg.outlier_frac = 0.2;
    pipeline::PipelineConfig pcfg;
    const ScoreConfig sc;
    std::vector<std::pair<FrameFeatures, int>> data;
    Rng rng(31);
    for (int i = 0; i < 12; ++i) {
        const synth::Scene scene = synth::generate_scene(scfg, rng);
        pcfg.seed = 100 + static_cast<std::uint64_t>(i);
        const auto out = pipeline::run_calibration(scene.segments, 224, 224, pcfg);
        if (out.degraded) continue;
        SceneRaster raster(scene.segments, kPi, 224, 224);
        for (std::size_t h = 0; h < out.hypotheses.size(); h += 8) {
            const auto& hyp = out.hypotheses[h];
            const auto stats = raster.score(hyp);
            const auto sim = gt_similarity(hyp, scene.annotation, sc);
            data.push_back({make_features(stats, hyp.f_px, kPi), sim.label ? 1 : 0});
        }
        // Negative examples: frames far from the true calibration.
        for (int p = 0; p < 8; ++p) {
            CameraParams bad = scene.annotation.cam;
            bad.f *= (p % 2 ? 2.4 : 0.45);
            bad.psi += (p % 3 - 1) * 0.5;
            bad.phi += 0.4;
            const auto hyp = hypothesis_from_camera(bad);
            const auto stats = raster.score(hyp);
            const auto sim = gt_similarity(hyp, scene.annotation, sc);
            data.push_back({make_features(stats, hyp.f_px, kPi), sim.label ? 1 : 0});
        }
    }
    REQUIRE(data.size() >= 100);
    const FrameScorerModel model = train_frame_scorer(data);
    int correct = 0, positives = 0;
    for (const auto& [f, y] : data) {
        correct += (model.predict(f) > 0.5) == (y == 1);
        positives += y;
    }
    REQUIRE(positives > 0);
    REQUIRE(positives < static_cast<int>(data.size()));
    CHECK(static_cast<double>(correct) / static_cast<double>(data.size()) > 0.7);

    const auto j = frame_scorer_to_json(model);
    const FrameScorerModel back = frame_scorer_from_json(j);
    CHECK(back.b == model.b);
    CHECK(back.w == model.w);
}

TEST_CASE("export_channels: layout and constant planes") {
    synth::SynthConfig cfg;
    cfg.seed = 37;
    Rng rng(cfg.seed);
    const synth::Scene scene = synth::generate_scene(cfg, rng);
    const auto hyp = hypothesis_from_camera(scene.annotation.cam);
    const GrayImage img = synth::render_wireframe(scene.segments, 224, 224);
    const auto tensor = export_channels(img, scene.segments, kPi, hyp);
    const std::size_t plane = 224 * 224;
    REQUIRE(tensor.size() == plane * 17);
    CHECK(channel_names().size() == 17);
    // Gray replicated across the first three channels.
    CHECK(tensor[0] == tensor[plane]);
    CHECK(tensor[123] == tensor[2 * plane + 123]);
    // VP channels constant.
    for (std::size_t i = 1; i < plane; i += 997)
        CHECK(tensor[7 * plane] == tensor[7 * plane + i]);
    CHECK(tensor[16 * plane] == Catch::Approx(hyp.f_px / kPi.f_pseudo));
    // Line map channel is binary.
    for (std::size_t i = 0; i < plane; i += 31)
        CHECK((tensor[3 * plane + i] == 0.0f || tensor[3 * plane + i] == 1.0f));
}
