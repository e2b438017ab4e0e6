#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "calib/rng.hpp"
#include "calib/segment.hpp"

using namespace calib;

namespace {
std::filesystem::path temp_file(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}
} // namespace

TEST_CASE("segment file: single record") {
    std::istringstream in("0 0 10 0\n");
    const auto segs = parse_segments(in);
    REQUIRE(segs.size() == 1);
    CHECK(segs[0].p0.x == 0.0);
    CHECK(segs[0].p1.x == 10.0);
    CHECK(segs[0].len == 10.0);
    CHECK(scale_equivalent(segs[0].line, HomLine{0, 1, 0}));
}

TEST_CASE("segment file: empty input and comments") {
    std::istringstream empty("");
    CHECK(parse_segments(empty).empty());

    std::istringstream commented("# header\n\n 1 2 3 4 # trailing\n#only comment\n");
    const auto segs = parse_segments(commented);
    REQUIRE(segs.size() == 1);
    CHECK(segs[0].p1.y == 4.0);
}

TEST_CASE("segment file: parse errors carry line numbers") {
    std::istringstream missing("1 2 3 4\n5 6 7\n");
    try {
        parse_segments(missing);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line_number == 2);
    }

    std::istringstream trailing("1 2 3 4 5\n");
    CHECK_THROWS_AS(parse_segments(trailing), ParseError);

    std::istringstream degenerate("3 3 3 3\n");
    CHECK_THROWS_AS(parse_segments(degenerate), ParseError);
}

TEST_CASE("segment file: write-read round trip is exact and idempotent") {
    Rng rng(9);
    std::vector<Segment> segs;
    for (int i = 0; i < 1000; ++i) {
        const double x0 = rng.uniform(0.0, 224.0), y0 = rng.uniform(0.0, 224.0);
        double x1 = rng.uniform(0.0, 224.0), y1 = rng.uniform(0.0, 224.0);
        if (x0 == x1 && y0 == y1) x1 += 1.0;
        segs.push_back(Segment::from_endpoints(x0, y0, x1, y1));
    }
    const auto path = temp_file("vpcalib_segments_roundtrip.txt");
    write_segments(segs, path.string());
    const auto back = read_segments(path.string());
    REQUIRE(back.size() == segs.size());
    for (std::size_t i = 0; i < segs.size(); ++i) {
        CHECK(back[i].p0.x == segs[i].p0.x);
        CHECK(back[i].p0.y == segs[i].p0.y);
        CHECK(back[i].p1.x == segs[i].p1.x);
        CHECK(back[i].p1.y == segs[i].p1.y);
    }
    CHECK(format_segments(back) == format_segments(segs));
    std::remove(path.string().c_str());
}

// ---------------------------------------------------------------- detector

#include "calib/lsd.hpp"
#include "calib/synth.hpp"

namespace {

double endpoint_match(const Segment& a, double x0, double y0, double x1, double y1) {
    auto d = [](double ax, double ay, double bx, double by) { return std::hypot(bx - ax, by - ay); };
    const double same = std::max(d(a.p0.x, a.p0.y, x0, y0), d(a.p1.x, a.p1.y, x1, y1));
    const double swap = std::max(d(a.p0.x, a.p0.y, x1, y1), d(a.p1.x, a.p1.y, x0, y0));
    return std::min(same, swap);
}

double segment_gap(double ax0, double ay0, double ax1, double ay1,
                   double bx0, double by0, double bx1, double by1) {
    auto pt_seg = [](double px, double py, double x0, double y0, double x1, double y1) {
        const double dx = x1 - x0, dy = y1 - y0;
        const double l2 = dx * dx + dy * dy;
        double t = l2 > 0 ? ((px - x0) * dx + (py - y0) * dy) / l2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        return std::hypot(px - (x0 + t * dx), py - (y0 + t * dy));
    };
    auto orient = [](double ax, double ay, double bx, double by, double cx, double cy) {
        return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
    };
    const double o1 = orient(ax0, ay0, ax1, ay1, bx0, by0);
    const double o2 = orient(ax0, ay0, ax1, ay1, bx1, by1);
    const double o3 = orient(bx0, by0, bx1, by1, ax0, ay0);
    const double o4 = orient(bx0, by0, bx1, by1, ax1, ay1);
    if (o1 * o2 < 0 && o3 * o4 < 0) return 0.0;
    return std::min(std::min(pt_seg(ax0, ay0, bx0, by0, bx1, by1),
                             pt_seg(ax1, ay1, bx0, by0, bx1, by1)),
                    std::min(pt_seg(bx0, by0, ax0, ay0, ax1, ay1),
                             pt_seg(bx1, by1, ax0, ay0, ax1, ay1)));
}

/// Crossing-free subset of a scene's GT edges (region growers cut at
/// stroke crossings by construction, so the recall oracle avoids them).
std::vector<calib::synth::GtEdge> spaced_edges(const calib::synth::Scene& scene,
                                               double min_gap = 5.0) {
    std::vector<calib::synth::GtEdge> chosen;
    for (const auto& e : scene.annotation.edges) {
        bool ok = true;
        for (const auto& c : chosen)
            if (segment_gap(e.x0, e.y0, e.x1, e.y1, c.x0, c.y0, c.x1, c.y1) < min_gap) {
                ok = false;
                break;
            }
        if (ok) chosen.push_back(e);
    }
    return chosen;
}

GrayImage rotate90(const GrayImage& img) {
    GrayImage out(img.height, img.width);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            out.at(img.height - 1 - y, x) = img.at(x, y);
    return out;
}

} // namespace

TEST_CASE("detect_segments: single rectangle gives exactly 4 accurate segments") {
    const std::vector<Segment> outline = {
        Segment::from_endpoints(50, 60, 170, 60),
        Segment::from_endpoints(170, 60, 170, 150),
        Segment::from_endpoints(170, 150, 50, 150),
        Segment::from_endpoints(50, 150, 50, 60),
    };
    const GrayImage img = calib::synth::render_wireframe(outline, 224, 224);
    const auto det = lsd::detect_segments(img, lsd::DetectorConfig{});
    REQUIRE(det.size() == 4);
    for (const Segment& s : outline) {
        double best = 1e9;
        for (const Segment& d : det)
            best = std::min(best, endpoint_match(d, s.p0.x, s.p0.y, s.p1.x, s.p1.y));
        CHECK(best < 2.0);
    }
}

TEST_CASE("detect_segments: constant image yields nothing") {
    CHECK(lsd::detect_segments(GrayImage(64, 64, 0.5), lsd::DetectorConfig{}).empty());
    CHECK(lsd::detect_segments(GrayImage(64, 64, 0.0), lsd::DetectorConfig{}).empty());
}

TEST_CASE("detect_segments: image too small") {
    CHECK_THROWS_AS(lsd::detect_segments(GrayImage(15, 64), lsd::DetectorConfig{}),
                    ImageTooSmall);
}

TEST_CASE("detect_segments: wireframe recall at 2 px") {
    int total = 0, matched = 0;
    for (int i = 0; i < 10; ++i) {
        calib::synth::SynthConfig cfg;
        cfg.seed = 8 + static_cast<std::uint64_t>(i);
        cfg.n_boxes = 4;
        cfg.min_edge_px = 16;
        Rng rng(cfg.seed);
        const auto scene = calib::synth::generate_scene(cfg, rng);
        const auto edges = spaced_edges(scene);
        std::vector<Segment> render;
        for (const auto& e : edges)
            render.push_back(Segment::from_endpoints(e.x0, e.y0, e.x1, e.y1));
        const GrayImage img = calib::synth::render_wireframe(render, 224, 224);
        const auto det = lsd::detect_segments(img, lsd::DetectorConfig{});
        for (const auto& e : edges) {
            ++total;
            double best = 1e9;
            for (const Segment& d : det)
                best = std::min(best, endpoint_match(d, e.x0, e.y0, e.x1, e.y1));
            if (best <= 2.0) ++matched;
        }
    }
    REQUIRE(total >= 100);
    CHECK(static_cast<double>(matched) / total >= 0.9);
}

TEST_CASE("detect_segments: consistent under 90-degree rotation") {
    int total = 0, matched = 0;
    for (int i = 0; i < 6; ++i) {
        calib::synth::SynthConfig cfg;
        cfg.seed = 90 + static_cast<std::uint64_t>(i);
        cfg.n_boxes = 4;
        cfg.min_edge_px = 16;
        Rng rng(cfg.seed);
        const auto scene = calib::synth::generate_scene(cfg, rng);
        const auto edges = spaced_edges(scene);
        std::vector<Segment> render;
        for (const auto& e : edges)
            render.push_back(Segment::from_endpoints(e.x0, e.y0, e.x1, e.y1));
        const GrayImage img = calib::synth::render_wireframe(render, 224, 224);
        const auto base = lsd::detect_segments(img, lsd::DetectorConfig{});
        const auto rot = lsd::detect_segments(rotate90(img), lsd::DetectorConfig{});
        // Map rotated detections back: x = y_r, y = H - x_r.
        for (const Segment& b : base) {
            ++total;
            double best = 1e9;
            for (const Segment& r : rot) {
                const double x0 = r.p0.y, y0 = img.height - r.p0.x;
                const double x1 = r.p1.y, y1 = img.height - r.p1.x;
                best = std::min(best, endpoint_match(b, x0, y0, x1, y1));
            }
            if (best <= 2.0) ++matched;
        }
    }
    REQUIRE(total >= 50);
    CHECK(static_cast<double>(matched) / total >= 0.9);
}

TEST_CASE("detect_segments: output honors segment invariants") {
    calib::synth::SynthConfig cfg;
    cfg.seed = 77;
    cfg.n_boxes = 3;
    Rng rng(cfg.seed);
    const auto scene = calib::synth::generate_scene(cfg, rng);
    const GrayImage img = calib::synth::render_wireframe(scene.segments, 224, 224);
    lsd::DetectorConfig dcfg;
    const auto det = lsd::detect_segments(img, dcfg);
    REQUIRE_FALSE(det.empty());
    for (std::size_t i = 0; i < det.size(); ++i) {
        CHECK(det[i].len > dcfg.min_length);
        if (i > 0) CHECK(det[i - 1].len >= det[i].len);
        CHECK(std::abs(dot(det[i].line, det[i].p0)) / norm(det[i].line) < 1e-9);
        CHECK(std::abs(dot(det[i].line, det[i].p1)) / norm(det[i].line) < 1e-9);
    }
}
