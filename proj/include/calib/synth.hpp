#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "calib/camera.hpp"
#include "calib/image.hpp"
#include "calib/raster.hpp"
#include "calib/rng.hpp"
#include "calib/segment.hpp"

namespace calib::synth {

struct SynthConfig {
    double fov_min_deg = 40.0, fov_max_deg = 80.0;
    double pitch_min_deg = -30.0, pitch_max_deg = 40.0;
    double roll_min_deg = -20.0, roll_max_deg = 20.0;
    double yaw_min_deg = -45.0, yaw_max_deg = 45.0;
    int width = 224, height = 224;
    int n_boxes = 8;
    double noise_px = 0.0;
    double outlier_frac = 0.0;
    bool atlanta = false;
    double atlanta_yaw_deg = 30.0;   // yaw of the secondary horizontal frame
    double min_edge_px = 16.0;
    std::uint64_t seed = 1;
};

/// Ground-truth image segment, pre-noise, labeled with its world axis
/// (0 = x, 1 = y vertical, 2 = z) and horizontal frame family.
struct GtEdge {
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
    int axis = 0;
    int family = 0;
};

struct SceneAnnotation {
    CameraParams cam;
    HomPoint z_gt;                    // pseudo space, unit, canonical sign
    HomLine horizon_gt;               // image pixel space
    std::array<HomPoint, 3> vps_gt;   // pseudo space: world x, y, z axes
    std::vector<GtEdge> edges;
    double noise_px = 0.0;
    double outlier_frac = 0.0;
};

struct Scene {
    std::vector<Segment> segments;    // observed: noisy inliers + outliers
    std::vector<bool> is_outlier;     // parallel to segments
    SceneAnnotation annotation;
};

inline double deg2rad(double d) { return d * 3.14159265358979323846 / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / 3.14159265358979323846; }

inline CameraParams sample_camera(const SynthConfig& cfg, Rng& rng) {
    CameraParams cam;
    cam.width = cfg.width;
    cam.height = cfg.height;
    const double fov = deg2rad(rng.uniform(cfg.fov_min_deg, cfg.fov_max_deg));
    cam.f = cfg.height / (2.0 * std::tan(fov / 2.0));
    cam.psi = deg2rad(rng.uniform(cfg.pitch_min_deg, cfg.pitch_max_deg));
    cam.phi = deg2rad(rng.uniform(cfg.roll_min_deg, cfg.roll_max_deg));
    cam.theta = deg2rad(rng.uniform(cfg.yaw_min_deg, cfg.yaw_max_deg));
    return cam;
}

namespace detail {

struct Edge3 {
    Vec3 a, b;
    int axis;
    int family;
};

inline void box_edges(const Vec3& center, const Vec3& half, double yaw, int family,
                      std::vector<Edge3>& out) {
    const double c = std::cos(yaw), s = std::sin(yaw);
    auto corner = [&](int ix, int iy, int iz) {
        const double lx = (ix ? half.x : -half.x);
        const double ly = (iy ? half.y : -half.y);
        const double lz = (iz ? half.z : -half.z);
        return Vec3{center.x + c * lx + s * lz, center.y + ly, center.z - s * lx + c * lz};
    };
    for (int iy = 0; iy < 2; ++iy)
        for (int iz = 0; iz < 2; ++iz)
            out.push_back({corner(0, iy, iz), corner(1, iy, iz), 0, family});
    for (int ix = 0; ix < 2; ++ix)
        for (int iz = 0; iz < 2; ++iz)
            out.push_back({corner(ix, 0, iz), corner(ix, 1, iz), 1, family});
    for (int ix = 0; ix < 2; ++ix)
        for (int iy = 0; iy < 2; ++iy)
            out.push_back({corner(ix, iy, 0), corner(ix, iy, 1), 2, family});
}

/// Project a 3D edge, clip against the near plane and the image rect.
/// Returns false when nothing visible remains.
inline bool project_edge(const CameraParams& cam, const Mat3& rot, const Edge3& e,
                         double min_len_px, GtEdge& out) {
    Vec3 a = mat_apply(rot, e.a);
    Vec3 b = mat_apply(rot, e.b);
    const double znear = 1e-3;
    if (a.z <= znear && b.z <= znear) return false;
    if (a.z <= znear || b.z <= znear) {
        const double t = (znear - a.z) / (b.z - a.z);
        const Vec3 cut{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), znear};
        if (a.z <= znear) a = cut; else b = cut;
    }
    double x0 = cam.f * a.x / a.z + cam.cu(), y0 = cam.f * a.y / a.z + cam.cv();
    double x1 = cam.f * b.x / b.z + cam.cu(), y1 = cam.f * b.y / b.z + cam.cv();

    // Liang-Barsky against [0, W] x [0, H].
    double t0 = 0.0, t1 = 1.0;
    const double dx = x1 - x0, dy = y1 - y0;
    const double p[4] = {-dx, dx, -dy, dy};
    const double q[4] = {x0 - 0.0, static_cast<double>(cam.width) - x0,
                         y0 - 0.0, static_cast<double>(cam.height) - y0};
    for (int i = 0; i < 4; ++i) {
        if (p[i] == 0.0) {
            if (q[i] < 0.0) return false;
        } else {
            const double r = q[i] / p[i];
            if (p[i] < 0.0) {
                if (r > t1) return false;
                if (r > t0) t0 = r;
            } else {
                if (r < t0) return false;
                if (r < t1) t1 = r;
            }
        }
    }
    out.x0 = x0 + t0 * dx;
    out.y0 = y0 + t0 * dy;
    out.x1 = x0 + t1 * dx;
    out.y1 = y0 + t1 * dy;
    out.axis = e.axis;
    out.family = e.family;
    return std::hypot(out.x1 - out.x0, out.y1 - out.y0) >= min_len_px;
}

inline Segment random_outlier(const SynthConfig& cfg, Rng& rng) {
    for (int tries = 0; tries < 1000; ++tries) {
        const double x0 = rng.uniform(0.0, cfg.width);
        const double y0 = rng.uniform(0.0, cfg.height);
        const double x1 = rng.uniform(0.0, cfg.width);
        const double y1 = rng.uniform(0.0, cfg.height);
        if (std::hypot(x1 - x0, y1 - y0) >= cfg.min_edge_px)
            return Segment::from_endpoints(x0, y0, x1, y1);
    }
    throw SamplingExhausted("random_outlier: cannot draw a long enough segment");
}

} // namespace detail

/// Generate one annotated scene: axis-aligned boxes projected through the
/// sampled (or supplied) camera, clipped, then perturbed and contaminated.
/// Ground truth is stored pre-noise so estimator error can be separated
/// from injected noise.
inline Scene generate_scene(const SynthConfig& cfg, Rng& rng,
                            const CameraParams* fixed_cam = nullptr) {
    Scene scene;
    for (int attempt = 0; attempt < 64; ++attempt) {
        const CameraParams cam = fixed_cam ? *fixed_cam : sample_camera(cfg, rng);
        const Mat3 rot = cam.rotation();
        const Vec3 fwd = mat_apply(rot.transposed(), Vec3{0, 0, 1});
        const Vec3 side = mat_apply(rot.transposed(), Vec3{1, 0, 0});
        const Vec3 vert = mat_apply(rot.transposed(), Vec3{0, 1, 0});
        const double tan_half = cam.height / (2.0 * cam.f);

        std::vector<detail::Edge3> edges3;
        for (int i = 0; i < cfg.n_boxes; ++i) {
            const double dist = rng.uniform(6.0, 14.0);
            const double lateral = rng.uniform(-0.55, 0.55) * dist * tan_half;
            const double raise = rng.uniform(-0.55, 0.55) * dist * tan_half;
            const Vec3 center{dist * fwd.x + lateral * side.x + raise * vert.x,
                              dist * fwd.y + lateral * side.y + raise * vert.y,
                              dist * fwd.z + lateral * side.z + raise * vert.z};
            const double base = dist * tan_half;
            const Vec3 half{base * rng.uniform(0.22, 0.48),
                            base * rng.uniform(0.45, 0.85),
                            base * rng.uniform(0.22, 0.48)};
            double yaw = 0.0;
            int family = 0;
            if (cfg.atlanta && (i % 2 == 1)) {
                yaw = deg2rad(cfg.atlanta_yaw_deg);
                family = 1;
            }
            detail::box_edges(center, half, yaw, family, edges3);
        }

        std::vector<GtEdge> visible;
        int vertical_count = 0, horizontal_count = 0;
        for (const auto& e : edges3) {
            GtEdge ge;
            if (detail::project_edge(cam, rot, e, cfg.min_edge_px, ge)) {
                visible.push_back(ge);
                if (ge.axis == 1) ++vertical_count; else ++horizontal_count;
            }
        }
        if (static_cast<int>(visible.size()) < 4 || vertical_count < 4 || horizontal_count < 6)
            continue;   // resample the layout

        scene.annotation.cam = cam;
        const PseudoIntrinsics pi = PseudoIntrinsics::for_image(cam.width, cam.height);
        scene.annotation.z_gt = zenith_pseudo(cam, pi);
        scene.annotation.horizon_gt = horizon_from_camera(cam);
        const double f_rel = cam.f / pi.f_pseudo;
        const Vec3 axes[3] = {mat_apply(rot, Vec3{1, 0, 0}),
                              mat_apply(rot, Vec3{0, 1, 0}),
                              mat_apply(rot, Vec3{0, 0, 1})};
        for (int a = 0; a < 3; ++a)
            scene.annotation.vps_gt[static_cast<std::size_t>(a)] =
                normalized(HomPoint{f_rel * axes[a].x, f_rel * axes[a].y, axes[a].z});
        scene.annotation.edges = visible;
        scene.annotation.noise_px = cfg.noise_px;
        scene.annotation.outlier_frac = cfg.outlier_frac;

        for (const GtEdge& ge : visible) {
            if (cfg.outlier_frac > 0.0 && rng.uniform01() < cfg.outlier_frac) {
                scene.segments.push_back(detail::random_outlier(cfg, rng));
                scene.is_outlier.push_back(true);
                continue;
            }
            double x0 = ge.x0, y0 = ge.y0, x1 = ge.x1, y1 = ge.y1;
            if (cfg.noise_px > 0.0) {
                x0 += rng.gaussian(0.0, cfg.noise_px);
                y0 += rng.gaussian(0.0, cfg.noise_px);
                x1 += rng.gaussian(0.0, cfg.noise_px);
                y1 += rng.gaussian(0.0, cfg.noise_px);
            }
            if (std::hypot(x1 - x0, y1 - y0) < 1.0) continue;
            scene.segments.push_back(Segment::from_endpoints(x0, y0, x1, y1));
            scene.is_outlier.push_back(false);
        }
        // Deterministic shuffle so nothing downstream can rely on box order.
        for (std::size_t i = scene.segments.size(); i > 1; --i) {
            const std::size_t j = rng.uniform_int(i);
            std::swap(scene.segments[i - 1], scene.segments[j]);
            std::swap(scene.is_outlier[i - 1], scene.is_outlier[j]);
        }
        return scene;
    }
    throw DegenerateScene("generate_scene: no usable layout after 64 attempts");
}

/// White-on-black 1-px wireframe raster of the observed segments.
/// Default strokes carry exact distance-based coverage so the subpixel
/// line position survives rasterization (deterministic; binary strokes
/// alias shallow lines into terrace runs that no gradient detector can
/// recover). antialias = false draws hard Bresenham strokes.
inline GrayImage render_wireframe(const std::vector<Segment>& segments, int width, int height,
                                  bool antialias = true) {
    GrayImage img(width, height, 0.0);
    if (!antialias) {
        for (const Segment& s : segments)
            for_each_stroke_pixel(s.p0.x, s.p0.y, s.p1.x, s.p1.y, width, height,
                                  [&](int x, int y) { img.at(x, y) = 1.0; });
        return img;
    }
    for (const Segment& s : segments) {
        const double dx = (s.p1.x - s.p0.x) / s.len, dy = (s.p1.y - s.p0.y) / s.len;
        const int x0 = std::max(0, static_cast<int>(std::floor(std::min(s.p0.x, s.p1.x) - 2.0)));
        const int x1 = std::min(width - 1, static_cast<int>(std::ceil(std::max(s.p0.x, s.p1.x) + 2.0)));
        const int y0 = std::max(0, static_cast<int>(std::floor(std::min(s.p0.y, s.p1.y) - 2.0)));
        const int y1 = std::min(height - 1, static_cast<int>(std::ceil(std::max(s.p0.y, s.p1.y) + 2.0)));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const double px = x + 0.5, py = y + 0.5;
                double t = (px - s.p0.x) * dx + (py - s.p0.y) * dy;
                t = std::clamp(t, 0.0, s.len);
                const double d = std::hypot(px - (s.p0.x + t * dx), py - (s.p0.y + t * dy));
                const double v = std::max(0.0, 1.0 - d);
                if (v > img.at(x, y)) img.at(x, y) = v;
            }
        }
    }
    return img;
}

} // namespace calib::synth
