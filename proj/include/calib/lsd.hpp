#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "calib/image.hpp"
#include "calib/segment.hpp"

namespace calib::lsd {

// Gradient-based line segment detector in the style of the classic
// level-line region grower, with a simplified validation step: region
// density plus an aligned-pixel count instead of the full NFA test.
// Detections from externally supplied files can replace this stage at
// any time via the segment file format.

struct DetectorConfig {
    double min_length = 10.0;       // px, strict lower bound on segment length
    double angle_tol_deg = 22.5;    // level-line alignment tolerance (tau)
    double density_min = 0.7;       // aligned pixels per rectangle area
    double grad_threshold = 0.02;   // minimum usable gradient magnitude
    int min_region_size = 8;        // aligned-pixel rejection threshold
    double merge_angle_deg = 3.0;   // duplicate/fragment merge: max direction difference
    double merge_dist_px = 3.5;     // merge: max lateral line offset
    double merge_gap_px = 8.0;      // merge: max collinear gap (crossings cut regions)
};

namespace detail {

/// Separable Gaussian, reflected borders. The classic detector smooths
/// before the gradient; without it, 1-px binary strokes alias so badly
/// that level-line angles on diagonals are useless.
inline GrayImage gaussian_smooth(const GrayImage& img, double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(2.5 * sigma)));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double ksum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[static_cast<std::size_t>(i + radius)] = std::exp(-(i * i) / (2.0 * sigma * sigma));
        ksum += kernel[static_cast<std::size_t>(i + radius)];
    }
    for (double& k : kernel) k /= ksum;
    auto reflect = [](int i, int n) {
        if (i < 0) return -i - 1;
        if (i >= n) return 2 * n - i - 1;
        return i;
    };
    GrayImage tmp(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[static_cast<std::size_t>(i + radius)] * img.at(reflect(x + i, img.width), y);
            tmp.at(x, y) = acc;
        }
    GrayImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[static_cast<std::size_t>(i + radius)] * tmp.at(x, reflect(y + i, img.height));
            out.at(x, y) = acc;
        }
    return out;
}

struct GradField {
    int w = 0, h = 0;               // gradient grid (image minus one)
    std::vector<double> mag;
    std::vector<double> angle;      // level-line angle in (-pi, pi]
};

inline GradField gradient(const GrayImage& img) {
    GradField g;
    g.w = img.width - 1;
    g.h = img.height - 1;
    g.mag.assign(static_cast<std::size_t>(g.w) * static_cast<std::size_t>(g.h), 0.0);
    g.angle.assign(g.mag.size(), 0.0);
    for (int y = 0; y < g.h; ++y) {
        for (int x = 0; x < g.w; ++x) {
            const double a = img.at(x, y), b = img.at(x + 1, y);
            const double c = img.at(x, y + 1), d = img.at(x + 1, y + 1);
            const double gx = (b - a + d - c) / 2.0;
            const double gy = (c - a + d - b) / 2.0;
            const std::size_t i = static_cast<std::size_t>(y) * static_cast<std::size_t>(g.w) + static_cast<std::size_t>(x);
            g.mag[i] = std::hypot(gx, gy);
            g.angle[i] = std::atan2(gx, -gy);
        }
    }
    return g;
}

inline double angle_diff(double a, double b) {
    double d = a - b;
    while (d > 3.14159265358979323846) d -= 2.0 * 3.14159265358979323846;
    while (d < -3.14159265358979323846) d += 2.0 * 3.14159265358979323846;
    return std::abs(d);
}

struct Rect {
    double cx = 0.0, cy = 0.0;      // weighted center, gradient-grid coords
    double dx = 1.0, dy = 0.0;      // unit main direction
    double t_min = 0.0, t_max = 0.0;
    double width = 0.0;
    double density = 0.0;
};

inline Rect fit_rect(const GradField& g, const std::vector<int>& region) {
    Rect r;
    double wsum = 0.0;
    for (int i : region) {
        const double w = g.mag[static_cast<std::size_t>(i)];
        r.cx += w * (i % g.w);
        r.cy += w * (i / g.w);
        wsum += w;
    }
    r.cx /= wsum;
    r.cy /= wsum;
    double ixx = 0.0, iyy = 0.0, ixy = 0.0;
    for (int i : region) {
        const double w = g.mag[static_cast<std::size_t>(i)];
        const double ddx = (i % g.w) - r.cx;
        const double ddy = (i / g.w) - r.cy;
        ixx += w * ddx * ddx;
        iyy += w * ddy * ddy;
        ixy += w * ddx * ddy;
    }
    // Principal axis of the 2x2 inertia matrix.
    const double tr = ixx + iyy;
    const double det = ixx * iyy - ixy * ixy;
    const double lambda = tr / 2.0 + std::sqrt(std::max(tr * tr / 4.0 - det, 0.0));
    double vx = ixy, vy = lambda - ixx;
    if (std::abs(vx) < 1e-12 && std::abs(vy) < 1e-12) {
        vx = ixx >= iyy ? 1.0 : 0.0;
        vy = ixx >= iyy ? 0.0 : 1.0;
    }
    const double n = std::hypot(vx, vy);
    r.dx = vx / n;
    r.dy = vy / n;

    double t_lo = 1e30, t_hi = -1e30, s_lo = 1e30, s_hi = -1e30;
    for (int i : region) {
        const double ddx = (i % g.w) - r.cx;
        const double ddy = (i / g.w) - r.cy;
        const double t = ddx * r.dx + ddy * r.dy;
        const double s = -ddx * r.dy + ddy * r.dx;
        t_lo = std::min(t_lo, t);
        t_hi = std::max(t_hi, t);
        s_lo = std::min(s_lo, s);
        s_hi = std::max(s_hi, s);
    }
    r.t_min = t_lo;
    r.t_max = t_hi;
    r.width = std::max(s_hi - s_lo, 1.0);
    const double len = std::max(t_hi - t_lo, 1.0);
    r.density = static_cast<double>(region.size()) / (len * r.width);
    return r;
}

/// Merge collinear detections: same direction within merge_angle_deg,
/// lateral offset below merge_dist_px, extents overlapping or separated
/// by at most merge_gap_px (region growth stops at stroke crossings).
/// Runs in one pass over length-sorted input; callers may iterate.
inline std::vector<Segment> merge_collinear(const std::vector<Segment>& segments,
                                            const DetectorConfig& cfg) {
    const double cos_merge = std::cos(cfg.merge_angle_deg * 3.14159265358979323846 / 180.0);
    std::vector<Segment> merged;
    std::vector<char> absorbed(segments.size(), 0);
    for (std::size_t i = 0; i < segments.size(); ++i) {
        if (absorbed[i]) continue;
        const Segment& s = segments[i];
        const double dxi = (s.p1.x - s.p0.x) / s.len, dyi = (s.p1.y - s.p0.y) / s.len;
        double t_lo = 0.0, t_hi = s.len;
        for (std::size_t j = i + 1; j < segments.size(); ++j) {
            if (absorbed[j]) continue;
            const Segment& o = segments[j];
            const double dxj = (o.p1.x - o.p0.x) / o.len, dyj = (o.p1.y - o.p0.y) / o.len;
            if (std::abs(dxi * dxj + dyi * dyj) < cos_merge) continue;
            const double off = std::abs(dot(s.line, HomPoint{o.midpoint_x(), o.midpoint_y(), 1.0})) /
                               std::hypot(s.line.a, s.line.b);
            if (off > cfg.merge_dist_px) continue;
            const double ta = (o.p0.x - s.p0.x) * dxi + (o.p0.y - s.p0.y) * dyi;
            const double tb = (o.p1.x - s.p0.x) * dxi + (o.p1.y - s.p0.y) * dyi;
            const double o_lo = std::min(ta, tb), o_hi = std::max(ta, tb);
            if (o_lo > t_hi + cfg.merge_gap_px || o_hi < t_lo - cfg.merge_gap_px) continue;
            t_lo = std::min(t_lo, o_lo);
            t_hi = std::max(t_hi, o_hi);
            absorbed[j] = 1;
        }
        merged.push_back(Segment::from_endpoints(s.p0.x + dxi * t_lo, s.p0.y + dyi * t_lo,
                                                 s.p0.x + dxi * t_hi, s.p0.y + dyi * t_hi));
    }
    return merged;
}

} // namespace detail

/// Segments sorted by descending length. Near-identical detections (same
/// line within merge_angle_deg and overlapping or nearly touching extent)
/// are merged; a 1-px stroke with its two opposite-polarity edges comes
/// out as a single segment.
inline std::vector<Segment> detect_segments(const GrayImage& img, const DetectorConfig& cfg) {
    if (img.width < 16 || img.height < 16)
        throw ImageTooSmall("detect_segments: image must be at least 16x16");
    const detail::GradField g = detail::gradient(detail::gaussian_smooth(img, 0.8));
    const double tau = cfg.angle_tol_deg * 3.14159265358979323846 / 180.0;
    const std::size_t n = g.mag.size();

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return g.mag[static_cast<std::size_t>(a)] > g.mag[static_cast<std::size_t>(b)];
    });

    std::vector<char> used(n, 0);
    std::vector<Segment> segments;
    std::vector<int> region;
    for (int seed : order) {
        if (used[static_cast<std::size_t>(seed)] || g.mag[static_cast<std::size_t>(seed)] < cfg.grad_threshold) continue;
        region.clear();
        region.push_back(seed);
        used[static_cast<std::size_t>(seed)] = 1;
        double sx = std::cos(g.angle[static_cast<std::size_t>(seed)]);
        double sy = std::sin(g.angle[static_cast<std::size_t>(seed)]);
        double region_angle = g.angle[static_cast<std::size_t>(seed)];
        for (std::size_t k = 0; k < region.size(); ++k) {
            const int px = region[k] % g.w, py = region[k] / g.w;
            for (int ny = py - 1; ny <= py + 1; ++ny) {
                for (int nx = px - 1; nx <= px + 1; ++nx) {
                    if (nx < 0 || ny < 0 || nx >= g.w || ny >= g.h) continue;
                    const int ni = ny * g.w + nx;
                    if (used[static_cast<std::size_t>(ni)] || g.mag[static_cast<std::size_t>(ni)] < cfg.grad_threshold) continue;
                    if (detail::angle_diff(g.angle[static_cast<std::size_t>(ni)], region_angle) > tau) continue;
                    used[static_cast<std::size_t>(ni)] = 1;
                    region.push_back(ni);
                    sx += std::cos(g.angle[static_cast<std::size_t>(ni)]);
                    sy += std::sin(g.angle[static_cast<std::size_t>(ni)]);
                    region_angle = std::atan2(sy, sx);
                }
            }
        }
        if (static_cast<int>(region.size()) < cfg.min_region_size) continue;

        detail::Rect rect = detail::fit_rect(g, region);
        // Shrink towards the center while the rectangle stays too sparse.
        std::vector<int> trimmed = region;
        for (int round = 0; rect.density < cfg.density_min && round < 5; ++round) {
            const double radius =
                0.75 * std::max(std::abs(rect.t_min), std::abs(rect.t_max));
            std::vector<int> keep;
            for (int i : trimmed) {
                const double ddx = (i % g.w) - rect.cx;
                const double ddy = (i / g.w) - rect.cy;
                if (std::hypot(ddx, ddy) <= radius) keep.push_back(i);
            }
            if (static_cast<int>(keep.size()) < cfg.min_region_size || keep.size() == trimmed.size())
                break;
            trimmed.swap(keep);
            rect = detail::fit_rect(g, trimmed);
        }
        if (rect.density < cfg.density_min) continue;
        if (static_cast<int>(trimmed.size()) < cfg.min_region_size) continue;

        const double len = rect.t_max - rect.t_min;
        if (len <= cfg.min_length) continue;
        // Gradient cells sit half a cell past the pixel centers: +1 offset
        // from grid index to continuous pixel coordinates.
        const double ox = rect.cx + 1.0, oy = rect.cy + 1.0;
        segments.push_back(Segment::from_endpoints(
            ox + rect.dx * rect.t_min, oy + rect.dy * rect.t_min,
            ox + rect.dx * rect.t_max, oy + rect.dy * rect.t_max));
    }

    std::stable_sort(segments.begin(), segments.end(),
                     [](const Segment& a, const Segment& b) { return a.len > b.len; });
    segments = detail::merge_collinear(segments, cfg);
    segments = detail::merge_collinear(segments, cfg);
    std::stable_sort(segments.begin(), segments.end(),
                     [](const Segment& a, const Segment& b) { return a.len > b.len; });
    return segments;
}

} // namespace calib::lsd
