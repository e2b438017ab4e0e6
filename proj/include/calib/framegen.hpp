#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "calib/camera.hpp"
#include "calib/rng.hpp"
#include "calib/segment.hpp"
#include "calib/zenith.hpp"

namespace calib::framegen {

struct FrameGenConfig {
    int n_frames = 256;
    int min_frames = 8;
    double junction_radius = 5.0;      // px at low resolution
    double vert_closeness_deg = 2.0;   // zenith-vanishing classification tolerance
    double max_pitch_deg = 45.0;       // plausibility gate on recovered pitch; <= 0 disables
    double min_pair_angle_deg = 2.0;   // near-parallel pairs give unstable VPs; <= 0 disables
    double fov_min_deg = 38.0;         // plausibility window on the implied vertical FoV
    double fov_max_deg = 82.0;         // (<= 0 disables either bound)
    double refine_tol_deg = 3.0;       // guided-matching VP refinement; <= 0 disables
    std::uint64_t seed = 1;
};

/// One candidate Manhattan frame: focal length, world-to-camera rotation,
/// and the three axis VPs in pseudo space (x, vertical y, z).
struct FrameHypothesis {
    double f_px = 0.0;
    Mat3 rotation;
    std::array<HomPoint, 3> vps;
    int zenith_source = -1;   // index into the selected zenith candidates
    double m = 0.0;           // Manhattan consistency score
    double s_vh = -1.0;       // GT similarity, set in oracle mode only
    double s = 0.0;           // final score
};

struct GroupedSegments {
    std::vector<int> vertical;      // zenith-vanishing segment indices
    std::vector<int> group_left;    // horizontal candidates, left of the pivot
    std::vector<int> group_right;
    std::vector<HomPoint> junctions;   // pixel space, w = 1
};

/// Polar line of the zenith estimate under the pseudo intrinsics: in
/// pseudo coordinates the horizon coefficients equal z_est itself. Exact
/// when the true focal equals the pseudo focal; an approximation used
/// only to split horizontal segments into two groups.
inline HomLine pseudo_horizon(const HomPoint& z_est) {
    const double n = norm(z_est);
    if (n == 0.0) throw DegenerateInput("pseudo_horizon: zero zenith");
    if (std::hypot(z_est.x, z_est.y) <= 1e-12 * n)
        throw DegenerateInput("pseudo_horizon: zenith at the pseudo-space origin");
    return {z_est.x, z_est.y, z_est.w};
}

/// Junction heuristic: vertical-classified and other segments that nearly
/// touch produce junction points; non-vertical segments with an endpoint
/// near a junction are kept and split by which side of the pivot (the
/// line through z_est and the image center) they cross the pseudo-horizon.
inline GroupedSegments group_horizontals(std::span<const Segment> segments,
                                         const PseudoIntrinsics& pi, const HomPoint& z_est,
                                         const FrameGenConfig& cfg) {
    const HomLine horizon = pseudo_horizon(z_est);
    const HomLine pivot{z_est.y, -z_est.x, 0.0};
    const double vert_thr = closeness_threshold(cfg.vert_closeness_deg);

    GroupedSegments out;
    const int n = static_cast<int>(segments.size());
    std::vector<char> is_vertical(static_cast<std::size_t>(n), 0);
    std::vector<HomLine> pseudo_lines(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        pseudo_lines[static_cast<std::size_t>(i)] =
            normalized(line_to_pseudo(segments[static_cast<std::size_t>(i)].line, pi));
        if (closeness(pseudo_lines[static_cast<std::size_t>(i)], z_est) > vert_thr) {
            is_vertical[static_cast<std::size_t>(i)] = 1;
            out.vertical.push_back(i);
        }
    }

    auto endpoint_gap = [&](const Segment& a, const Segment& b) {
        auto d = [](const HomPoint& p, const HomPoint& q) {
            return std::hypot(p.x - q.x, p.y - q.y);
        };
        return std::min(std::min(d(a.p0, b.p0), d(a.p0, b.p1)),
                        std::min(d(a.p1, b.p0), d(a.p1, b.p1)));
    };
    for (int v : out.vertical) {
        for (int h = 0; h < n; ++h) {
            if (is_vertical[static_cast<std::size_t>(h)]) continue;
            const Segment& sv = segments[static_cast<std::size_t>(v)];
            const Segment& sh = segments[static_cast<std::size_t>(h)];
            if (endpoint_gap(sv, sh) >= cfg.junction_radius) continue;
            if (scale_equivalent(sv.line, sh.line, 1e-12)) continue;
            const HomPoint j = intersect(sv.line, sh.line);
            if (std::abs(j.w) <= 1e-12 * norm(j)) continue;
            out.junctions.push_back({j.x / j.w, j.y / j.w, 1.0});
        }
    }

    for (int i = 0; i < n; ++i) {
        if (is_vertical[static_cast<std::size_t>(i)]) continue;
        const Segment& s = segments[static_cast<std::size_t>(i)];
        bool near_junction = false;
        for (const HomPoint& j : out.junctions) {
            if (std::hypot(s.p0.x - j.x, s.p0.y - j.y) < cfg.junction_radius ||
                std::hypot(s.p1.x - j.x, s.p1.y - j.y) < cfg.junction_radius) {
                near_junction = true;
                break;
            }
        }
        if (!near_junction) continue;
        const HomLine& lp = pseudo_lines[static_cast<std::size_t>(i)];
        if (scale_equivalent(lp, horizon, 1e-12)) continue;
        const HomPoint crossing = normalized(intersect(lp, horizon));
        if (dot(pivot, crossing) >= 0.0)
            out.group_right.push_back(i);
        else
            out.group_left.push_back(i);
    }

    if (out.group_left.empty() || out.group_right.empty())
        throw NoHorizontals("group_horizontals: a pivot side has no horizontal segments");
    return out;
}

/// One reweighted least-squares pass pulling a pair-sampled VP onto the
/// consensus of its in-group inliers. A VP from two noisy segments carries
/// their full endpoint noise; averaging over the supporting pencil removes
/// most of it.
inline HomPoint refine_horizontal_vp(const std::vector<HomLine>& group_lines,
                                     const HomPoint& initial, double tol_deg) {
    HomPoint vp = normalized(initial);
    // Annealed gates: a pair-sampled VP can start well off its pencil's
    // consensus, so the first rounds accept a wide inlier band.
    const double schedule[5] = {4.0, 2.5, 1.5, 1.0, 0.5};
    for (double factor : schedule) {
        const double round_tol = tol_deg * factor;
        const double gate = closeness_threshold(round_tol);
        const double soft = std::sin(round_tol * 0.5 * 3.14159265358979323846 / 180.0);
        const double eps2 = soft * soft;
        Mat3 scatter;
        int support = 0;
        for (const HomLine& l : group_lines) {
            if (closeness(l, vp) <= gate) continue;
            ++support;
            const double r = dot(l, vp);
            const double w = eps2 / (r * r + eps2);
            scatter(0, 0) += l.a * l.a * w;
            scatter(0, 1) += l.a * l.b * w;
            scatter(0, 2) += l.a * l.c * w;
            scatter(1, 1) += l.b * l.b * w;
            scatter(1, 2) += l.b * l.c * w;
            scatter(2, 2) += l.c * l.c * w;
        }
        if (support < 3) continue;
        scatter(1, 0) = scatter(0, 1);
        scatter(2, 0) = scatter(0, 2);
        scatter(2, 1) = scatter(1, 2);
        const SymEigen3 eig = sym_eigen3(scatter);
        vp = eig.vectors[2];
    }
    return vp;
}

struct FrameSampleResult {
    std::vector<FrameHypothesis> hypotheses;
    int shortfall = 0;   // requested minus produced, when the budget ran out
};

/// Draw Manhattan-frame hypotheses: one zenith candidate plus one
/// horizontal VP from a random in-group segment pair, alternating groups
/// so both contribute equally. Rejected draws (parallel pairs, no real
/// focal) are re-drawn within a budget. Draw streams are derived from
/// (seed, counter), so the output does not depend on scheduling.
inline FrameSampleResult sample_frames(std::span<const Segment> segments,
                                       const GroupedSegments& groups,
                                       const std::vector<zenith::ZenithCandidate>& z_c,
                                       const PseudoIntrinsics& pi, const FrameGenConfig& cfg) {
    if (z_c.empty()) throw DegenerateInput("sample_frames: no zenith candidates");
    if (groups.group_left.empty() && groups.group_right.empty())
        throw DegenerateInput("sample_frames: both groups empty");

    std::vector<HomLine> pseudo_lines(segments.size());
    for (std::size_t i = 0; i < segments.size(); ++i)
        pseudo_lines[i] = normalized(line_to_pseudo(segments[i].line, pi));

    const double f_rel_scale = 1.0 / pi.f_pseudo;
    FrameSampleResult result;
    const int quota[2] = {(cfg.n_frames + 1) / 2, cfg.n_frames / 2};
    int produced[2] = {0, 0};
    long attempts[2] = {0, 0};
    const long budget_each = 100L * std::max(cfg.n_frames, 1);
    std::uint64_t counter = 0;

    auto try_draw = [&](int side) -> bool {
        const std::vector<int>& group = side == 0 ? groups.group_left : groups.group_right;
        Rng rng = Rng::derive(cfg.seed, counter++);
        if (group.size() < 2) return false;
        const std::size_t zi = rng.uniform_int(z_c.size());
        const std::size_t a = rng.uniform_int(group.size());
        std::size_t b = rng.uniform_int(group.size() - 1);
        if (b >= a) ++b;
        const HomLine& la = pseudo_lines[static_cast<std::size_t>(group[a])];
        const HomLine& lb = pseudo_lines[static_cast<std::size_t>(group[b])];
        if (scale_equivalent(la, lb, 1e-12)) return false;
        if (cfg.min_pair_angle_deg > 0.0) {
            const double cross = std::abs(la.a * lb.b - lb.a * la.b);
            const double na = std::hypot(la.a, la.b), nb = std::hypot(lb.a, lb.b);
            if (cross < std::sin(cfg.min_pair_angle_deg * 3.14159265358979323846 / 180.0) * na * nb)
                return false;
        }
        HomPoint h_vp = intersect(la, lb);
        if (cfg.refine_tol_deg > 0.0) {
            std::vector<HomLine> group_lines;
            group_lines.reserve(group.size());
            for (int gi : group) group_lines.push_back(pseudo_lines[static_cast<std::size_t>(gi)]);
            h_vp = refine_horizontal_vp(group_lines, h_vp, cfg.refine_tol_deg);
        }
        std::optional<TwoVpCalibration> calib;
        try {
            calib = calibrate_from_vps(z_c[zi].v, h_vp, pi);
        } catch (const DegenerateInput&) {
            return false;
        }
        if (!calib) return false;
        // A Manhattan frame whose "vertical" is actually a horizontal axis
        // reproduces every line (same axes as a set) but implies an
        // implausible pitch; reject it like a no-real-focal draw. The FoV
        // window likewise discards focal lengths no plausible camera has.
        if (cfg.max_pitch_deg > 0.0) {
            const double pitch_deg =
                std::abs(rotation_angles(calib->rotation).psi) * 180.0 / 3.14159265358979323846;
            if (pitch_deg > cfg.max_pitch_deg) return false;
        }
        const double fov_deg =
            2.0 * std::atan(pi.cv / calib->f_px) * 180.0 / 3.14159265358979323846;
        if (cfg.fov_min_deg > 0.0 && fov_deg < cfg.fov_min_deg) return false;
        if (cfg.fov_max_deg > 0.0 && fov_deg > cfg.fov_max_deg) return false;
        FrameHypothesis hyp;
        hyp.f_px = calib->f_px;
        hyp.rotation = calib->rotation;
        const double f_rel = calib->f_px * f_rel_scale;
        for (int axis = 0; axis < 3; ++axis) {
            const HomPoint d{calib->rotation(0, axis), calib->rotation(1, axis),
                             calib->rotation(2, axis)};
            hyp.vps[static_cast<std::size_t>(axis)] =
                normalized(HomPoint{f_rel * d.x, f_rel * d.y, d.w});
        }
        hyp.zenith_source = static_cast<int>(zi);
        result.hypotheses.push_back(hyp);
        return true;
    };

    bool progress = true;
    while (progress) {
        progress = false;
        for (int side = 0; side < 2; ++side) {
            while (produced[side] < quota[side] && attempts[side] < budget_each) {
                ++attempts[side];
                if (try_draw(side)) {
                    ++produced[side];
                    progress = true;
                    break;   // alternate sides after each success
                }
            }
        }
    }
    result.shortfall = cfg.n_frames - static_cast<int>(result.hypotheses.size());
    if (static_cast<int>(result.hypotheses.size()) < cfg.min_frames)
        throw InsufficientHypotheses("sample_frames: fewer than min_frames valid hypotheses");
    return result;
}

} // namespace calib::framegen
