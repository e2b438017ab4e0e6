#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "calib/camera.hpp"
#include "calib/framegen.hpp"
#include "calib/image.hpp"
#include "calib/raster.hpp"
#include "calib/segment.hpp"
#include "calib/synth.hpp"

namespace calib::framescore {

struct ScoreConfig {
    double sigma = 0.1;     // width of the similarity bell
    double delta_s = 0.5;   // binary-label threshold on s_vh
    int k = 8;              // top-k aggregation
};

enum class ScoreMode { deterministic, oracle };

/// Binary map of pixels covered by any segment stroke.
inline GrayImage rasterize(std::span<const Segment> segments, int width, int height) {
    GrayImage map(width, height, 0.0);
    for (const Segment& s : segments)
        for_each_stroke_pixel(s.p0.x, s.p0.y, s.p1.x, s.p1.y, width, height,
                              [&](int x, int y) { map.at(x, y) = 1.0; });
    return map;
}

/// Per-direction activation maps: every stroke painted with the closeness
/// of its line to that direction's VP, keeping the maximum on overlaps.
inline std::array<GrayImage, 3> activation_maps(std::span<const Segment> segments,
                                                const PseudoIntrinsics& pi,
                                                const framegen::FrameHypothesis& hyp,
                                                int width, int height) {
    std::array<GrayImage, 3> maps = {GrayImage(width, height, 0.0),
                                     GrayImage(width, height, 0.0),
                                     GrayImage(width, height, 0.0)};
    for (const Segment& s : segments) {
        const HomLine lp = normalized(line_to_pseudo(s.line, pi));
        for (int d = 0; d < 3; ++d) {
            const double c = closeness(lp, hyp.vps[static_cast<std::size_t>(d)]);
            GrayImage& map = maps[static_cast<std::size_t>(d)];
            for_each_stroke_pixel(s.p0.x, s.p0.y, s.p1.x, s.p1.y, width, height,
                                  [&](int x, int y) {
                                      if (c > map.at(x, y)) map.at(x, y) = c;
                                  });
        }
    }
    return maps;
}

/// Fraction of line-map mass explained by the best of the three
/// activation maps.
inline double manhattan_score(const GrayImage& line_map, const std::array<GrayImage, 3>& a) {
    double denom = 0.0, num = 0.0;
    for (std::size_t i = 0; i < line_map.data.size(); ++i) {
        if (line_map.data[i] <= 0.0) continue;
        denom += line_map.data[i];
        num += std::max({a[0].data[i], a[1].data[i], a[2].data[i]});
    }
    if (denom <= 0.0) throw EmptyLineMap("manhattan_score: empty line map");
    return num / denom;
}

/// Precomputed strokes and pseudo lines for scoring many hypotheses
/// against one segment set without re-rasterizing.
class SceneRaster {
public:
    SceneRaster(std::span<const Segment> segments, const PseudoIntrinsics& pi, int width,
                int height)
        : width_(width), height_(height) {
        strokes_.resize(segments.size());
        pseudo_lines_.resize(segments.size());
        std::vector<char> seen(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
        for (std::size_t i = 0; i < segments.size(); ++i) {
            const Segment& s = segments[i];
            pseudo_lines_[i] = normalized(line_to_pseudo(s.line, pi));
            for_each_stroke_pixel(s.p0.x, s.p0.y, s.p1.x, s.p1.y, width, height,
                                  [&](int x, int y) {
                                      const int px = y * width + x;
                                      strokes_[i].push_back(px);
                                      if (!seen[static_cast<std::size_t>(px)]) {
                                          seen[static_cast<std::size_t>(px)] = 1;
                                          touched_.push_back(px);
                                      }
                                  });
        }
        for (int d = 0; d < 3; ++d)
            scratch_[static_cast<std::size_t>(d)].assign(
                static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0.0);
    }

    int line_pixel_count() const { return static_cast<int>(touched_.size()); }
    int width() const { return width_; }
    int height() const { return height_; }
    const std::vector<HomLine>& pseudo_lines() const { return pseudo_lines_; }

    struct PooledStats {
        double m = 0.0;
        std::array<double, 3> mean{};   // per-direction mean over line pixels
        std::array<double, 3> max{};    // per-direction max
    };

    /// Equivalent to rasterize + activation_maps + manhattan_score for one
    /// hypothesis, plus pooled per-direction statistics.
    PooledStats score(const framegen::FrameHypothesis& hyp) {
        if (touched_.empty()) throw EmptyLineMap("SceneRaster: no stroke pixels");
        for (std::size_t i = 0; i < strokes_.size(); ++i) {
            for (int d = 0; d < 3; ++d) {
                const double c = closeness(pseudo_lines_[i], hyp.vps[static_cast<std::size_t>(d)]);
                std::vector<double>& buf = scratch_[static_cast<std::size_t>(d)];
                for (int px : strokes_[i])
                    if (c > buf[static_cast<std::size_t>(px)]) buf[static_cast<std::size_t>(px)] = c;
            }
        }
        PooledStats stats;
        for (int px : touched_) {
            double best = 0.0;
            for (int d = 0; d < 3; ++d) {
                const double v = scratch_[static_cast<std::size_t>(d)][static_cast<std::size_t>(px)];
                stats.mean[static_cast<std::size_t>(d)] += v;
                stats.max[static_cast<std::size_t>(d)] = std::max(stats.max[static_cast<std::size_t>(d)], v);
                best = std::max(best, v);
            }
            stats.m += best;
        }
        const double n = static_cast<double>(touched_.size());
        stats.m /= n;
        for (int d = 0; d < 3; ++d) stats.mean[static_cast<std::size_t>(d)] /= n;
        for (int px : touched_)
            for (int d = 0; d < 3; ++d)
                scratch_[static_cast<std::size_t>(d)][static_cast<std::size_t>(px)] = 0.0;
        return stats;
    }

private:
    int width_, height_;
    std::vector<std::vector<int>> strokes_;
    std::vector<HomLine> pseudo_lines_;
    std::vector<int> touched_;
    std::array<std::vector<double>, 3> scratch_;
};

/// Image-space horizon of a hypothesis (same construction as
/// horizon_from_camera, from the raw rotation).
inline HomLine hypothesis_horizon(const framegen::FrameHypothesis& hyp, int width, int height) {
    const double dx = hyp.rotation(0, 1), dy = hyp.rotation(1, 1), dz = hyp.rotation(2, 1);
    return {dx, dy, -(width / 2.0 * dx + height / 2.0 * dy) + hyp.f_px * dz};
}

struct GtSimilarity {
    double s_z = 0.0;
    double s_h = 0.0;
    double s_vh = 0.0;
    bool label = false;   // c = 1 iff s_vh >= delta_s
};

/// exp(-max(border distance)^2) with distances in units of image height.
/// A horizon missing a vertical border counts as infinitely far: 0.
inline double horizon_border_similarity(const HomLine& pred, const HomLine& gt, int width,
                                        int height) {
    auto y_at = [](const HomLine& l, double x) {
        if (l.b == 0.0) return std::numeric_limits<double>::infinity();
        return -(l.a * x + l.c) / l.b;
    };
    const double yl_p = y_at(pred, 0.0), yr_p = y_at(pred, static_cast<double>(width));
    const double yl_g = y_at(gt, 0.0), yr_g = y_at(gt, static_cast<double>(width));
    if (!std::isfinite(yl_p) || !std::isfinite(yr_p) || !std::isfinite(yl_g) ||
        !std::isfinite(yr_g))
        return 0.0;
    const double dmax =
        std::max(std::abs(yl_p - yl_g), std::abs(yr_p - yr_g)) / static_cast<double>(height);
    return std::exp(-dmax * dmax);
}

/// Squared-exponential bell around a perfect combined similarity of 1.
inline double combined_similarity(double s_h, double s_v, double sigma) {
    const double mid = (s_h + s_v) / 2.0 - 1.0;
    return std::exp(-mid * mid / (2.0 * sigma * sigma));
}

/// Similarity of a hypothesis to ground truth: zenith cosine, horizon
/// border distance, and their combined bell score with binary label.
inline GtSimilarity gt_similarity(const framegen::FrameHypothesis& hyp,
                                  const synth::SceneAnnotation& gt, const ScoreConfig& cfg) {
    GtSimilarity out;
    out.s_z = cossim(gt.z_gt, hyp.vps[1]);
    const HomLine pred = hypothesis_horizon(hyp, gt.cam.width, gt.cam.height);
    out.s_h = horizon_border_similarity(pred, gt.horizon_gt, gt.cam.width, gt.cam.height);
    out.s_vh = combined_similarity(out.s_h, out.s_z, cfg.sigma);
    out.label = out.s_vh >= cfg.delta_s;
    return out;
}

/// Final candidate score: GT-similarity-weighted in oracle mode, the
/// Manhattan score alone in deterministic inference (no scoring network
/// is attached; the structure of the product is preserved).
inline double final_score(const framegen::FrameHypothesis& hyp, ScoreMode mode) {
    if (mode == ScoreMode::oracle) {
        const double svh = hyp.s_vh >= 0.0 ? hyp.s_vh : 1.0;
        return svh * hyp.m;
    }
    return hyp.m;
}

struct TopkResult {
    CameraParams camera;
    double best_score = 0.0;
    int best_index = -1;
    std::vector<int> topk_indices;
};

/// Average focal length and zenith structure tensor over the top-k scored
/// hypotheses; yaw comes from the single best candidate.
inline TopkResult aggregate_topk(const std::vector<framegen::FrameHypothesis>& hypotheses,
                                 const ScoreConfig& cfg, const PseudoIntrinsics& pi,
                                 int width, int height) {
    if (hypotheses.empty()) throw NoHypotheses("aggregate_topk: no scored hypotheses");
    std::vector<int> order(hypotheses.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return hypotheses[static_cast<std::size_t>(a)].s > hypotheses[static_cast<std::size_t>(b)].s;
    });
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(std::max(cfg.k, 1)),
                                                hypotheses.size());

    TopkResult out;
    out.best_index = order[0];
    out.best_score = hypotheses[static_cast<std::size_t>(order[0])].s;
    out.topk_indices.assign(order.begin(), order.begin() + static_cast<long>(k));

    double wsum = 0.0, f_acc = 0.0;
    Mat3 st_acc;
    for (int idx : out.topk_indices)
        wsum += hypotheses[static_cast<std::size_t>(idx)].s;
    const bool uniform = wsum <= 0.0;   // degenerate scores: unweighted average
    for (int idx : out.topk_indices) {
        const auto& hyp = hypotheses[static_cast<std::size_t>(idx)];
        const double w = uniform ? 1.0 : hyp.s;
        f_acc += w * hyp.f_px;
        st_acc = st_acc + structure_tensor(hyp.vps[1]) * w;
    }
    const double denom = uniform ? static_cast<double>(k) : wsum;
    const double f_est = f_acc / denom;
    const HomPoint z_est = principal_eigenvector(st_acc * (1.0 / denom));
    const PitchRoll pr = angles_from_zenith(z_est, f_est, pi);
    const EulerAngles best_angles =
        rotation_angles(hypotheses[static_cast<std::size_t>(out.best_index)].rotation);

    out.camera.f = f_est;
    out.camera.psi = pr.psi;
    out.camera.phi = pr.phi;
    out.camera.theta = best_angles.theta;
    out.camera.width = width;
    out.camera.height = height;
    return out;
}

// ------------------------------------------------- optional frame scorer
// Logistic model over pooled activation statistics; a stand-in with the
// same training labels as the full image-based scorer, kept behind a flag.

struct FrameFeatures {
    std::array<double, 8> v{};   // mean A_d (3), max A_d (3), m, f / f_pseudo
};

inline FrameFeatures make_features(const SceneRaster::PooledStats& stats, double f_px,
                                   const PseudoIntrinsics& pi) {
    FrameFeatures f;
    f.v = {stats.mean[0], stats.mean[1], stats.mean[2],
           stats.max[0], stats.max[1], stats.max[2],
           stats.m, f_px / pi.f_pseudo};
    return f;
}

struct FrameScorerModel {
    std::array<double, 8> w{};
    double b = 0.0;

    double predict(const FrameFeatures& f) const {
        double a = b;
        for (std::size_t i = 0; i < f.v.size(); ++i) a += w[i] * f.v[i];
        return 1.0 / (1.0 + std::exp(-a));
    }
};

struct FrameScorerTrainConfig {
    int iterations = 500;
    double lr = 0.5;
};

/// Full-batch logistic regression with standard cross entropy on the
/// binary similarity labels.
inline FrameScorerModel train_frame_scorer(
    const std::vector<std::pair<FrameFeatures, int>>& data,
    const FrameScorerTrainConfig& cfg = {}) {
    if (data.empty()) throw EmptyInput("train_frame_scorer: no samples");
    FrameScorerModel model;
    const double n = static_cast<double>(data.size());
    for (int it = 0; it < cfg.iterations; ++it) {
        std::array<double, 8> gw{};
        double gb = 0.0;
        for (const auto& [feat, label] : data) {
            const double p = model.predict(feat);
            const double err = p - static_cast<double>(label);
            for (std::size_t i = 0; i < gw.size(); ++i) gw[i] += err * feat.v[i];
            gb += err;
        }
        for (std::size_t i = 0; i < gw.size(); ++i) model.w[i] -= cfg.lr * gw[i] / n;
        model.b -= cfg.lr * gb / n;
    }
    return model;
}

// -------------------------------------------- inspection tensor export

/// The 17-channel stack fed to the full-scale scorer in the original
/// design: image (replicated to 3 channels), line map, three activation
/// maps, the three VPs (9 constant channels) and the relative focal
/// length. Export-only; nothing downstream consumes it.
inline std::vector<float> export_channels(const GrayImage& image,
                                          std::span<const Segment> segments,
                                          const PseudoIntrinsics& pi,
                                          const framegen::FrameHypothesis& hyp) {
    const int w = image.width, h = image.height;
    const std::size_t plane = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    std::vector<float> out(plane * 17, 0.0f);
    const GrayImage line_map = rasterize(segments, w, h);
    const auto maps = activation_maps(segments, pi, hyp, w, h);
    for (std::size_t i = 0; i < plane; ++i) {
        const float g = static_cast<float>(image.data[i]);
        out[i] = out[plane + i] = out[2 * plane + i] = g;
        out[3 * plane + i] = static_cast<float>(line_map.data[i]);
        for (std::size_t d = 0; d < 3; ++d)
            out[(4 + d) * plane + i] = static_cast<float>(maps[d].data[i]);
    }
    for (std::size_t axis = 0; axis < 3; ++axis) {
        const HomPoint& v = hyp.vps[axis];
        const double coords[3] = {v.x, v.y, v.w};
        for (std::size_t c = 0; c < 3; ++c)
            std::fill_n(out.begin() + static_cast<long>((7 + 3 * axis + c) * plane), plane,
                        static_cast<float>(coords[c]));
    }
    std::fill_n(out.begin() + static_cast<long>(16 * plane), plane,
                static_cast<float>(hyp.f_px / pi.f_pseudo));
    return out;
}

inline const std::array<const char*, 17>& channel_names() {
    static const std::array<const char*, 17> names = {
        "image_r", "image_g", "image_b", "line_map", "activation_x", "activation_y",
        "activation_z", "vp_x_x", "vp_x_y", "vp_x_w", "vp_y_x", "vp_y_y", "vp_y_w",
        "vp_z_x", "vp_z_y", "vp_z_w", "f_rel"};
    return names;
}

} // namespace calib::framescore
