#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "calib/camera.hpp"
#include "calib/framegen.hpp"
#include "calib/framescore.hpp"
#include "calib/lsd.hpp"
#include "calib/metrics.hpp"
#include "calib/segment.hpp"
#include "calib/synth.hpp"
#include "calib/zenith.hpp"
#include "calib/zsnet.hpp"

namespace calib::pipeline {

struct PipelineConfig {
    zenith::ZenithConfig zenith;
    framegen::FrameGenConfig frames;
    framescore::ScoreConfig score;
    lsd::DetectorConfig detector;
    framescore::ScoreMode mode = framescore::ScoreMode::deterministic;
    double fallback_tol_deg = 2.0;   // consensus tolerance of the fallback scorer
    std::uint64_t seed = 1;
};

struct CalibrationOutput {
    CameraParams camera;
    HomLine horizon;                 // image pixel space
    HomPoint z_est;                  // pseudo space
    double score = 0.0;              // best hypothesis final score
    bool degraded = false;
    int frame_shortfall = 0;
    std::vector<std::string> notes;
    int n_lines = 0, n_candidates = 0, n_selected = 0, n_hypotheses = 0;
    std::vector<framegen::FrameHypothesis> hypotheses;
    int best_index = -1;
    std::string mode_label = "deterministic";
};

namespace detail {

inline std::vector<Segment> length_filtered(std::span<const Segment> segments,
                                            double min_length) {
    std::vector<Segment> out;
    for (const Segment& s : segments)
        if (s.len > min_length) out.push_back(s);
    return out;
}

/// Zenith-only result used when no horizontal structure is available:
/// pitch and roll from the zenith under the pseudo focal, yaw zero.
inline CalibrationOutput degraded_output(const HomPoint& z_est, const PseudoIntrinsics& pi,
                                         int width, int height, CalibrationOutput base,
                                         const std::string& reason) {
    base.degraded = true;
    base.notes.push_back(reason);
    base.z_est = z_est;
    base.camera.f = pi.f_pseudo;
    base.camera.theta = 0.0;
    base.camera.width = width;
    base.camera.height = height;
    try {
        const PitchRoll pr = angles_from_zenith(z_est, pi.f_pseudo, pi);
        base.camera.psi = pr.psi;
        base.camera.phi = pr.phi;
    } catch (const DegenerateInput&) {
        base.camera.psi = 0.0;
        base.camera.phi = 0.0;
        base.notes.push_back("zenith at principal point; level camera assumed");
    }
    base.horizon = horizon_from_camera(base.camera);
    return base;
}

} // namespace detail

/// Vertical filtering, candidate sampling and labeling packaged as one
/// training example for the set scorer.
inline zsnet::TrainBatch make_train_batch(std::span<const Segment> segments, int width,
                                          int height, const HomPoint& z_gt,
                                          const zenith::ZenithConfig& zcfg) {
    const PseudoIntrinsics pi = PseudoIntrinsics::for_image(width, height);
    zsnet::TrainBatch batch;
    batch.lines = zenith::filter_vertical(segments, pi, zcfg);
    auto candidates = zenith::sample_candidates(batch.lines, zcfg);
    zenith::label_candidates(candidates, z_gt, zcfg);
    bool any_defined = false;
    for (const auto& c : candidates) {
        batch.candidates.push_back(c.v);
        batch.labels.push_back(c.label);
        any_defined |= c.label != zenith::Label::undefined;
    }
    if (!any_defined)
        throw NoLabeledCandidates("make_train_batch: all candidate labels undefined");
    batch.z_gt = normalized(z_gt);
    return batch;
}

/// The full hypothesize-and-score pipeline over detected segments.
/// gt enables oracle scoring; net replaces the fallback zenith scorer;
/// frame_model replaces the constant similarity in deterministic mode.
inline CalibrationOutput run_calibration(std::span<const Segment> segments_in, int width,
                                         int height, const PipelineConfig& cfg,
                                         const synth::SceneAnnotation* gt = nullptr,
                                         const zsnet::ScorerParams* net = nullptr,
                                         const framescore::FrameScorerModel* frame_model = nullptr) {
    if (cfg.mode == framescore::ScoreMode::oracle && gt == nullptr)
        throw DegenerateInput("run_calibration: oracle mode requires ground truth");
    const PseudoIntrinsics pi = PseudoIntrinsics::for_image(width, height);
    const std::vector<Segment> segments =
        detail::length_filtered(segments_in, cfg.detector.min_length);

    CalibrationOutput out;
    out.mode_label = cfg.mode == framescore::ScoreMode::oracle ? "oracle"
                     : frame_model != nullptr                  ? "learned"
                                                               : "deterministic";

    zenith::ZenithConfig zcfg = cfg.zenith;
    zcfg.seed = cfg.seed;
    framegen::FrameGenConfig fcfg = cfg.frames;
    fcfg.seed = Rng(cfg.seed).next_u64();

    const std::vector<HomLine> l_z = zenith::filter_vertical(segments, pi, zcfg);
    out.n_lines = static_cast<int>(l_z.size());
    std::vector<zenith::ZenithCandidate> candidates = zenith::sample_candidates(l_z, zcfg);
    out.n_candidates = static_cast<int>(candidates.size());

    std::vector<HomPoint> candidate_points;
    candidate_points.reserve(candidates.size());
    for (const auto& c : candidates) candidate_points.push_back(c.v);
    std::vector<double> scores =
        net ? zsnet::forward(*net, l_z, candidate_points)
            : zsnet::fallback_score(l_z, candidate_points, cfg.fallback_tol_deg);
    if (!net) {
        // Under heavy noise the consensus fractions can collapse below the
        // selection threshold; widen the tolerance until some candidate
        // clears it (two doublings at most).
        double tol = cfg.fallback_tol_deg;
        for (int retry = 0; retry < 2; ++retry) {
            double best = 0.0;
            for (double v : scores) best = std::max(best, v);
            if (best > cfg.zenith.delta_c) break;
            tol *= 2.0;
            scores = zsnet::fallback_score(l_z, candidate_points, tol);
            out.notes.push_back("consensus below delta_c; fallback tolerance widened");
        }
    }
    for (std::size_t i = 0; i < candidates.size(); ++i) candidates[i].score = scores[i];

    std::vector<zenith::ZenithCandidate> selected;
    try {
        selected = zenith::select(candidates, zcfg);
    } catch (const EmptySelection&) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < candidates.size(); ++i)
            if (candidates[i].score > candidates[best].score) best = i;
        selected = {candidates[best]};
        out.notes.push_back("no candidate cleared delta_c; top-1 fallback");
    }
    out.n_selected = static_cast<int>(selected.size());

    // Pairwise intersections of near-parallel verticals are biased toward
    // the image (angle noise shortens the intersection distance far more
    // often than it lengthens it); consensus refinement over the vertical
    // pencil removes the bias before frames inherit it.
    if (cfg.frames.refine_tol_deg > 0.0)
        for (auto& c : selected)
            c.v = framegen::refine_horizontal_vp(l_z, c.v, cfg.frames.refine_tol_deg);

    // Representative zenith over the selected set (the candidates the
    // frame stage actually consumes).
    zenith::Aggregate agg;
    try {
        agg = zenith::aggregate(selected);
    } catch (const AllScoresZero&) {
        for (auto& c : selected) c.score = 1.0;
        agg = zenith::aggregate(selected);
        out.notes.push_back("all selected scores were zero; uniform weights used");
    }
    out.z_est = agg.z_est;

    framegen::GroupedSegments groups;
    try {
        groups = framegen::group_horizontals(segments, pi, agg.z_est, fcfg);
    } catch (const NoHorizontals&) {
        return detail::degraded_output(agg.z_est, pi, width, height, std::move(out),
                                       "no horizontal segment groups");
    }

    framegen::FrameSampleResult frames;
    try {
        frames = framegen::sample_frames(segments, groups, selected, pi, fcfg);
    } catch (const InsufficientHypotheses&) {
        // The selected zenith cluster may be a mislabeled horizontal axis
        // (every such hypothesis fails the pitch gate). Retry over all
        // candidates so a plausible cluster can take over.
        bool recovered = false;
        if (selected.size() < candidates.size()) {
            try {
                frames = framegen::sample_frames(segments, groups, candidates, pi, fcfg);
                out.notes.push_back("selected zenith cluster produced no valid frames; "
                                    "retried with all candidates");
                recovered = true;
            } catch (const InsufficientHypotheses&) {
            }
        }
        if (!recovered)
            return detail::degraded_output(agg.z_est, pi, width, height, std::move(out),
                                           "insufficient valid frame hypotheses");
    }
    out.frame_shortfall = frames.shortfall;
    out.n_hypotheses = static_cast<int>(frames.hypotheses.size());

    framescore::SceneRaster raster(segments, pi, width, height);
    for (auto& hyp : frames.hypotheses) {
        const auto stats = raster.score(hyp);
        hyp.m = stats.m;
        if (cfg.mode == framescore::ScoreMode::oracle) {
            hyp.s_vh = framescore::gt_similarity(hyp, *gt, cfg.score).s_vh;
            hyp.s = framescore::final_score(hyp, cfg.mode);
        } else if (frame_model) {
            hyp.s = frame_model->predict(framescore::make_features(stats, hyp.f_px, pi)) * hyp.m;
        } else {
            hyp.s = framescore::final_score(hyp, cfg.mode);
        }
    }

    const framescore::TopkResult top =
        framescore::aggregate_topk(frames.hypotheses, cfg.score, pi, width, height);
    out.camera = top.camera;
    out.horizon = horizon_from_camera(top.camera);
    out.score = top.best_score;
    out.best_index = top.best_index;
    out.hypotheses = std::move(frames.hypotheses);
    return out;
}

/// Per-scene evaluation record against a ground-truth annotation.
inline metrics::EvalRecord evaluate_output(const CalibrationOutput& output,
                                           const synth::SceneAnnotation& gt) {
    metrics::EvalRecord rec;
    const metrics::UpErrors up = metrics::up_vector_errors(output.camera, gt.cam);
    rec.angle_deg = up.angle_deg;
    rec.pitch_deg = up.pitch_deg;
    rec.roll_deg = up.roll_deg;
    rec.fov_deg = metrics::fov_error(output.camera.f, gt.cam.f, gt.cam.height);
    rec.horizon = metrics::horizon_error(output.horizon, gt.horizon_gt, gt.cam.width,
                                         gt.cam.height);
    rec.degraded = output.degraded;
    return rec;
}

} // namespace calib::pipeline
