#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "calib/camera.hpp"
#include "calib/rng.hpp"
#include "calib/segment.hpp"

namespace calib::zenith {

struct ZenithConfig {
    double delta_z_deg = 67.5;   // vertical angle gate, degrees from horizontal
    double delta_p_deg = 2.0;    // positive-label threshold
    double delta_n_deg = 5.0;    // negative-label threshold
    double delta_c = 0.5;        // selection threshold on scores
    int n_lines = 256;           // |L_z|
    int n_candidates = 256;      // |Z|
    std::uint64_t seed = 1;
};

enum class Label { negative, positive, undefined };

struct ZenithCandidate {
    HomPoint v;                  // pseudo space, unit norm, canonical sign
    int source0 = -1;            // generating line indices into L_z
    int source1 = -1;
    double score = 0.0;
    Label label = Label::undefined;
};

/// Angle of the line's direction from the image horizontal exceeds
/// delta_z (strict). Exactly vertical lines (b = 0) always qualify.
inline bool line_is_near_vertical(const HomLine& l, double delta_z_deg) {
    if (l.b == 0.0) return true;
    const double tan_gate = std::tan(delta_z_deg * 3.14159265358979323846 / 180.0);
    return std::abs(l.a) > tan_gate * std::abs(l.b);
}

/// Keep segments roughly directed at the zenith as unit pseudo-space lines.
/// Subsamples uniformly (order-preserving) when more than n_lines qualify.
inline std::vector<HomLine> filter_vertical(std::span<const Segment> segments,
                                            const PseudoIntrinsics& pi,
                                            const ZenithConfig& cfg) {
    std::vector<HomLine> lines;
    for (const Segment& s : segments) {
        if (!line_is_near_vertical(s.line, cfg.delta_z_deg)) continue;
        lines.push_back(normalized(line_to_pseudo(s.line, pi)));
    }
    if (lines.size() < 2)
        throw InsufficientLines("filter_vertical: fewer than 2 near-vertical segments");
    if (static_cast<int>(lines.size()) > cfg.n_lines) {
        Rng rng = Rng::derive(cfg.seed, 0xF117);
        // Partial Fisher-Yates, then restore input order.
        std::vector<std::size_t> idx(lines.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        for (std::size_t i = 0; i < static_cast<std::size_t>(cfg.n_lines); ++i) {
            const std::size_t j = i + rng.uniform_int(idx.size() - i);
            std::swap(idx[i], idx[j]);
        }
        idx.resize(static_cast<std::size_t>(cfg.n_lines));
        std::sort(idx.begin(), idx.end());
        std::vector<HomLine> kept;
        kept.reserve(idx.size());
        for (std::size_t i : idx) kept.push_back(lines[i]);
        lines = std::move(kept);
    }
    return lines;
}

/// Random line pairs intersected into zenith candidates. Parallel pairs
/// are re-drawn within a budget of 100 attempts per requested candidate.
inline std::vector<ZenithCandidate> sample_candidates(const std::vector<HomLine>& l_z,
                                                      const ZenithConfig& cfg) {
    if (l_z.size() < 2)
        throw InsufficientLines("sample_candidates: need at least 2 lines");
    std::vector<ZenithCandidate> out;
    out.reserve(static_cast<std::size_t>(cfg.n_candidates));
    const long budget = 100L * cfg.n_candidates;
    long attempts = 0;
    std::uint64_t draw = 0;
    while (static_cast<int>(out.size()) < cfg.n_candidates) {
        if (attempts++ >= budget)
            throw SamplingExhausted("sample_candidates: too many degenerate pairs");
        Rng rng = Rng::derive(cfg.seed, draw++);
        const auto i = rng.uniform_int(l_z.size());
        auto j = rng.uniform_int(l_z.size() - 1);
        if (j >= i) ++j;
        if (scale_equivalent(l_z[i], l_z[j], 1e-12)) continue;
        ZenithCandidate c;
        c.v = normalized(intersect(l_z[i], l_z[j]));
        c.source0 = static_cast<int>(i);
        c.source1 = static_cast<int>(j);
        out.push_back(c);
    }
    return out;
}

/// Positive within delta_p of the ground truth, negative beyond delta_n,
/// undefined in between (excluded from training).
inline void label_candidates(std::vector<ZenithCandidate>& z, const HomPoint& z_gt,
                             const ZenithConfig& cfg) {
    if (norm(z_gt) == 0.0) throw DegenerateInput("label_candidates: zero ground truth");
    const double cos_p = std::cos(cfg.delta_p_deg * 3.14159265358979323846 / 180.0);
    const double cos_n = std::cos(cfg.delta_n_deg * 3.14159265358979323846 / 180.0);
    for (ZenithCandidate& c : z) {
        const double s = cossim(c.v, z_gt);
        c.label = s > cos_p ? Label::positive
                : s < cos_n ? Label::negative
                            : Label::undefined;
    }
}

struct Aggregate {
    StructureTensor st_avg;
    HomPoint z_est;
};

/// Score-weighted structure-tensor average and its principal axis.
inline Aggregate aggregate(const std::vector<ZenithCandidate>& z) {
    Mat3 acc;
    double wsum = 0.0;
    for (const ZenithCandidate& c : z) {
        if (c.score <= 0.0) continue;
        acc = acc + structure_tensor(c.v) * c.score;
        wsum += c.score;
    }
    if (wsum <= 0.0) throw AllScoresZero("aggregate: no positive scores");
    Aggregate a;
    a.st_avg = acc * (1.0 / wsum);
    a.z_est = principal_eigenvector(a.st_avg);
    return a;
}

/// Candidates whose score strictly exceeds delta_c, input order preserved.
inline std::vector<ZenithCandidate> select(const std::vector<ZenithCandidate>& z,
                                           const ZenithConfig& cfg) {
    std::vector<ZenithCandidate> out;
    for (const ZenithCandidate& c : z)
        if (c.score > cfg.delta_c) out.push_back(c);
    if (out.empty()) throw EmptySelection("select: no candidate clears delta_c");
    return out;
}

} // namespace calib::zenith
