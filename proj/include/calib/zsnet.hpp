#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "calib/homgeom.hpp"
#include "calib/rng.hpp"
#include "calib/zenith.hpp"

namespace calib::zsnet {

// Toy-scale set scorer: shared per-element MLPs for lines and zenith
// candidates, a global max-pool over line features concatenated onto each
// candidate feature, and a sigmoid head. Width 32 keeps finite-difference
// checks fast; the wiring (shared MLP + pool + concat + head) is the point.

constexpr int kHidden = 32;
constexpr double kLeakySlope = 0.01;

struct Linear {
    int in = 0, out = 0;
    std::vector<double> w;   // row-major [out][in]
    std::vector<double> b;   // [out]

    void resize(int in_dim, int out_dim) {
        in = in_dim;
        out = out_dim;
        w.assign(static_cast<std::size_t>(in) * static_cast<std::size_t>(out), 0.0);
        b.assign(static_cast<std::size_t>(out), 0.0);
    }
};

struct ScorerParams {
    Linear z1, z2;   // candidate feature MLP, 3 -> 32 -> 32
    Linear l1, l2;   // line feature MLP, 3 -> 32 -> 32
    Linear s1, s2;   // score head, 64 -> 32 -> 1

    static ScorerParams zeros() {
        ScorerParams p;
        p.z1.resize(3, kHidden);
        p.z2.resize(kHidden, kHidden);
        p.l1.resize(3, kHidden);
        p.l2.resize(kHidden, kHidden);
        p.s1.resize(2 * kHidden, kHidden);
        p.s2.resize(kHidden, 1);
        return p;
    }

    static ScorerParams init(std::uint64_t seed) {
        ScorerParams p = zeros();
        Rng rng(seed);
        for (Linear* layer : p.layers()) {
            const double s = std::sqrt(6.0 / layer->in);
            for (double& v : layer->w) v = rng.uniform(-s, s);
        }
        return p;
    }

    std::array<Linear*, 6> layers() { return {&z1, &z2, &l1, &l2, &s1, &s2}; }
    std::array<const Linear*, 6> layers() const { return {&z1, &z2, &l1, &l2, &s1, &s2}; }
};

using Gradients = ScorerParams;

struct TrainBatch {
    std::vector<HomLine> lines;           // pseudo space, unit-normalized
    std::vector<HomPoint> candidates;     // pseudo space, unit-normalized
    std::vector<zenith::Label> labels;    // parallel to candidates
    HomPoint z_gt;                        // unit
};

namespace detail {

// Orient inputs consistently: homogeneous sign is arbitrary, and a
// mixed-sign cluster would force the net to learn antipodal pairs.
inline HomLine oriented_line(const HomLine& l) {
    const bool flip = l.a < 0.0 || (l.a == 0.0 && (l.b < 0.0 || (l.b == 0.0 && l.c < 0.0)));
    return flip ? HomLine{-l.a, -l.b, -l.c} : l;
}

inline HomPoint oriented_point(const HomPoint& p) {
    const bool flip = p.y < 0.0 || (p.y == 0.0 && (p.x < 0.0 || (p.x == 0.0 && p.w < 0.0)));
    return flip ? HomPoint{-p.x, -p.y, -p.w} : p;
}

/// Deterministic stand-in for the learned input transformer of the full
/// design: lines through one common point are orthogonal to it, so the
/// smallest eigenvector of the line-coefficient scatter is a coarse
/// consensus direction. Rotating it onto the canonical vertical makes
/// candidate geometry scene-independent; the scorer still has to separate
/// the fine positive band from nearby impostors.
inline Mat3 alignment_rotation(const std::vector<HomLine>& lines) {
    // Sorted, exactly-deduplicated canonical set: the accumulated scatter
    // is then invariant to input order and to duplicated lines, keeping
    // the advertised permutation/idempotence properties bit-exact.
    std::vector<HomLine> canon;
    canon.reserve(lines.size());
    for (const HomLine& l : lines) canon.push_back(oriented_line(l));
    std::sort(canon.begin(), canon.end(), [](const HomLine& x, const HomLine& y) {
        if (x.a != y.a) return x.a < y.a;
        if (x.b != y.b) return x.b < y.b;
        return x.c < y.c;
    });
    canon.erase(std::unique(canon.begin(), canon.end(),
                            [](const HomLine& x, const HomLine& y) {
                                return x.a == y.a && x.b == y.b && x.c == y.c;
                            }),
                canon.end());

    auto weighted_null = [&](const HomPoint* prev) -> std::optional<HomPoint> {
        Mat3 scatter;
        const double eps2 = 1.2e-3;   // ~sin(2 deg)^2, residual soft scale
        for (const HomLine& l : canon) {
            const double n2 = l.a * l.a + l.b * l.b + l.c * l.c;
            if (n2 <= 0.0) continue;
            double w = 1.0 / n2;
            if (prev) {
                const double r = (l.a * prev->x + l.b * prev->y + l.c * prev->w);
                const double r2 = r * r / n2;
                w *= eps2 / (r2 + eps2);
            }
            scatter(0, 0) += l.a * l.a * w;
            scatter(0, 1) += l.a * l.b * w;
            scatter(0, 2) += l.a * l.c * w;
            scatter(1, 1) += l.b * l.b * w;
            scatter(1, 2) += l.b * l.c * w;
            scatter(2, 2) += l.c * l.c * w;
        }
        scatter(1, 0) = scatter(0, 1);
        scatter(2, 0) = scatter(0, 2);
        scatter(2, 1) = scatter(1, 2);
        if (scatter.frobenius() < 1e-12) return std::nullopt;
        return sym_eigen3(scatter).vectors[2];   // smallest eigenvalue
    };

    auto est = weighted_null(nullptr);
    if (!est) return Mat3::identity();
    // Reweighted refinement pulls the null direction onto the dominant
    // pencil; the unweighted fit splits the difference between pencils.
    for (int round = 0; round < 3; ++round) {
        const HomPoint prev = *est;
        est = weighted_null(&prev);
        if (!est) return Mat3::identity();
    }
    HomPoint anchor = *est;
    if (anchor.y < 0.0) anchor = scaled(anchor, -1.0);
    // Rodrigues rotation taking the anchor onto (0, 1, 0).
    const double c = anchor.y;
    const double ax = -anchor.w, ay = 0.0, az = anchor.x;   // anchor x e_y
    const double s2 = ax * ax + az * az;
    if (s2 < 1e-24) return Mat3::identity();
    Mat3 k;
    k(0, 1) = -az; k(0, 2) = ay;
    k(1, 0) = az;  k(1, 2) = -ax;
    k(2, 0) = -ay; k(2, 1) = ax;
    const Mat3 k2 = k * k;
    return Mat3::identity() + k + k2 * ((1.0 - c) / s2);
}

inline HomLine rotate_line(const Mat3& r, const HomLine& l) {
    const HomPoint v = r.apply(HomPoint{l.a, l.b, l.c});
    return {v.x, v.y, v.w};
}

inline void check_wiring(const ScorerParams& p) {
    const bool ok = p.z1.in == 3 && p.l1.in == 3 && p.z2.in == p.z1.out &&
                    p.l2.in == p.l1.out && p.s1.in == p.l2.out + p.z2.out &&
                    p.s2.in == p.s1.out && p.s2.out == 1 &&
                    !p.z1.w.empty() && !p.s2.w.empty();
    if (!ok) throw ShapeMismatch("scorer parameters have inconsistent shapes");
}

inline void linear_forward(const Linear& L, const double* x, double* h) {
    for (int o = 0; o < L.out; ++o) {
        double acc = L.b[static_cast<std::size_t>(o)];
        const double* row = &L.w[static_cast<std::size_t>(o) * static_cast<std::size_t>(L.in)];
        for (int i = 0; i < L.in; ++i) acc += row[i] * x[i];
        h[o] = acc;
    }
}

inline void leaky_forward(const double* h, double* a, int n) {
    for (int i = 0; i < n; ++i) a[i] = h[i] > 0.0 ? h[i] : kLeakySlope * h[i];
}

inline void leaky_backward(const double* h, const double* da, double* dh, int n) {
    for (int i = 0; i < n; ++i) dh[i] = da[i] * (h[i] > 0.0 ? 1.0 : kLeakySlope);
}

/// dL/dx = W^T dh; accumulates layer gradients.
inline void linear_backward(const Linear& L, const double* x, const double* dh,
                            Linear& grad, double* dx) {
    for (int o = 0; o < L.out; ++o) {
        const double g = dh[o];
        grad.b[static_cast<std::size_t>(o)] += g;
        double* grow = &grad.w[static_cast<std::size_t>(o) * static_cast<std::size_t>(L.in)];
        const double* row = &L.w[static_cast<std::size_t>(o) * static_cast<std::size_t>(L.in)];
        for (int i = 0; i < L.in; ++i) {
            grow[i] += g * x[i];
            if (dx) dx[i] += row[i] * g;
        }
    }
}

/// Alignment plus sign canonicalization applied to every input before it
/// reaches the shared MLPs. Forward and backward must agree on this.
struct CanonicalInputs {
    std::vector<HomLine> lines;
    std::vector<HomPoint> candidates;
};

inline CanonicalInputs canonicalize(const std::vector<HomLine>& lines,
                                    const std::vector<HomPoint>& candidates) {
    CanonicalInputs out;
    const Mat3 r = alignment_rotation(lines);
    out.lines.reserve(lines.size());
    for (const HomLine& l : lines) out.lines.push_back(oriented_line(rotate_line(r, l)));
    out.candidates.reserve(candidates.size());
    for (const HomPoint& v : candidates) out.candidates.push_back(oriented_point(r.apply(v)));
    return out;
}

struct ForwardCache {
    CanonicalInputs in;
    // Lines: [n_lines x 32] blocks.
    std::vector<double> l1h, l1a, l2h, l2a;
    // Pool: 32 values + winning line index per channel.
    std::array<double, kHidden> pooled{};
    std::array<int, kHidden> pool_arg{};
    // Candidates: [n_cand x dim] blocks.
    std::vector<double> z1h, z1a, z2h, z2a, cat, s1h, s1a, s2h;
    std::vector<double> scores;
};

inline ForwardCache forward_cached(const ScorerParams& p,
                                   const std::vector<HomLine>& lines,
                                   const std::vector<HomPoint>& candidates) {
    check_wiring(p);
    if (lines.empty() || candidates.empty())
        throw ShapeMismatch("forward: empty line or candidate set");
    const std::size_t nl = lines.size(), nc = candidates.size();
    const std::size_t H = kHidden;
    ForwardCache c;
    c.in = canonicalize(lines, candidates);
    c.l1h.resize(nl * H);
    c.l1a.resize(nl * H);
    c.l2h.resize(nl * H);
    c.l2a.resize(nl * H);
    for (std::size_t i = 0; i < nl; ++i) {
        const HomLine li = c.in.lines[i];
        const double x[3] = {li.a, li.b, li.c};
        linear_forward(p.l1, x, &c.l1h[i * H]);
        leaky_forward(&c.l1h[i * H], &c.l1a[i * H], kHidden);
        linear_forward(p.l2, &c.l1a[i * H], &c.l2h[i * H]);
        leaky_forward(&c.l2h[i * H], &c.l2a[i * H], kHidden);
    }
    for (int j = 0; j < kHidden; ++j) {
        double best = c.l2a[static_cast<std::size_t>(j)];
        int arg = 0;
        for (std::size_t i = 1; i < nl; ++i) {
            const double v = c.l2a[i * H + static_cast<std::size_t>(j)];
            if (v > best) {
                best = v;
                arg = static_cast<int>(i);
            }
        }
        c.pooled[static_cast<std::size_t>(j)] = best;
        c.pool_arg[static_cast<std::size_t>(j)] = arg;
    }

    c.z1h.resize(nc * H);
    c.z1a.resize(nc * H);
    c.z2h.resize(nc * H);
    c.z2a.resize(nc * H);
    c.cat.resize(nc * 2 * H);
    c.s1h.resize(nc * H);
    c.s1a.resize(nc * H);
    c.s2h.resize(nc);
    c.scores.resize(nc);
    for (std::size_t i = 0; i < nc; ++i) {
        const HomPoint ci = c.in.candidates[i];
        const double x[3] = {ci.x, ci.y, ci.w};
        linear_forward(p.z1, x, &c.z1h[i * H]);
        leaky_forward(&c.z1h[i * H], &c.z1a[i * H], kHidden);
        linear_forward(p.z2, &c.z1a[i * H], &c.z2h[i * H]);
        leaky_forward(&c.z2h[i * H], &c.z2a[i * H], kHidden);
        double* cat = &c.cat[i * 2 * H];
        for (int j = 0; j < kHidden; ++j) cat[j] = c.pooled[static_cast<std::size_t>(j)];
        for (int j = 0; j < kHidden; ++j) cat[kHidden + j] = c.z2a[i * H + static_cast<std::size_t>(j)];
        linear_forward(p.s1, cat, &c.s1h[i * H]);
        leaky_forward(&c.s1h[i * H], &c.s1a[i * H], kHidden);
        linear_forward(p.s2, &c.s1a[i * H], &c.s2h[i]);
        c.scores[i] = 1.0 / (1.0 + std::exp(-c.s2h[i]));
    }
    return c;
}

} // namespace detail

/// Candidate scores in (0, 1). Permuting lines leaves every score
/// unchanged; permuting candidates permutes the scores identically.
inline std::vector<double> forward(const ScorerParams& p, const std::vector<HomLine>& lines,
                                   const std::vector<HomPoint>& candidates) {
    return detail::forward_cached(p, lines, candidates).scores;
}

struct LossValue {
    double cls = 0.0;
    double loc = 0.0;
    double total = 0.0;
};

namespace detail {

struct LossTerms {
    LossValue value;
    std::vector<double> dscore;   // dTotal/dp_i
};

inline LossTerms loss_terms(const TrainBatch& batch, const std::vector<double>& scores,
                            double lambda_loc, bool with_grad) {
    const std::size_t nc = scores.size();
    if (batch.labels.size() != nc || batch.candidates.size() != nc)
        throw ShapeMismatch("loss: labels/candidates size mismatch");
    LossTerms t;
    t.dscore.assign(nc, 0.0);

    std::size_t defined = 0;
    for (auto l : batch.labels)
        if (l != zenith::Label::undefined) ++defined;
    if (defined == 0) throw NoLabeledCandidates("loss: every label is undefined");

    // Binary cross entropy over the defined labels. The positives-only
    // form admits a constant-one minimizer, which the localization term
    // cannot repair once the tensor average has converged.
    double cls = 0.0;
    for (std::size_t i = 0; i < nc; ++i) {
        if (batch.labels[i] == zenith::Label::positive) {
            const double p = std::max(scores[i], 1e-300);
            cls -= std::log(p);
            if (with_grad) t.dscore[i] += -1.0 / (p * static_cast<double>(defined));
        } else if (batch.labels[i] == zenith::Label::negative) {
            const double q = std::max(1.0 - scores[i], 1e-300);
            cls -= std::log(q);
            if (with_grad) t.dscore[i] += 1.0 / (q * static_cast<double>(defined));
        }
    }
    cls /= static_cast<double>(defined);

    // Weighted structure-tensor average against the ground-truth tensor.
    Mat3 acc;
    double wsum = 0.0;
    std::vector<StructureTensor> st(nc);
    for (std::size_t i = 0; i < nc; ++i) {
        st[i] = structure_tensor(batch.candidates[i]);
        acc = acc + st[i] * scores[i];
        wsum += scores[i];
    }
    if (wsum <= 0.0) throw AllScoresZero("loss: zero score mass");
    const Mat3 st_avg = acc * (1.0 / wsum);
    const Mat3 diff = st_avg - structure_tensor(batch.z_gt);
    const double loc = diff.frobenius();
    if (with_grad && loc > 0.0 && lambda_loc != 0.0) {
        for (std::size_t i = 0; i < nc; ++i) {
            const Mat3 delta = st[i] - st_avg;
            double inner = 0.0;
            for (int k = 0; k < 9; ++k)
                inner += diff.m[static_cast<std::size_t>(k)] * delta.m[static_cast<std::size_t>(k)];
            t.dscore[i] += lambda_loc * inner / (loc * wsum);
        }
    }

    t.value.cls = cls;
    t.value.loc = loc;
    t.value.total = cls + lambda_loc * loc;
    return t;
}

} // namespace detail

inline LossValue loss(const ScorerParams& p, const TrainBatch& batch, double lambda_loc = 1.0) {
    const auto cache = detail::forward_cached(p, batch.lines, batch.candidates);
    return detail::loss_terms(batch, cache.scores, lambda_loc, false).value;
}

/// Analytic gradient of the total loss for every parameter tensor.
inline Gradients backward(const ScorerParams& p, const TrainBatch& batch,
                          double lambda_loc = 1.0, LossValue* loss_out = nullptr) {
    using namespace detail;
    const std::size_t H = kHidden;
    const auto cache = forward_cached(p, batch.lines, batch.candidates);
    auto terms = loss_terms(batch, cache.scores, lambda_loc, true);
    if (loss_out) *loss_out = terms.value;

    Gradients g = ScorerParams::zeros();
    const std::size_t nc = batch.candidates.size();
    std::array<double, kHidden> d_pool{};

    std::array<double, kHidden> ds1h{}, ds1a{}, dz2a{}, dz2h{}, dz1a{}, dz1h{};
    std::array<double, 2 * kHidden> dcat{};
    for (std::size_t i = 0; i < nc; ++i) {
        const double pscore = cache.scores[i];
        const double ds2h = terms.dscore[i] * pscore * (1.0 - pscore);
        if (ds2h == 0.0) continue;
        ds1a.fill(0.0);
        linear_backward(p.s2, &cache.s1a[i * H], &ds2h, g.s2, ds1a.data());
        leaky_backward(&cache.s1h[i * H], ds1a.data(), ds1h.data(), kHidden);
        dcat.fill(0.0);
        linear_backward(p.s1, &cache.cat[i * 2 * H], ds1h.data(), g.s1, dcat.data());
        for (int j = 0; j < kHidden; ++j) d_pool[static_cast<std::size_t>(j)] += dcat[static_cast<std::size_t>(j)];
        for (int j = 0; j < kHidden; ++j) dz2a[static_cast<std::size_t>(j)] = dcat[static_cast<std::size_t>(kHidden + j)];
        leaky_backward(&cache.z2h[i * H], dz2a.data(), dz2h.data(), kHidden);
        dz1a.fill(0.0);
        linear_backward(p.z2, &cache.z1a[i * H], dz2h.data(), g.z2, dz1a.data());
        leaky_backward(&cache.z1h[i * H], dz1a.data(), dz1h.data(), kHidden);
        const HomPoint ci = cache.in.candidates[i];
        const double x[3] = {ci.x, ci.y, ci.w};
        linear_backward(p.z1, x, dz1h.data(), g.z1, nullptr);
    }

    // Pool gradient routes to the first arg-max line per channel.
    const std::size_t nl = batch.lines.size();
    std::vector<double> dl2a(nl * H, 0.0);
    for (int j = 0; j < kHidden; ++j)
        dl2a[static_cast<std::size_t>(cache.pool_arg[static_cast<std::size_t>(j)]) * H +
             static_cast<std::size_t>(j)] = d_pool[static_cast<std::size_t>(j)];
    std::array<double, kHidden> dl2h{}, dl1a{}, dl1h{};
    for (std::size_t i = 0; i < nl; ++i) {
        bool any = false;
        for (int j = 0; j < kHidden; ++j)
            if (dl2a[i * H + static_cast<std::size_t>(j)] != 0.0) any = true;
        if (!any) continue;
        leaky_backward(&cache.l2h[i * H], &dl2a[i * H], dl2h.data(), kHidden);
        dl1a.fill(0.0);
        linear_backward(p.l2, &cache.l1a[i * H], dl2h.data(), g.l2, dl1a.data());
        leaky_backward(&cache.l1h[i * H], dl1a.data(), dl1h.data(), kHidden);
        const HomLine li = cache.in.lines[i];
        const double x[3] = {li.a, li.b, li.c};
        linear_backward(p.l1, x, dl1h.data(), g.l1, nullptr);
    }
    return g;
}

struct TrainConfig {
    int epochs = 20;
    double lr = 1e-3;          // halved every halve_every epochs
    int halve_every = 5;
    double lambda_loc = 1.0;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

struct TrainHistory {
    std::vector<double> cls;   // per-epoch means
    std::vector<double> loc;
};

/// Adam over the full batch list, in order, one step per batch.
inline TrainHistory train(ScorerParams& params, const std::vector<TrainBatch>& data,
                          const TrainConfig& cfg) {
    if (data.empty()) throw EmptyInput("train: empty dataset");
    Gradients m = ScorerParams::zeros();
    Gradients v = ScorerParams::zeros();
    TrainHistory hist;
    long t = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr =
            cfg.lr * std::pow(0.5, cfg.halve_every > 0 ? epoch / cfg.halve_every : 0);
        double cls_sum = 0.0, loc_sum = 0.0;
        for (const TrainBatch& batch : data) {
            LossValue lv;
            const Gradients g = backward(params, batch, cfg.lambda_loc, &lv);
            cls_sum += lv.cls;
            loc_sum += lv.loc;
            ++t;
            const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
            const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
            auto pl = params.layers();
            auto gl = g.layers();
            auto ml = m.layers();
            auto vl = v.layers();
            for (std::size_t k = 0; k < pl.size(); ++k) {
                auto step = [&](std::vector<double>& pv, const std::vector<double>& gv,
                                std::vector<double>& mv, std::vector<double>& vv) {
                    for (std::size_t i = 0; i < pv.size(); ++i) {
                        mv[i] = cfg.beta1 * mv[i] + (1.0 - cfg.beta1) * gv[i];
                        vv[i] = cfg.beta2 * vv[i] + (1.0 - cfg.beta2) * gv[i] * gv[i];
                        pv[i] -= lr * (mv[i] / bc1) / (std::sqrt(vv[i] / bc2) + cfg.eps);
                    }
                };
                step(pl[k]->w, gl[k]->w, ml[k]->w, vl[k]->w);
                step(pl[k]->b, gl[k]->b, ml[k]->b, vl[k]->b);
            }
        }
        hist.cls.push_back(cls_sum / static_cast<double>(data.size()));
        hist.loc.push_back(loc_sum / static_cast<double>(data.size()));
    }
    return hist;
}

/// Non-neural consensus scorer: fraction of lines passing within tol_deg
/// of the candidate. Lets the pipeline run untrained.
inline std::vector<double> fallback_score(const std::vector<HomLine>& lines,
                                          const std::vector<HomPoint>& candidates,
                                          double tol_deg = 2.0) {
    if (lines.empty() || candidates.empty())
        throw ShapeMismatch("fallback_score: empty inputs");
    const double thr = closeness_threshold(tol_deg);
    std::vector<double> scores(candidates.size(), 0.0);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        int hits = 0;
        for (const HomLine& l : lines)
            if (closeness(l, candidates[i]) > thr) ++hits;
        scores[i] = static_cast<double>(hits) / static_cast<double>(lines.size());
    }
    return scores;
}

} // namespace calib::zsnet
