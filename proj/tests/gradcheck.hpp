#pragma once

// Central-difference gradient validation for the set scorer. Parameters
// whose +/- epsilon probes land on different sides of an activation kink
// are skipped: the loss is non-differentiable there and a finite
// difference tells nothing about the analytic gradient.

#include <algorithm>
#include <vector>

#include "calib/zsnet.hpp"

namespace gradcheck {

inline std::vector<int> activation_signs(const calib::zsnet::ScorerParams& p,
                                         const calib::zsnet::TrainBatch& batch) {
    const auto cache = calib::zsnet::detail::forward_cached(p, batch.lines, batch.candidates);
    std::vector<int> signs;
    auto push = [&](const std::vector<double>& h) {
        for (double v : h) signs.push_back(v > 0.0 ? 1 : 0);
    };
    push(cache.l1h);
    push(cache.l2h);
    push(cache.z1h);
    push(cache.z2h);
    push(cache.s1h);
    for (int a : cache.pool_arg) signs.push_back(a);
    return signs;
}

/// Maximum relative error between analytic and central-difference
/// gradients over every parameter, excluding kink-straddling probes.
inline double max_rel_error(const calib::zsnet::ScorerParams& params,
                            const calib::zsnet::TrainBatch& batch, double lambda,
                            double eps = 1e-5) {
    using namespace calib::zsnet;
    const Gradients analytic = backward(params, batch, lambda);
    ScorerParams probe = params;
    auto pl = probe.layers();
    auto al = analytic.layers();
    double worst = 0.0;
    for (std::size_t k = 0; k < pl.size(); ++k) {
        auto scan = [&](std::vector<double>& pv, const std::vector<double>& av) {
            for (std::size_t i = 0; i < pv.size(); ++i) {
                const double keep = pv[i];
                pv[i] = keep + eps;
                const double up = loss(probe, batch, lambda).total;
                const auto signs_up = activation_signs(probe, batch);
                pv[i] = keep - eps;
                const double dn = loss(probe, batch, lambda).total;
                const auto signs_dn = activation_signs(probe, batch);
                pv[i] = keep;
                if (signs_up != signs_dn) continue;   // kink inside the stencil
                const double fd = (up - dn) / (2.0 * eps);
                worst = std::max(worst, std::abs(av[i] - fd) /
                                            std::max({std::abs(av[i]), std::abs(fd), 1e-4}));
            }
        };
        scan(pl[k]->w, al[k]->w);
        scan(pl[k]->b, al[k]->b);
    }
    return worst;
}

} // namespace gradcheck
