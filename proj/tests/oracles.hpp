#pragma once

// Independent reference implementations used only to cross-check the
// library. Nothing here may call the code path it validates.

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "calib/homgeom.hpp"

namespace oracle {

/// Analytic eigenvalues of a symmetric 3x3 matrix via the characteristic
/// polynomial (trigonometric form), descending.
inline std::array<double, 3> charpoly_eigenvalues(const calib::Mat3& a) {
    const double p1 = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
    std::array<double, 3> eig;
    if (p1 == 0.0) {
        eig = {a(0, 0), a(1, 1), a(2, 2)};
        std::sort(eig.begin(), eig.end(), std::greater<>());
        return eig;
    }
    const double q = a.trace() / 3.0;
    const double p2 = (a(0, 0) - q) * (a(0, 0) - q) + (a(1, 1) - q) * (a(1, 1) - q) +
                      (a(2, 2) - q) * (a(2, 2) - q) + 2.0 * p1;
    const double p = std::sqrt(p2 / 6.0);
    calib::Mat3 b;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            b(i, j) = (a(i, j) - (i == j ? q : 0.0)) / p;
    double r = b.det() / 2.0;
    r = std::clamp(r, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double two_pi_3 = 2.0 * 3.14159265358979323846 / 3.0;
    eig[0] = q + 2.0 * p * std::cos(phi);
    eig[2] = q + 2.0 * p * std::cos(phi + two_pi_3);
    eig[1] = 3.0 * q - eig[0] - eig[2];
    return eig;
}

/// Riemann-sum AUC over [0, 0.25] with step 1e-5, percentage.
inline double auc_bruteforce(const std::vector<double>& errors) {
    const int steps = 25000;
    const double dx = 0.25 / steps;
    double area = 0.0;
    for (int k = 0; k < steps; ++k) {
        const double x = (k + 0.5) * dx;
        std::size_t below = 0;
        for (double e : errors)
            if (e <= x) ++below;
        area += static_cast<double>(below) / static_cast<double>(errors.size()) * dx;
    }
    return area / 0.25 * 100.0;
}

} // namespace oracle
