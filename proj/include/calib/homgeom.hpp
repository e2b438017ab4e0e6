#pragma once

#include <array>
#include <cmath>
#include <cstddef>

#include "calib/errors.hpp"

namespace calib {

// Homogeneous projective primitives for the image plane. Results are
// left unnormalized; every comparison goes through a scale-invariant
// predicate, so callers never depend on the representative chosen.

struct HomPoint {
    double x = 0.0, y = 0.0, w = 0.0;
};

struct HomLine {
    double a = 0.0, b = 0.0, c = 0.0;
};

inline double dot(const HomPoint& u, const HomPoint& v) {
    return u.x * v.x + u.y * v.y + u.w * v.w;
}

inline double dot(const HomLine& l, const HomPoint& p) {
    return l.a * p.x + l.b * p.y + l.c * p.w;
}

inline double norm(const HomPoint& v) { return std::sqrt(dot(v, v)); }

inline double norm(const HomLine& l) {
    return std::sqrt(l.a * l.a + l.b * l.b + l.c * l.c);
}

inline HomPoint scaled(const HomPoint& v, double s) { return {v.x * s, v.y * s, v.w * s}; }
inline HomLine scaled(const HomLine& l, double s) { return {l.a * s, l.b * s, l.c * s}; }

/// Unit-norm representative with the last nonzero component nonnegative.
inline HomPoint normalized(const HomPoint& v) {
    const double n = norm(v);
    if (n == 0.0) throw DegenerateInput("normalized: zero homogeneous vector");
    double s = 1.0 / n;
    const double tiny = 1e-14 * n;
    if (std::abs(v.w) > tiny ? v.w < 0.0
        : (std::abs(v.y) > tiny ? v.y < 0.0 : v.x < 0.0))
        s = -s;
    return scaled(v, s);
}

inline HomLine normalized(const HomLine& l) {
    const HomPoint p = normalized(HomPoint{l.a, l.b, l.c});
    return {p.x, p.y, p.w};
}

inline bool scale_equivalent(const HomPoint& u, const HomPoint& v, double tol = 1e-12) {
    const double cx = u.y * v.w - u.w * v.y;
    const double cy = u.w * v.x - u.x * v.w;
    const double cw = u.x * v.y - u.y * v.x;
    const double cross2 = cx * cx + cy * cy + cw * cw;
    return cross2 <= tol * tol * dot(u, u) * dot(v, v);
}

inline bool scale_equivalent(const HomLine& l, const HomLine& m, double tol = 1e-12) {
    return scale_equivalent(HomPoint{l.a, l.b, l.c}, HomPoint{m.a, m.b, m.c}, tol);
}

/// Join of two points: the line through both (cross product).
inline HomLine line_from_endpoints(const HomPoint& p0, const HomPoint& p1) {
    if (norm(p0) == 0.0 || norm(p1) == 0.0)
        throw DegenerateInput("line_from_endpoints: zero point");
    if (scale_equivalent(p0, p1))
        throw DegenerateInput("line_from_endpoints: coincident points");
    return {p0.y * p1.w - p0.w * p1.y,
            p0.w * p1.x - p0.x * p1.w,
            p0.x * p1.y - p0.y * p1.x};
}

/// Meet of two lines: their intersection point (cross product).
inline HomPoint intersect(const HomLine& l0, const HomLine& l1) {
    if (norm(l0) == 0.0 || norm(l1) == 0.0)
        throw DegenerateInput("intersect: zero line");
    if (scale_equivalent(l0, l1))
        throw DegenerateInput("intersect: coincident lines");
    return {l0.b * l1.c - l0.c * l1.b,
            l0.c * l1.a - l0.a * l1.c,
            l0.a * l1.b - l0.b * l1.a};
}

/// |u.v| / (|u||v|), the absolute cosine similarity of two directions.
inline double cossim(const HomPoint& u, const HomPoint& v) {
    const double nu = norm(u), nv = norm(v);
    if (nu == 0.0 || nv == 0.0) throw DegenerateInput("cossim: zero vector");
    const double c = std::abs(dot(u, v)) / (nu * nv);
    return c > 1.0 ? 1.0 : c;
}

/// 1 - |l.v| / (|l||v|). Equals 1 exactly when v lies on l.
inline double closeness(const HomLine& l, const HomPoint& v) {
    const double nl = norm(l), nv = norm(v);
    if (nl == 0.0 || nv == 0.0) throw DegenerateInput("closeness: zero input");
    double c = 1.0 - std::abs(dot(l, v)) / (nl * nv);
    if (c < 0.0) c = 0.0;
    return c;
}

/// Closeness value below which a point is more than tol_deg (on the unit
/// sphere of homogeneous coordinates) away from the line.
inline double closeness_threshold(double tol_deg) {
    return 1.0 - std::sin(tol_deg * 3.14159265358979323846 / 180.0);
}

// ---------------------------------------------------------------------------
// 3x3 symmetric matrices and their eigen-decomposition.

struct Mat3 {
    // Row-major.
    std::array<double, 9> m{};

    double& operator()(int r, int c) { return m[static_cast<std::size_t>(3 * r + c)]; }
    double operator()(int r, int c) const { return m[static_cast<std::size_t>(3 * r + c)]; }

    static Mat3 identity() {
        Mat3 I;
        I(0, 0) = I(1, 1) = I(2, 2) = 1.0;
        return I;
    }

    Mat3 transposed() const {
        Mat3 t;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) t(r, c) = (*this)(c, r);
        return t;
    }

    double trace() const { return m[0] + m[4] + m[8]; }

    friend Mat3 operator*(const Mat3& a, const Mat3& b) {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0.0;
                for (int k = 0; k < 3; ++k) s += a(i, k) * b(k, j);
                r(i, j) = s;
            }
        return r;
    }

    friend Mat3 operator+(const Mat3& a, const Mat3& b) {
        Mat3 r;
        for (int i = 0; i < 9; ++i) r.m[static_cast<std::size_t>(i)] = a.m[static_cast<std::size_t>(i)] + b.m[static_cast<std::size_t>(i)];
        return r;
    }

    friend Mat3 operator-(const Mat3& a, const Mat3& b) {
        Mat3 r;
        for (int i = 0; i < 9; ++i) r.m[static_cast<std::size_t>(i)] = a.m[static_cast<std::size_t>(i)] - b.m[static_cast<std::size_t>(i)];
        return r;
    }

    friend Mat3 operator*(const Mat3& a, double s) {
        Mat3 r;
        for (int i = 0; i < 9; ++i) r.m[static_cast<std::size_t>(i)] = a.m[static_cast<std::size_t>(i)] * s;
        return r;
    }

    HomPoint apply(const HomPoint& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.w,
                m[3] * v.x + m[4] * v.y + m[5] * v.w,
                m[6] * v.x + m[7] * v.y + m[8] * v.w};
    }

    double det() const {
        return m[0] * (m[4] * m[8] - m[5] * m[7]) -
               m[1] * (m[3] * m[8] - m[5] * m[6]) +
               m[2] * (m[3] * m[7] - m[4] * m[6]);
    }

    double frobenius() const {
        double s = 0.0;
        for (double v : m) s += v * v;
        return std::sqrt(s);
    }
};

/// Outer product of the unit-normalized vector with itself. Trace 1, rank 1
/// and invariant to any nonzero rescaling of v.
using StructureTensor = Mat3;

inline StructureTensor structure_tensor(const HomPoint& v) {
    const double n2 = dot(v, v);
    if (n2 == 0.0) throw DegenerateInput("structure_tensor: zero vector");
    StructureTensor t;
    const double s = 1.0 / n2;
    t(0, 0) = v.x * v.x * s;
    t(0, 1) = t(1, 0) = v.x * v.y * s;
    t(0, 2) = t(2, 0) = v.x * v.w * s;
    t(1, 1) = v.y * v.y * s;
    t(1, 2) = t(2, 1) = v.y * v.w * s;
    t(2, 2) = v.w * v.w * s;
    return t;
}

struct SymEigen3 {
    std::array<double, 3> values{};          // descending
    std::array<HomPoint, 3> vectors{};       // unit, matching order
};

/// Cyclic Jacobi sweeps; deterministic rotation order, so results are
/// reproducible bit-for-bit on a given platform.
inline SymEigen3 sym_eigen3(const Mat3& in) {
    Mat3 a = in;
    Mat3 v = Mat3::identity();
    for (int sweep = 0; sweep < 32; ++sweep) {
        double off = std::abs(a(0, 1)) + std::abs(a(0, 2)) + std::abs(a(1, 2));
        if (off == 0.0) break;
        for (int p = 0; p < 2; ++p) {
            for (int q = p + 1; q < 3; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double app = a(p, p), aqq = a(q, q);
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (int k = 0; k < 3; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < 3; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < 3; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    std::array<int, 3> order = {0, 1, 2};
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            if (a(order[static_cast<std::size_t>(j)], order[static_cast<std::size_t>(j)]) >
                a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]))
                std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    SymEigen3 out;
    for (int i = 0; i < 3; ++i) {
        const int k = order[static_cast<std::size_t>(i)];
        out.values[static_cast<std::size_t>(i)] = a(k, k);
        out.vectors[static_cast<std::size_t>(i)] =
            normalized(HomPoint{v(0, k), v(1, k), v(2, k)});
    }
    return out;
}

struct EigenStatus {
    bool ambiguous = false;   // top two eigenvalues equal within 1e-9
};

/// Unit eigenvector of the largest eigenvalue; sign fixed by normalized().
inline HomPoint principal_eigenvector(const StructureTensor& t, EigenStatus* status = nullptr) {
    const double scale = t.frobenius();
    if (scale < 1e-300) throw DegenerateInput("principal_eigenvector: zero tensor");
    const SymEigen3 e = sym_eigen3(t);
    if (status) status->ambiguous = (e.values[0] - e.values[1]) <= 1e-9 * scale;
    return e.vectors[0];
}

} // namespace calib
