#pragma once

#include <algorithm>
#include <cmath>
#include <optional>

#include "calib/homgeom.hpp"

namespace calib {

// Pinhole model. Camera frame: x right, y down (image convention),
// z forward. World vertical axis: y. Rotation is world-to-camera,
//
//   R = R_roll(phi, z) * R_pitch(psi, x) * R_yaw(theta, y)
//
// with yaw innermost so the zenith and horizon do not depend on theta.
// Signs are fixed so psi > 0 puts the zenith vanishing point above the
// image center (camera pitched up); the round-trip tests assert this.

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;
};

inline Vec3 mat_apply(const Mat3& m, const Vec3& v) {
    return {m(0, 0) * v.x + m(0, 1) * v.y + m(0, 2) * v.z,
            m(1, 0) * v.x + m(1, 1) * v.y + m(1, 2) * v.z,
            m(2, 0) * v.x + m(2, 1) * v.y + m(2, 2) * v.z};
}

inline Mat3 rot_yaw(double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    Mat3 r = Mat3::identity();
    r(0, 0) = c;  r(0, 2) = s;
    r(2, 0) = -s; r(2, 2) = c;
    return r;
}

inline Mat3 rot_pitch(double psi) {
    const double c = std::cos(psi), s = std::sin(psi);
    Mat3 r = Mat3::identity();
    r(1, 1) = c;  r(1, 2) = s;
    r(2, 1) = -s; r(2, 2) = c;
    return r;
}

inline Mat3 rot_roll(double phi) {
    const double c = std::cos(phi), s = std::sin(phi);
    Mat3 r = Mat3::identity();
    r(0, 0) = c; r(0, 1) = -s;
    r(1, 0) = s; r(1, 1) = c;
    return r;
}

struct CameraParams {
    double f = 1.0;        // focal length, pixels
    double psi = 0.0;      // pitch about x, radians
    double theta = 0.0;    // yaw about y, radians
    double phi = 0.0;      // roll about z, radians
    int width = 224;
    int height = 224;

    double cu() const { return width / 2.0; }
    double cv() const { return height / 2.0; }

    Mat3 rotation() const { return rot_roll(phi) * rot_pitch(psi) * rot_yaw(theta); }

    /// Direction of the world vertical axis in camera coordinates.
    Vec3 up_direction() const {
        const double cp = std::cos(psi), sp = std::sin(psi);
        const double cr = std::cos(phi), sr = std::sin(phi);
        return {-cp * sr, cp * cr, -sp};
    }

    double vertical_fov_deg() const {
        return 2.0 * std::atan(height / (2.0 * f)) * 180.0 / 3.14159265358979323846;
    }
};

struct PseudoIntrinsics {
    double f_pseudo = 112.0;
    double cu = 112.0, cv = 112.0;

    static PseudoIntrinsics for_image(int width, int height) {
        return {std::min(width, height) / 2.0, width / 2.0, height / 2.0};
    }
};

/// p = (K R) P. The w component is 0 for directions parallel to the
/// image plane.
inline HomPoint project(const CameraParams& cam, const Vec3& world) {
    const Vec3 d = mat_apply(cam.rotation(), world);
    return {cam.f * d.x + cam.cu() * d.z,
            cam.f * d.y + cam.cv() * d.z,
            d.z};
}

inline HomPoint to_pseudo(const HomPoint& p, const PseudoIntrinsics& pi) {
    return {(p.x - pi.cu * p.w) / pi.f_pseudo,
            (p.y - pi.cv * p.w) / pi.f_pseudo,
            p.w};
}

inline HomPoint from_pseudo(const HomPoint& v, const PseudoIntrinsics& pi) {
    return {pi.f_pseudo * v.x + pi.cu * v.w,
            pi.f_pseudo * v.y + pi.cv * v.w,
            v.w};
}

inline HomLine line_to_pseudo(const HomLine& l, const PseudoIntrinsics& pi) {
    // Lines transform contravariantly: l' = K_p^T l.
    return {pi.f_pseudo * l.a,
            pi.f_pseudo * l.b,
            pi.cu * l.a + pi.cv * l.b + l.c};
}

/// Image line containing the vanishing points of every horizontal world
/// direction. With psi = phi = 0 this is y = cv.
inline HomLine horizon_from_camera(const CameraParams& cam) {
    const Vec3 d = cam.up_direction();
    return {d.x, d.y, -(cam.cu() * d.x + cam.cv() * d.y) + cam.f * d.z};
}

struct EulerAngles {
    double psi = 0.0, theta = 0.0, phi = 0.0;
};

inline EulerAngles rotation_angles(const Mat3& r) {
    EulerAngles e;
    const double cpsi = std::hypot(r(2, 0), r(2, 2));
    e.psi = std::atan2(-r(2, 1), cpsi);
    if (cpsi > 1e-12) {
        e.theta = std::atan2(-r(2, 0), r(2, 2));
        e.phi = std::atan2(-r(0, 1), r(1, 1));
    } else {
        e.theta = 0.0;
        e.phi = std::atan2(r(1, 0), r(0, 0));
    }
    return e;
}

struct PitchRoll {
    double psi = 0.0, phi = 0.0;
};

/// Recover (pitch, roll) from a zenith VP in pseudo space and a focal
/// length in pixels. Rebuilding the camera with these angles (theta = 0)
/// reproduces a zenith scale-equivalent to z.
inline PitchRoll angles_from_zenith(const HomPoint& z, double f_px, const PseudoIntrinsics& pi) {
    if (f_px <= 0.0) throw DegenerateInput("angles_from_zenith: f must be positive");
    const double f_rel = f_px / pi.f_pseudo;
    double dx = z.x, dy = z.y, dz = f_rel * z.w;
    const double nxy = std::hypot(dx, dy);
    const double n = std::sqrt(dx * dx + dy * dy + dz * dz);
    if (n == 0.0) throw DegenerateInput("angles_from_zenith: zero zenith");
    if (nxy <= 1e-12 * n)
        throw DegenerateInput("angles_from_zenith: zenith at the principal point");
    if (dy < 0.0 || (dy == 0.0 && dz > 0.0)) {
        dx = -dx; dy = -dy; dz = -dz;
    }
    return {std::atan2(-dz, std::hypot(dx, dy)), std::atan2(-dx, dy)};
}

struct TwoVpCalibration {
    double f_px = 0.0;
    Mat3 rotation;   // columns: world x, y (vertical), z axes in camera coords
};

/// Calibrate focal length and rotation from a zenith VP and one horizontal
/// VP, both in pseudo space. Returns nullopt when the orthogonality
/// constraint admits no real focal length (hypothesis rejected).
///
/// Canonical form: vertical column sign-fixed, horizontal axes rotated by
/// quarter turns so theta lands in (-45, 45] degrees (Manhattan frames are
/// invariant under such turns).
inline std::optional<TwoVpCalibration> calibrate_from_vps(
    const HomPoint& z, const HomPoint& h, const PseudoIntrinsics& pi) {
    const double nz = norm(z), nh = norm(h);
    if (nz == 0.0 || nh == 0.0) throw DegenerateInput("calibrate_from_vps: zero VP");
    if (std::hypot(z.x, z.y) <= 1e-12 * nz || std::hypot(h.x, h.y) <= 1e-12 * nh)
        throw DegenerateInput("calibrate_from_vps: VP at the principal point");
    if (scale_equivalent(z, h, 1e-12))
        throw DegenerateInput("calibrate_from_vps: coincident VPs");

    const double num = z.x * h.x + z.y * h.y;
    const double den = z.w * h.w;
    double f_rel;
    if (std::abs(den) <= 1e-14 * nz * nh) {
        // One VP at infinity: the constraint degenerates. Orthogonality
        // holds for any focal iff the finite parts are orthogonal too.
        if (std::abs(num) > 1e-9 * nz * nh) return std::nullopt;
        f_rel = 1.0;
    } else {
        const double f2 = -num / den;
        if (!(f2 > 0.0)) return std::nullopt;
        f_rel = std::sqrt(f2);
    }

    auto direction = [f_rel](const HomPoint& v) {
        HomPoint d{v.x, v.y, f_rel * v.w};
        const double n = norm(d);
        return scaled(d, 1.0 / n);
    };
    HomPoint dz = direction(z);
    if (dz.y < 0.0 || (dz.y == 0.0 && dz.w > 0.0)) dz = scaled(dz, -1.0);
    HomPoint dh = direction(h);
    // Exact re-orthogonalization against the vertical.
    const double proj = dot(dh, dz);
    dh = {dh.x - proj * dz.x, dh.y - proj * dz.y, dh.w - proj * dz.w};
    const double nh2 = norm(dh);
    if (nh2 <= 1e-12) throw DegenerateInput("calibrate_from_vps: parallel directions");
    dh = scaled(dh, 1.0 / nh2);

    // Columns [x | y | z] with y vertical; z completes a det +1 frame.
    const HomPoint dt{dh.y * dz.w - dh.w * dz.y,
                      dh.w * dz.x - dh.x * dz.w,
                      dh.x * dz.y - dh.y * dz.x};
    Mat3 r;
    r(0, 0) = dh.x; r(1, 0) = dh.y; r(2, 0) = dh.w;
    r(0, 1) = dz.x; r(1, 1) = dz.y; r(2, 1) = dz.w;
    r(0, 2) = dt.x; r(1, 2) = dt.y; r(2, 2) = dt.w;

    const double theta0 = std::atan2(-r(2, 0), r(2, 2));
    const double half_pi = 3.14159265358979323846 / 2.0;
    const double k = std::ceil(theta0 / half_pi - 0.5);
    if (k != 0.0) r = r * rot_yaw(-k * half_pi);

    return TwoVpCalibration{f_rel * pi.f_pseudo, r};
}

/// Zenith VP of a camera in pseudo space (unit, canonical sign).
inline HomPoint zenith_pseudo(const CameraParams& cam, const PseudoIntrinsics& pi) {
    const Vec3 d = cam.up_direction();
    const double f_rel = cam.f / pi.f_pseudo;
    return normalized(HomPoint{f_rel * d.x, f_rel * d.y, d.z});
}

} // namespace calib
