#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "calib/camera.hpp"

namespace calib::metrics {

/// Maximum of the two border distances |y_pred - y_gt| / H at x = 0 and
/// x = W. Infinity when either line misses a vertical border (counts
/// against the AUC, excluded from means).
inline double horizon_error(const HomLine& pred, const HomLine& gt, int width, int height) {
    auto y_at = [](const HomLine& l, double x) {
        if (l.b == 0.0) return std::numeric_limits<double>::infinity();
        return -(l.a * x + l.c) / l.b;
    };
    const double yl_p = y_at(pred, 0.0), yl_g = y_at(gt, 0.0);
    const double yr_p = y_at(pred, static_cast<double>(width));
    const double yr_g = y_at(gt, static_cast<double>(width));
    if (!std::isfinite(yl_p) || !std::isfinite(yl_g) ||
        !std::isfinite(yr_p) || !std::isfinite(yr_g))
        return std::numeric_limits<double>::infinity();
    return std::max(std::abs(yl_p - yl_g), std::abs(yr_p - yr_g)) / height;
}

/// AUC (percent) of the cumulative error distribution over [0, 0.25].
/// Exact integral of the empirical step function.
inline double auc(std::vector<double> errors) {
    if (errors.empty()) throw EmptyInput("auc: no errors");
    constexpr double kRange = 0.25;
    std::sort(errors.begin(), errors.end());
    const double n = static_cast<double>(errors.size());
    double area = 0.0;
    double prev_x = 0.0;
    std::size_t below = 0;
    for (std::size_t i = 0; i < errors.size() && errors[i] <= kRange; ++i) {
        const double x = std::max(errors[i], 0.0);
        area += static_cast<double>(below) / n * (x - prev_x);
        prev_x = x;
        ++below;
    }
    area += static_cast<double>(below) / n * (kRange - prev_x);
    return area / kRange * 100.0;
}

struct UpErrors {
    double angle_deg = 0.0;
    double pitch_deg = 0.0;
    double roll_deg = 0.0;
};

inline UpErrors up_vector_errors(const CameraParams& pred, const CameraParams& gt) {
    const Vec3 up_p = pred.up_direction();
    const Vec3 up_g = gt.up_direction();
    const double d = std::clamp(up_p.x * up_g.x + up_p.y * up_g.y + up_p.z * up_g.z, -1.0, 1.0);
    UpErrors e;
    e.angle_deg = std::acos(d) * 180.0 / 3.14159265358979323846;
    e.pitch_deg = std::abs(pred.psi - gt.psi) * 180.0 / 3.14159265358979323846;
    e.roll_deg = std::abs(pred.phi - gt.phi) * 180.0 / 3.14159265358979323846;
    return e;
}

/// Absolute vertical-FoV difference in degrees.
inline double fov_error(double pred_f, double gt_f, int height) {
    const double a = 2.0 * std::atan(height / (2.0 * pred_f));
    const double b = 2.0 * std::atan(height / (2.0 * gt_f));
    return std::abs(a - b) * 180.0 / 3.14159265358979323846;
}

struct EvalRecord {
    double angle_deg = 0.0;
    double pitch_deg = 0.0;
    double roll_deg = 0.0;
    double fov_deg = 0.0;
    double horizon = 0.0;   // may be +inf
    bool degraded = false;
};

struct MetricStat {
    double mean = 0.0;
    double median = 0.0;
};

struct Summary {
    MetricStat angle, pitch, roll, fov, horizon;
    double auc_percent = 0.0;
    int count = 0;
    int degraded_count = 0;
};

namespace detail {
inline MetricStat stat(std::vector<double> v, bool drop_inf_from_mean) {
    MetricStat s;
    double sum = 0.0;
    std::size_t finite = 0;
    for (double x : v)
        if (std::isfinite(x)) {
            sum += x;
            ++finite;
        }
    s.mean = (drop_inf_from_mean && finite > 0) ? sum / static_cast<double>(finite)
             : finite == v.size()               ? sum / static_cast<double>(v.size())
                                                : std::numeric_limits<double>::infinity();
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    s.median = (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    return s;
}
} // namespace detail

inline Summary summarize(const std::vector<EvalRecord>& records) {
    if (records.empty()) throw EmptyInput("summarize: no records");
    std::vector<double> angle, pitch, roll, fov, horizon;
    Summary s;
    for (const auto& r : records) {
        angle.push_back(r.angle_deg);
        pitch.push_back(r.pitch_deg);
        roll.push_back(r.roll_deg);
        fov.push_back(r.fov_deg);
        horizon.push_back(r.horizon);
        if (r.degraded) ++s.degraded_count;
    }
    s.angle = detail::stat(angle, false);
    s.pitch = detail::stat(pitch, false);
    s.roll = detail::stat(roll, false);
    s.fov = detail::stat(fov, false);
    s.horizon = detail::stat(horizon, true);
    s.auc_percent = auc(horizon);
    s.count = static_cast<int>(records.size());
    return s;
}

inline std::string format_value(double v) {
    if (!std::isfinite(v)) return "inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

/// Fixed columns: metric,mean,median. FoV is vertical.
inline std::string summary_csv(const Summary& s) {
    std::string out = "metric,mean,median\n";
    auto row = [&](const char* name, const MetricStat& m) {
        out += name;
        out += ',';
        out += format_value(m.mean);
        out += ',';
        out += format_value(m.median);
        out += '\n';
    };
    row("angle_deg", s.angle);
    row("pitch_deg", s.pitch);
    row("roll_deg", s.roll);
    row("fov_deg", s.fov);
    row("horizon", s.horizon);
    out += "auc_percent," + format_value(s.auc_percent) + "," + format_value(s.auc_percent) + "\n";
    out += "degraded_count," + std::to_string(s.degraded_count) + "," +
           std::to_string(s.degraded_count) + "\n";
    return out;
}

struct CurvePoint {
    double threshold = 0.0;
    double fraction = 0.0;
};

/// Cumulative curve sampled at every distinct error plus the range ends.
inline std::vector<CurvePoint> error_curve(std::vector<double> errors) {
    if (errors.empty()) throw EmptyInput("error_curve: no errors");
    std::sort(errors.begin(), errors.end());
    const double n = static_cast<double>(errors.size());
    std::vector<CurvePoint> pts;
    pts.push_back({0.0, 0.0});
    std::size_t below = 0;
    for (std::size_t i = 0; i < errors.size() && errors[i] <= 0.25; ++i) {
        ++below;
        if (i + 1 < errors.size() && errors[i + 1] == errors[i]) continue;
        pts.push_back({errors[i], static_cast<double>(below) / n});
    }
    pts.push_back({0.25, static_cast<double>(below) / n});
    return pts;
}

inline std::string curve_csv(const std::vector<CurvePoint>& pts) {
    std::string out = "threshold,fraction\n";
    for (const auto& p : pts)
        out += format_value(p.threshold) + "," + format_value(p.fraction) + "\n";
    return out;
}

/// Self-contained SVG polyline of the cumulative curve.
inline std::string curve_svg(const std::vector<CurvePoint>& pts) {
    const int w = 500, h = 320, margin = 40;
    std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
                      std::to_string(w) + "\" height=\"" + std::to_string(h) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<polyline fill=\"none\" stroke=\"black\" points=\"";
    double prev_y = h - margin;
    for (const auto& p : pts) {
        const double px = margin + p.threshold / 0.25 * (w - 2 * margin);
        const double py = h - margin - p.fraction * (h - 2 * margin);
        // Draw the step: horizontal reach, then the rise.
        out += format_value(px) + "," + format_value(prev_y) + " ";
        out += format_value(px) + "," + format_value(py) + " ";
        prev_y = py;
    }
    out += "\"/>\n</svg>\n";
    return out;
}

} // namespace calib::metrics
