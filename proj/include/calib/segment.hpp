#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "calib/homgeom.hpp"

namespace calib {

/// A detected line segment in pixel coordinates, with its cached line
/// equation (join of the two endpoints).
struct Segment {
    HomPoint p0{0, 0, 1};
    HomPoint p1{0, 0, 1};
    double len = 0.0;
    HomLine line{};

    static Segment from_endpoints(double x0, double y0, double x1, double y1) {
        Segment s;
        s.p0 = {x0, y0, 1.0};
        s.p1 = {x1, y1, 1.0};
        s.len = std::hypot(x1 - x0, y1 - y0);
        s.line = line_from_endpoints(s.p0, s.p1);
        return s;
    }

    double midpoint_x() const { return 0.5 * (p0.x + p1.x); }
    double midpoint_y() const { return 0.5 * (p0.y + p1.y); }
};

namespace detail {
inline void append_double(std::string& out, double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, r.ptr);
}
} // namespace detail

/// Text format: one "x0 y0 x1 y1" record per line, '#' starts a comment.
inline std::vector<Segment> parse_segments(std::istream& in) {
    std::vector<Segment> out;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        double v[4];
        if (!(ss >> v[0])) continue;   // blank or comment-only line
        for (int i = 1; i < 4; ++i)
            if (!(ss >> v[i])) throw ParseError("expected 4 coordinates", lineno);
        std::string rest;
        if (ss >> rest) throw ParseError("trailing data after segment", lineno);
        for (double c : v)
            if (!std::isfinite(c)) throw ParseError("non-finite coordinate", lineno);
        if (v[0] == v[2] && v[1] == v[3])
            throw ParseError("zero-length segment", lineno);
        out.push_back(Segment::from_endpoints(v[0], v[1], v[2], v[3]));
    }
    return out;
}

inline std::vector<Segment> read_segments(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open segment file: " + path);
    return parse_segments(f);
}

inline std::string format_segments(const std::vector<Segment>& segments) {
    std::string out;
    for (const Segment& s : segments) {
        detail::append_double(out, s.p0.x);
        out.push_back(' ');
        detail::append_double(out, s.p0.y);
        out.push_back(' ');
        detail::append_double(out, s.p1.x);
        out.push_back(' ');
        detail::append_double(out, s.p1.y);
        out.push_back('\n');
    }
    return out;
}

inline void write_segments(const std::vector<Segment>& segments, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot open segment file for writing: " + path);
    f << format_segments(segments);
}

} // namespace calib
