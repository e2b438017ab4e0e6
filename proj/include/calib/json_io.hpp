#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "calib/camera.hpp"
#include "calib/framescore.hpp"
#include "calib/synth.hpp"
#include "calib/zsnet.hpp"

namespace calib {

// File formats keep angles in degrees; everything in memory is radians.

inline nlohmann::json camera_to_json(const CameraParams& cam) {
    const double r2d = 180.0 / 3.14159265358979323846;
    return {{"f_px", cam.f},
            {"pitch_deg", cam.psi * r2d},
            {"yaw_deg", cam.theta * r2d},
            {"roll_deg", cam.phi * r2d},
            {"width", cam.width},
            {"height", cam.height}};
}

inline CameraParams camera_from_json(const nlohmann::json& j) {
    const double d2r = 3.14159265358979323846 / 180.0;
    CameraParams cam;
    cam.f = j.at("f_px").get<double>();
    cam.psi = j.at("pitch_deg").get<double>() * d2r;
    cam.theta = j.at("yaw_deg").get<double>() * d2r;
    cam.phi = j.at("roll_deg").get<double>() * d2r;
    cam.width = j.at("width").get<int>();
    cam.height = j.at("height").get<int>();
    if (cam.f <= 0.0 || cam.width <= 0 || cam.height <= 0)
        throw ParseError("camera JSON: f, width, height must be positive");
    return cam;
}

inline nlohmann::json annotation_to_json(const synth::SceneAnnotation& ann) {
    nlohmann::json j;
    j["camera"] = camera_to_json(ann.cam);
    j["z_gt"] = {ann.z_gt.x, ann.z_gt.y, ann.z_gt.w};
    j["horizon_gt"] = {ann.horizon_gt.a, ann.horizon_gt.b, ann.horizon_gt.c};
    j["vps_gt"] = nlohmann::json::array();
    for (const HomPoint& v : ann.vps_gt) j["vps_gt"].push_back({v.x, v.y, v.w});
    j["noise_px"] = ann.noise_px;
    j["outlier_frac"] = ann.outlier_frac;
    j["edges"] = nlohmann::json::array();
    for (const synth::GtEdge& e : ann.edges)
        j["edges"].push_back({{"x0", e.x0}, {"y0", e.y0}, {"x1", e.x1}, {"y1", e.y1},
                              {"axis", e.axis}, {"family", e.family}});
    return j;
}

inline synth::SceneAnnotation annotation_from_json(const nlohmann::json& j) {
    synth::SceneAnnotation ann;
    ann.cam = camera_from_json(j.at("camera"));
    const auto& z = j.at("z_gt");
    ann.z_gt = {z.at(0).get<double>(), z.at(1).get<double>(), z.at(2).get<double>()};
    const auto& h = j.at("horizon_gt");
    ann.horizon_gt = {h.at(0).get<double>(), h.at(1).get<double>(), h.at(2).get<double>()};
    const auto& vps = j.at("vps_gt");
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& v = vps.at(i);
        ann.vps_gt[i] = {v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>()};
    }
    ann.noise_px = j.value("noise_px", 0.0);
    ann.outlier_frac = j.value("outlier_frac", 0.0);
    if (j.contains("edges"))
        for (const auto& e : j.at("edges"))
            ann.edges.push_back({e.at("x0").get<double>(), e.at("y0").get<double>(),
                                 e.at("x1").get<double>(), e.at("y1").get<double>(),
                                 e.at("axis").get<int>(), e.value("family", 0)});
    return ann;
}

inline nlohmann::json scorer_to_json(const zsnet::ScorerParams& p) {
    static const char* names[6] = {"z1", "z2", "l1", "l2", "s1", "s2"};
    nlohmann::json j;
    j["format_version"] = 1;
    auto layers = p.layers();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        j["layers"][names[i]] = {{"rows", layers[i]->out},
                                 {"cols", layers[i]->in},
                                 {"w", layers[i]->w},
                                 {"b", layers[i]->b}};
    }
    return j;
}

inline zsnet::ScorerParams scorer_from_json(const nlohmann::json& j) {
    if (j.value("format_version", 0) != 1)
        throw ParseError("scorer file: unsupported format version");
    static const char* names[6] = {"z1", "z2", "l1", "l2", "s1", "s2"};
    zsnet::ScorerParams p = zsnet::ScorerParams::zeros();
    auto layers = p.layers();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& lj = j.at("layers").at(names[i]);
        const int rows = lj.at("rows").get<int>();
        const int cols = lj.at("cols").get<int>();
        if (rows != layers[i]->out || cols != layers[i]->in)
            throw ShapeMismatch(std::string("scorer file: layer ") + names[i] +
                                " has unexpected shape");
        lj.at("w").get_to(layers[i]->w);
        lj.at("b").get_to(layers[i]->b);
        if (layers[i]->w.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) ||
            layers[i]->b.size() != static_cast<std::size_t>(rows))
            throw ShapeMismatch(std::string("scorer file: layer ") + names[i] +
                                " has wrong element count");
    }
    return p;
}

inline nlohmann::json frame_scorer_to_json(const framescore::FrameScorerModel& m) {
    return {{"format_version", 1},
            {"weights", std::vector<double>(m.w.begin(), m.w.end())},
            {"bias", m.b}};
}

inline framescore::FrameScorerModel frame_scorer_from_json(const nlohmann::json& j) {
    if (j.value("format_version", 0) != 1)
        throw ParseError("frame scorer file: unsupported format version");
    framescore::FrameScorerModel m;
    const auto w = j.at("weights").get<std::vector<double>>();
    if (w.size() != m.w.size())
        throw ShapeMismatch("frame scorer file: expected 8 weights");
    std::copy(w.begin(), w.end(), m.w.begin());
    m.b = j.at("bias").get<double>();
    return m;
}

inline nlohmann::json load_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open JSON file: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad JSON in ") + path + ": " + e.what());
    }
    return j;
}

inline void save_json(const nlohmann::json& j, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot open JSON file for writing: " + path);
    f << j.dump(2) << "\n";
}

} // namespace calib
