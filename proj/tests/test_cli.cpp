// Integration tests driving the installed binary through its subcommands.

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#ifndef CALIB_BIN
#error "CALIB_BIN must point at the calib executable"
#endif

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("vpcalib_cli_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

int run(const std::string& args) {
    const std::string cmd = std::string(CALIB_BIN) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("cli: synth writes the documented scene layout") {
    TempDir tmp;
    const std::string ds = (tmp.path / "ds").string();
    REQUIRE(run("synth --out " + ds + " --n-scenes 3 --seed 5 --render") == 0);
    for (int i = 0; i < 3; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "scene_%05d", i);
        CHECK(fs::exists(fs::path(ds) / name / "segments.txt"));
        CHECK(fs::exists(fs::path(ds) / name / "gt.json"));
        CHECK(fs::exists(fs::path(ds) / name / "image.pgm"));
    }
    const auto gt = nlohmann::json::parse(slurp(fs::path(ds) / "scene_00000" / "gt.json"));
    CHECK(gt.at("camera").contains("f_px"));
    CHECK(gt.at("camera").contains("pitch_deg"));
    CHECK(gt.at("camera").at("width").get<int>() == 224);
}

TEST_CASE("cli: calibrate is byte-reproducible and accurate on a clean scene") {
    TempDir tmp;
    const std::string ds = (tmp.path / "ds").string();
    REQUIRE(run("synth --out " + ds + " --n-scenes 1 --seed 9") == 0);
    const std::string segs = ds + "/scene_00000/segments.txt";
    const std::string gt_path = ds + "/scene_00000/gt.json";
    const std::string out1 = (tmp.path / "r1.json").string();
    const std::string out2 = (tmp.path / "r2.json").string();
    REQUIRE(run("calibrate --segments " + segs + " --seed 4 --out " + out1) == 0);
    REQUIRE(run("calibrate --segments " + segs + " --seed 4 --out " + out2) == 0);
    CHECK(slurp(out1) == slurp(out2));

    const auto result = nlohmann::json::parse(slurp(out1));
    const auto gt = nlohmann::json::parse(slurp(gt_path));
    CHECK(std::abs(result.at("f_px").get<double>() - gt.at("camera").at("f_px").get<double>()) /
              gt.at("camera").at("f_px").get<double>() < 0.01);
    CHECK(std::abs(result.at("pitch_deg").get<double>() -
                   gt.at("camera").at("pitch_deg").get<double>()) < 0.25);
    CHECK(result.at("mode").get<std::string>() == "deterministic");
    CHECK_FALSE(result.at("degraded").get<bool>());
    CHECK(result.contains("config"));
    CHECK(result.at("horizon").contains("left_y_norm"));
}

TEST_CASE("cli: calibrate handles images, map dumps, and the oracle mode") {
    TempDir tmp;
    const std::string ds = (tmp.path / "ds").string();
    REQUIRE(run("synth --out " + ds + " --n-scenes 1 --seed 12 --render") == 0);
    const std::string img = ds + "/scene_00000/image.pgm";
    const std::string gt = ds + "/scene_00000/gt.json";
    const std::string dump = (tmp.path / "maps").string();
    REQUIRE(run("calibrate --image " + img + " --seed 2 --dump-maps " + dump + " --out " +
                (tmp.path / "img_result.json").string()) == 0);
    CHECK(fs::exists(fs::path(dump) / "line_map.pgm"));
    CHECK(fs::exists(fs::path(dump) / "activation_y.pgm"));
    CHECK(fs::exists(fs::path(dump) / "channels.bin"));
    CHECK(fs::file_size(fs::path(dump) / "channels.bin") == 224u * 224u * 17u * 4u);
    const auto header = nlohmann::json::parse(slurp(fs::path(dump) / "channels.json"));
    CHECK(header.at("channels").get<int>() == 17);

    REQUIRE(run("calibrate --segments " + ds + "/scene_00000/segments.txt --gt " + gt +
                " --mode oracle --seed 2 --out " + (tmp.path / "oracle.json").string()) == 0);
    const auto oracle = nlohmann::json::parse(slurp(tmp.path / "oracle.json"));
    CHECK(oracle.at("mode").get<std::string>() == "oracle");
}

TEST_CASE("cli: exit codes for usage, degraded, and missing input") {
    TempDir tmp;
    CHECK(run("calibrate") == 64);                       // neither input
    CHECK(run("calibrate --image a --segments b") == 64);
    CHECK(run("") == 64);                                // missing subcommand
    CHECK(run("calibrate --segments /nonexistent/path.txt") == 1);
    CHECK(run("calibrate --segments x --mode oracle") == 64);   // oracle without gt

    // Vertical-only scene: pipeline degrades, exit code 2.
    const fs::path segs = tmp.path / "verticals.txt";
    std::ofstream f(segs);
    for (int i = 0; i < 12; ++i)
        f << 20 + 15 * i << " 30 " << 21 + 15 * i << " 200\n";
    f.close();
    CHECK(run("calibrate --segments " + segs.string() + " --seed 1 --out " +
              (tmp.path / "d.json").string()) == 2);
}

TEST_CASE("cli: eval writes reports and sweep of size one matches it") {
    TempDir tmp;
    const std::string ds = (tmp.path / "ds").string();
    REQUIRE(run("synth --out " + ds + " --n-scenes 4 --seed 21 --noise-px 0.5") == 0);
    const std::string rep = (tmp.path / "rep").string();
    REQUIRE(run("eval --dataset " + ds + " --out-dir " + rep + " --seed 6 --svg") == 0);
    CHECK(fs::exists(fs::path(rep) / "records.csv"));
    CHECK(fs::exists(fs::path(rep) / "summary.csv"));
    CHECK(fs::exists(fs::path(rep) / "curve.csv"));
    CHECK(fs::exists(fs::path(rep) / "curve.svg"));
    const std::string summary = slurp(fs::path(rep) / "summary.csv");
    CHECK(summary.rfind("metric,mean,median\n", 0) == 0);

    // Re-run: byte-identical reports.
    const std::string rep2 = (tmp.path / "rep2").string();
    REQUIRE(run("eval --dataset " + ds + " --out-dir " + rep2 + " --seed 6 --svg") == 0);
    CHECK(slurp(fs::path(rep) / "records.csv") == slurp(fs::path(rep2) / "records.csv"));
    CHECK(slurp(fs::path(rep) / "summary.csv") == slurp(fs::path(rep2) / "summary.csv"));

    const std::string table = (tmp.path / "sweep.csv").string();
    REQUIRE(run("sweep --dataset " + ds + " --vary k=8 --seed 6 --out " + table) == 0);
    const std::string sweep_csv = slurp(table);
    // The single sweep row carries the same angle mean as eval's summary.
    std::string angle_mean = summary.substr(summary.find("angle_deg,") + 10);
    angle_mean = angle_mean.substr(0, angle_mean.find(','));
    CHECK(sweep_csv.find("\n8," + angle_mean + ",") != std::string::npos);
}

TEST_CASE("cli: train-zs produces a loadable scorer that calibrate accepts") {
    TempDir tmp;
    const std::string ds = (tmp.path / "train").string();
    REQUIRE(run("synth --out " + ds + " --n-scenes 8 --seed 31 --noise-px 1 --outlier-frac 0.3") == 0);
    const std::string params = (tmp.path / "zs.json").string();
    REQUIRE(run("train-zs --dataset " + ds + " --out " + params +
                " --epochs 2 --n-lines 48 --n-zenith 48 --seed 3") == 0);
    REQUIRE(fs::exists(params));

    const std::string eval_ds = (tmp.path / "eval").string();
    REQUIRE(run("synth --out " + eval_ds + " --n-scenes 1 --seed 33") == 0);
    CHECK(run("calibrate --segments " + eval_ds + "/scene_00000/segments.txt" +
              " --scorer zsnet --zs-params " + params + " --seed 5 --out " +
              (tmp.path / "net.json").string()) == 0);
    CHECK(run("calibrate --segments x --scorer zsnet") == 64);   // params missing
}

TEST_CASE("cli: detect round-trips through the segment file format") {
    TempDir tmp;
    const std::string ds = (tmp.path / "ds").string();
    REQUIRE(run("synth --out " + ds + " --n-scenes 1 --seed 41 --render") == 0);
    const std::string segs = (tmp.path / "detected.txt").string();
    REQUIRE(run("detect --image " + ds + "/scene_00000/image.pgm --out " + segs) == 0);
    REQUIRE(fs::exists(segs));
    CHECK(run("calibrate --segments " + segs + " --seed 1 --out " +
              (tmp.path / "from_detect.json").string()) <= 2);
}
