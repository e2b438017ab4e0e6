#include <catch2/catch_amalgamated.hpp>

#include "calib/metrics.hpp"
#include "calib/rng.hpp"
#include "oracles.hpp"

using namespace calib;
using namespace calib::metrics;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("horizon_error: reference cases") {
    const int W = 224, H = 224;
    const HomLine level{0, 1, -112.0};
    CHECK(horizon_error(level, level, W, H) == 0.0);

    const HomLine offset{0, 1, -112.0 - H / 4.0};
    CHECK(horizon_error(offset, level, W, H) == Catch::Approx(0.25));

    // Tilted: 0.1 H at the left border, 0.2 H at the right border.
    const HomLine tilted = line_from_endpoints({0.0, 112.0 + 0.1 * H, 1.0},
                                               {double(W), 112.0 + 0.2 * H, 1.0});
    CHECK(horizon_error(tilted, level, W, H) == Catch::Approx(0.2));
}

TEST_CASE("horizon_error: symmetric and scale-invariant") {
    Rng rng(11);
    for (int i = 0; i < 100; ++i) {
        const HomLine a{rng.uniform(-1.0, 1.0), rng.uniform(0.5, 2.0), rng.uniform(-200.0, 200.0)};
        const HomLine b{rng.uniform(-1.0, 1.0), rng.uniform(0.5, 2.0), rng.uniform(-200.0, 200.0)};
        const double e1 = horizon_error(a, b, 224, 224);
        CHECK(horizon_error(b, a, 224, 224) == Catch::Approx(e1));
        CHECK(horizon_error(scaled(a, -3.5), scaled(b, 0.25), 224, 224) ==
              Catch::Approx(e1).margin(1e-12));
    }
}

TEST_CASE("horizon_error: vertical line misses the borders") {
    const HomLine vertical{1, 0, -50};
    const HomLine level{0, 1, -112};
    CHECK(std::isinf(horizon_error(vertical, level, 224, 224)));
}

TEST_CASE("auc: closed-form cases") {
    CHECK(auc({0.0, 0.0, 0.0}) == Catch::Approx(100.0));
    CHECK(auc({0.25, 0.3, kInf}) == Catch::Approx(0.0));
    CHECK(auc({0.0, 0.0, 0.3, kInf}) == Catch::Approx(50.0));
    CHECK_THROWS_AS(auc({}), EmptyInput);
}

TEST_CASE("auc: matches brute-force integration") {
    Rng rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + static_cast<int>(rng.uniform_int(200));
        std::vector<double> errors;
        for (int i = 0; i < n; ++i) {
            const double u = rng.uniform01();
            if (u < 0.05)
                errors.push_back(kInf);
            else
                errors.push_back(rng.uniform(0.0, 0.5));
        }
        CHECK(std::abs(auc(errors) - oracle::auc_bruteforce(errors)) < 0.01);
    }
}

TEST_CASE("up_vector_errors: reference cases") {
    CameraParams gt;
    gt.psi = 0.2;
    gt.phi = -0.1;
    CameraParams pred = gt;
    const UpErrors zero = up_vector_errors(pred, gt);
    CHECK(zero.angle_deg == Catch::Approx(0.0).margin(1e-12));
    CHECK(zero.pitch_deg == 0.0);
    CHECK(zero.roll_deg == 0.0);

    // Pure roll difference of 2 degrees at zero pitch.
    CameraParams a, b;
    a.phi = 0.0;
    b.phi = 2.0 * 3.14159265358979323846 / 180.0;
    const UpErrors roll = up_vector_errors(a, b);
    CHECK(roll.roll_deg == Catch::Approx(2.0));
    CHECK(roll.angle_deg == Catch::Approx(2.0).epsilon(1e-9));
    CHECK(roll.pitch_deg == 0.0);

    CameraParams up, down;
    up.psi = 10.0 * 3.14159265358979323846 / 180.0;
    down.psi = -10.0 * 3.14159265358979323846 / 180.0;
    CHECK(up_vector_errors(up, down).pitch_deg == Catch::Approx(20.0));
    CHECK(up_vector_errors(up, down).angle_deg == Catch::Approx(20.0));
}

TEST_CASE("fov_error: reference cases and symmetry") {
    CHECK(fov_error(200.0, 200.0, 224) == 0.0);
    CHECK(fov_error(112.0, 224.0, 224) == Catch::Approx(36.86989764584401).epsilon(1e-12));
    CHECK(fov_error(130.0, 300.0, 224) == Catch::Approx(fov_error(300.0, 130.0, 224)));
}

TEST_CASE("summarize: perfect record") {
    const Summary s = summarize({EvalRecord{}});
    CHECK(s.angle.mean == 0.0);
    CHECK(s.fov.median == 0.0);
    CHECK(s.auc_percent == Catch::Approx(100.0));
    CHECK(s.degraded_count == 0);
    CHECK_THROWS_AS(summarize({}), EmptyInput);
}

TEST_CASE("summarize: AUC and infinity handling") {
    EvalRecord good;
    EvalRecord bad;
    bad.horizon = 0.3;
    const Summary s = summarize({good, bad});
    CHECK(s.auc_percent == Catch::Approx(50.0));

    EvalRecord inf_rec;
    inf_rec.horizon = kInf;
    inf_rec.degraded = true;
    const Summary t = summarize({good, good, inf_rec});
    CHECK(t.horizon.mean == Catch::Approx(0.0));      // inf excluded from mean
    CHECK(t.horizon.median == 0.0);                   // order statistics unaffected
    CHECK(t.degraded_count == 1);
}

TEST_CASE("summary_csv: fixed columns") {
    const Summary s = summarize({EvalRecord{}});
    const std::string csv = summary_csv(s);
    CHECK(csv.rfind("metric,mean,median\n", 0) == 0);
    CHECK(csv.find("angle_deg,") != std::string::npos);
    CHECK(csv.find("auc_percent,") != std::string::npos);
}

TEST_CASE("error_curve covers the full range") {
    const auto pts = error_curve({0.0, 0.1, 0.1, 0.4});
    REQUIRE(pts.size() >= 3);
    CHECK(pts.front().threshold == 0.0);
    CHECK(pts.back().threshold == 0.25);
    CHECK(pts.back().fraction == Catch::Approx(0.75));
    const std::string csv = curve_csv(pts);
    CHECK(csv.rfind("threshold,fraction\n", 0) == 0);
    CHECK(curve_svg(pts).find("<svg") == 0);
}
