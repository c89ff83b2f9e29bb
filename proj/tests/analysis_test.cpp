#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <functional>
#include <numbers>

#include "ldg/analysis.hpp"

using namespace ldg;

namespace {

constexpr double kPi = std::numbers::pi;

// director-angle field theta -> P with constant order
PTensorField p_from_angle(const Grid2D& g, double order,
                          const std::function<double(double, double)>& theta) {
    PTensorField P(g);
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            const double t = theta(g.x(i), g.y(j));
            P.p11[g.idx(i, j)] = order * std::cos(2 * t);
            P.p12[g.idx(i, j)] = order * std::sin(2 * t);
        }
    return P;
}

ScalarField ones(const Grid2D& g) {
    ScalarField f(g);
    std::fill(f.values.begin(), f.values.end(), 1.0);
    return f;
}

ScalarField tanh_disc(const Grid2D& g, double r, double width) {
    ScalarField f(g);
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            const double d = std::hypot(g.x(i) - 0.5, g.y(j) - 0.5) - r;
            f.at(i, j) = 0.5 * (1.0 - std::tanh(d / width));
        }
    return f;
}

const double kSp = 1.8285714285714285;

}  // namespace

TEST_CASE("uniform director has no defects") {
    const Grid2D g(64);
    const PTensorField P = p_from_angle(g, 0.5, [](double, double) { return 0.3; });
    const auto defects = detect_defects(P, ones(g), 0.5, kSp);
    CHECK(defects.empty());
}

TEST_CASE("synthetic +1 radial defect") {
    const Grid2D g(64);
    const double cx = 0.503, cy = 0.497;
    const PTensorField P = p_from_angle(g, 0.8, [&](double x, double y) {
        return std::atan2(y - cy, x - cx);
    });
    const auto defects = detect_defects(P, ones(g), 0.5, kSp);
    REQUIRE(defects.size() == 1);
    CHECK(defects[0].charge == doctest::Approx(1.0));
    CHECK(std::abs(defects[0].x - cx) < 1.5 * g.h);
    CHECK(std::abs(defects[0].y - cy) < 1.5 * g.h);
}

TEST_CASE("synthetic pair of +1/2 defects") {
    const Grid2D g(64);
    const double x1 = 0.4, x2 = 0.6, yc = 0.5;
    const PTensorField P = p_from_angle(g, 0.8, [&](double x, double y) {
        return 0.5 * (std::atan2(y - yc, x - x1) + std::atan2(y - yc, x - x2));
    });
    const auto defects = detect_defects(P, ones(g), 0.5, kSp);
    REQUIRE(defects.size() == 2);
    CHECK(defects[0].charge == doctest::Approx(0.5));
    CHECK(defects[1].charge == doctest::Approx(0.5));
    CHECK(std::abs(defects[0].x - x1) < 1.5 * g.h);
    CHECK(std::abs(defects[0].y - yc) < 1.5 * g.h);
    CHECK(std::abs(defects[1].x - x2) < 1.5 * g.h);
    CHECK(std::abs(defects[1].y - yc) < 1.5 * g.h);
}

TEST_CASE("winding detection is invariant under global director rotation") {
    const Grid2D g(48);
    const double cx = 0.511, cy = 0.489;
    for (double shift : {0.0, 0.4, 1.1}) {
        const PTensorField P = p_from_angle(g, 0.6, [&](double x, double y) {
            return std::atan2(y - cy, x - cx) + shift;
        });
        const auto defects = detect_defects(P, ones(g), 0.5, kSp);
        REQUIRE(defects.size() == 1);
        CHECK(defects[0].charge == doctest::Approx(1.0));
    }
}

TEST_CASE("negative half charge is detected") {
    const Grid2D g(48);
    const PTensorField P = p_from_angle(g, 0.6, [&](double x, double y) {
        return -0.5 * std::atan2(y - 0.497, x - 0.503);
    });
    const auto defects = detect_defects(P, ones(g), 0.5, kSp);
    REQUIRE(defects.size() == 1);
    CHECK(defects[0].charge == doctest::Approx(-0.5));
}

TEST_CASE("defects outside the droplet are ignored") {
    const Grid2D g(64);
    const PTensorField P = p_from_angle(g, 0.8, [&](double x, double y) {
        return std::atan2(y - 0.497, x - 0.503);
    });
    ScalarField phi(g);  // phi = 0 everywhere: nothing counts
    CHECK(detect_defects(P, phi, 0.5, kSp).empty());
    // low order is ignored as well
    const PTensorField weak = p_from_angle(g, 0.01, [&](double x, double y) {
        return std::atan2(y - 0.497, x - 0.503);
    });
    CHECK(detect_defects(weak, ones(g), 0.5, kSp).empty());
}

TEST_CASE("interface extraction on a disc") {
    const double r = 0.1693;
    const Grid2D g(129);
    const InterfaceStats st = extract_interface(tanh_disc(g, r, 0.01));
    REQUIRE_FALSE(st.empty);
    CHECK(st.perimeter == doctest::Approx(2 * kPi * r).epsilon(0.01));
    CHECK(st.area == doctest::Approx(kPi * r * r).epsilon(0.01));
    CHECK(st.aspect_ratio == doctest::Approx(1.0).epsilon(0.02));
    CHECK(st.centroid[0] == doctest::Approx(0.5).epsilon(0.01));
    // isoperimetric sanity
    CHECK(st.perimeter * st.perimeter >= 4 * kPi * st.area * 0.99);

    // refinement changes the perimeter by less than 1%
    const Grid2D g2(257);
    const InterfaceStats st2 = extract_interface(tanh_disc(g2, r, 0.01));
    CHECK(std::abs(st2.perimeter - st.perimeter) / st.perimeter < 0.01);
}

TEST_CASE("interface extraction on an ellipse") {
    const Grid2D g(129);
    ScalarField phi(g);
    const double a = 0.2, b = 0.1;
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            const double x = (g.x(i) - 0.5) / a, y = (g.y(j) - 0.5) / b;
            const double f = std::sqrt(x * x + y * y);
            phi.at(i, j) = 0.5 * (1.0 - std::tanh((f - 1.0) * 8.0));
        }
    const InterfaceStats st = extract_interface(phi);
    REQUIRE_FALSE(st.empty);
    CHECK(st.aspect_ratio == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("empty interface signal") {
    const Grid2D g(32);
    const ScalarField zero(g);
    CHECK(extract_interface(zero).empty);
}

TEST_CASE("classification thresholds") {
    InterfaceStats st;
    st.empty = false;
    st.perimeter = 1.0;
    st.area = 0.09;
    st.centroid = Vec2{0.5, 0.5};

    const Defect plus1{0.52, 0.5, 1.0, 1};
    const Defect h1{0.42, 0.5, 0.5, 1};
    const Defect h2{0.58, 0.5, 0.5, 1};

    st.aspect_ratio = 1.05;
    CHECK(classify_state({plus1}, st, 0.9, kSp) == StateLabel::radial);

    st.aspect_ratio = 1.3;
    CHECK(classify_state({h1, h2}, st, 0.9, kSp) == StateLabel::polar);

    st.aspect_ratio = 2.0;
    CHECK(classify_state({h1, h2}, st, 0.9, kSp) == StateLabel::tactoid);
    CHECK(classify_state({}, st, 0.9, kSp) == StateLabel::tactoid);

    // one +1 far from the centroid is not radial
    st.aspect_ratio = 1.02;
    CHECK(classify_state({Defect{0.8, 0.5, 1.0, 1}}, st, 0.9, kSp) == StateLabel::other);

    // low order or no interface is isotropic
    CHECK(classify_state({}, st, 0.005 * kSp, kSp) == StateLabel::isotropic);
    InterfaceStats none;
    CHECK(classify_state({}, none, 0.9, kSp) == StateLabel::isotropic);

    // near-circular two-defect states still read as polar
    st.aspect_ratio = 1.01;
    CHECK(classify_state({h1, h2}, st, 0.9, kSp) == StateLabel::polar);

    // two defects of the wrong charge are not a polar pair
    CHECK(classify_state({Defect{0.42, 0.5, -0.5, 1}, h2}, st, 0.9, kSp) ==
          StateLabel::other);
}

TEST_CASE("summary json roundtrip smoke") {
    const MaterialConstants mat = MaterialConstants::mbba();
    const ModelParams p = ModelParams::from_physical(mat, 1e-6, 0.005e-6, 3e7 * mat.L,
                                                     1e7 * mat.L, 6e14 * mat.L, 0.09);
    const Grid2D g(48);
    const PTensorField P = p_from_angle(g, 0.5, [](double x, double y) {
        return std::atan2(y - 0.497, x - 0.503);
    });
    const ScalarField phi = tanh_disc(g, 0.25, 0.02);
    const StateSummary s = summarize_state(P, phi, p);
    CHECK(s.sup_abs_P == doctest::Approx(0.5 * std::numbers::sqrt2).epsilon(1e-12));
    const std::string path =
        (std::filesystem::temp_directory_path() / "ldg_summary.json").string();
    save_summary_json(path, s);
    CHECK(std::filesystem::exists(path));
    std::filesystem::remove(path);
}
