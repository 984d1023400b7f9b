#include <cmath>
#include <vector>

#include "doctest.h"
#include "qcconf/quadrature.hpp"

using namespace qcconf::quad;

TEST_CASE("1-D rules on closed forms") {
    CHECK(integrate([](double x) { return std::sin(x); }, 0.0, M_PI).value == doctest::Approx(2.0).epsilon(1e-13));
    // endpoint singularity, never evaluated
    const auto r = integrate([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, {1e-12, 1e-11, 20000});
    CHECK(r.value == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(r.converged);
    const std::vector<double> pts = {0.0, 0.3, 1.0};
    CHECK(integrate([](double x) { return x < 0.3 ? 1.0 : 2.0; }, pts).value == doctest::Approx(1.7).epsilon(1e-14));
}

TEST_CASE("semi-infinite tails") {
    const auto a = integrate_tail([](double x, std::span<double> o) { o[0] = 1.0 / (x * x); }, 1, 1.0);
    CHECK(a.value[0] == doctest::Approx(1.0).epsilon(1e-11));
    const auto b = integrate_tail([](double x, std::span<double> o) { o[0] = std::pow(x, -1.2); }, 1, 2.0);
    CHECK(b.value[0] == doctest::Approx(5.0 * std::pow(2.0, -0.2)).epsilon(1e-9));
    const auto c = integrate_complex_tail([](double y) { return std::exp(std::complex<double>(-y, y)); }, 1.0);
    const std::complex<double> want = -std::exp(std::complex<double>(-1, 1)) / std::complex<double>(-1, 1);
    CHECK(std::abs(c.value - want) < 1e-12);
}

TEST_CASE("vector-valued integrands refine together") {
    const std::vector<double> pts = {0.0, 1.0};
    const auto r = integrate_1d(
        [](double x, std::span<double> o) {
            o[0] = x;
            o[1] = std::exp(x);
            o[2] = 0.0;
        },
        3, pts);
    CHECK(r.value[0] == doctest::Approx(0.5));
    CHECK(r.value[1] == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-13));
    CHECK(r.value[2] == 0.0);
}

TEST_CASE("2-D cubature") {
    const std::vector<Rect> sq = {{0, 1, 0, 1, 0}};
    const auto r = integrate_2d([](int, double x, double y, std::span<double> o) { o[0] = x * y; }, 1, sq);
    CHECK(r.value[0] == doctest::Approx(0.25).epsilon(1e-14));
    // kink along the diagonal forces refinement
    const auto k = integrate_2d([](int, double x, double y, std::span<double> o) { o[0] = std::abs(x - y); }, 1, sq,
                                {1e-9, 1e-9, 50000});
    CHECK(k.value[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-8));
}

TEST_CASE("bump is a smooth partition step") {
    CHECK(bump(0.2) == 1.0);
    CHECK(bump(0.5) == 1.0);
    CHECK(bump(1.0) == 0.0);
    CHECK(bump(0.75) == doctest::Approx(0.5));
    CHECK(bump(0.6) + bump(0.9) == doctest::Approx(1.0));
}

TEST_CASE("plane integrator on closed forms") {
    PlaneDomain d;
    d.decay_in = 2.0;
    d.decay_out = 2.0;
    auto r = integrate_plane([](std::complex<double> z, std::span<double> o) { o[0] = 1.0 / std::pow(1.0 + std::norm(z), 2); },
                             1, d);
    CHECK(r.value[0] == doctest::Approx(M_PI).epsilon(1e-10));

    // simple pole away from the origin
    d.poles = {{{1.0, 0.0}, 1.0}};
    r = integrate_plane(
        [](std::complex<double> z, std::span<double> o) {
            const double s = std::abs(z - 1.0);
            o[0] = 1.0 / (s * std::pow(1.0 + s * s, 1.5));
        },
        1, d);
    CHECK(r.value[0] == doctest::Approx(2.0 * M_PI).epsilon(1e-9));

    // stronger singularity, graded chart
    d.poles = {{{0.0, 2.0}, 1.5}};
    r = integrate_plane(
        [](std::complex<double> z, std::span<double> o) {
            const double s = std::abs(z - std::complex<double>(0, 2));
            o[0] = std::pow(s, -1.5) * std::exp(-s * s);
        },
        1, d);
    CHECK(r.value[0] == doctest::Approx(M_PI * std::tgamma(0.25)).epsilon(1e-9));
}

TEST_CASE("plane integrator on annuli and radial breaks") {
    PlaneDomain d;
    d.r_in = 1.0;
    d.r_out = 2.0;
    auto r = integrate_plane([](std::complex<double>, std::span<double> o) { o[0] = 1.0; }, 1, d);
    CHECK(r.value[0] == doctest::Approx(3.0 * M_PI).epsilon(1e-13));

    // indicator of 0.2 < |z| < 0.5 over dx dy/|z|^2 on the whole plane with a break-aligned chart
    PlaneDomain e;
    e.radial_breaks = {0.2, 0.5};
    e.decay_in = 1.0;
    e.decay_out = 1.0;
    r = integrate_plane(
        [](std::complex<double> z, std::span<double> o) {
            const double a = std::abs(z);
            o[0] = (a > 0.2 && a < 0.5) ? 1.0 / (a * a) : a / (1.0 + a * a * a * a);
        },
        1, e);
    // second piece: 2 pi int r^2/(1+r^4) dr over r<0.2 and r>0.5
    const double tail = 2.0 * M_PI * (integrate([](double s) { return s * s / (1 + s * s * s * s); }, 0.0, 0.2).value +
                                      integrate([](double s) { return s * s / (1 + s * s * s * s); }, 0.5, 1e4).value +
                                      1.0 / 1e4);
    CHECK(r.value[0] == doctest::Approx(2.0 * M_PI * std::log(2.5) + tail).epsilon(1e-8));
}

TEST_CASE("results are bit-stable across runs") {
    PlaneDomain d;
    d.poles = {{{0.3, 0.1}, 1.0}, {{-1.0, 0.5}, 1.0}};
    auto f = [](std::complex<double> z, std::span<double> o) {
        o[0] = 1.0 / std::abs(z * (z - std::complex<double>(0.3, 0.1)) * (z - std::complex<double>(-1.0, 0.5)));
    };
    const auto a = integrate_plane(f, 1, d), b = integrate_plane(f, 1, d);
    CHECK(a.value[0] == b.value[0]);
    CHECK(a.cells == b.cells);
}
