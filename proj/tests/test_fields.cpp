#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "qcconf/errors.hpp"
#include "qcconf/fields.hpp"

using namespace qcconf;
using namespace qcconf::fields;

namespace {

double mu_fd_error(const ModelMap& m, cplx z) {
    const auto w = wirtinger(m.f, z, 1e-4 * std::abs(z));
    return std::abs(w.fzbar / w.fz - m.field(z));
}

}  // namespace

TEST_CASE("wirtinger on exact cases") {
    auto id = wirtinger([](cplx z) { return z; }, {0.3, 0.2}, 1e-3);
    CHECK(std::abs(id.fz - 1.0) < 1e-14);
    CHECK(std::abs(id.fzbar) < 1e-14);
    auto cj = wirtinger([](cplx z) { return std::conj(z); }, {0.3, 0.2}, 1e-3);
    CHECK(std::abs(cj.fz) < 1e-14);
    CHECK(std::abs(cj.fzbar - 1.0) < 1e-14);
    auto af = wirtinger([](cplx z) { return z + 0.3 * std::conj(z); }, {-2.0, 5.0}, 1e-2);
    CHECK(std::abs(af.fz - 1.0) < 1e-13);
    CHECK(std::abs(af.fzbar - 0.3) < 1e-13);
    CHECK_THROWS_AS(wirtinger([](cplx z) { return z; }, {1, 1}, 0.0), DomainError);
    CHECK_THROWS_AS(wirtinger([](cplx z) { return z; }, {1e10, 0}, 1e-10), DomainError);
}

TEST_CASE("builtin families: declared values") {
    const auto zero = builtin("zero");
    CHECK(zero(cplx(0.3, 0.1)) == cplx(0.3, 0.1));
    CHECK(zero.field.is_zero());
    CHECK(zero.conformal_at_0 == Tri::Yes);

    const auto aff = builtin("affine", {{"k", 0.5}});
    CHECK(aff.K() == doctest::Approx(3.0));
    CHECK(aff.conformal_at_0 == Tri::No);
    CHECK_FALSE(aff.derivative_at_0.has_value());

    const auto rs = builtin("radial_stretch", {{"K", 2.0}});
    const cplx z(0.4, -0.7);
    CHECK(std::abs(rs.field(z) - (1.0 / 3.0) * z / std::conj(z)) < 1e-15);
    CHECK(rs.conformal_at_0 == Tri::No);
    CHECK(rs.K() == doctest::Approx(2.0));

    const auto sp = builtin("spiral", {{"c", 1.0}});
    CHECK(std::abs(sp.field(z)) == doctest::Approx(1.0 / std::sqrt(5.0)).epsilon(1e-14));

    CHECK_THROWS_AS(builtin("affine", {{"k", 1.0}}), DomainError);
    CHECK_THROWS_AS(builtin("radial_stretch", {{"K", 0.0}}), DomainError);
    CHECK_THROWS_AS(builtin("gm_oscillating", {{"gamma", 0.0}}), DomainError);
    CHECK_THROWS_AS(builtin("gm_oscillating", {{"amp", 1.0}}), DomainError);
    CHECK_THROWS_AS(builtin("hoelder", {{"c", 1.2}}), DomainError);
    CHECK_THROWS_AS(builtin("hoelder", {{"typo", 1.0}}), DomainError);
    CHECK_THROWS_AS(builtin("nonexistent"), DomainError);
}

TEST_CASE("declared fields agree with finite-difference Beltrami coefficients") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> ang(-M_PI, M_PI), lr(std::log(1e-3), std::log(0.9));
    const std::vector<ModelMap> maps = {builtin("affine", {{"k", 0.3}, {"k_im", -0.2}}),
                                        builtin("radial_stretch", {{"K", 3.0}}),
                                        builtin("spiral", {{"c", 2.0}}),
                                        builtin("annulus_bump", {{"a", 0.1}, {"b", 0.5}, {"k", 0.4}, {"smooth", 0.2}}),
                                        builtin("gm_oscillating"),
                                        builtin("hoelder", {{"c", 0.5}, {"beta", 1.0}})};
    for (const auto& m : maps) {
        double worst = 0.0;
        for (int i = 0; i < 200; ++i) {
            const double r = std::exp(lr(rng));
            // stay off the circles where mu jumps
            bool near_break = false;
            for (double b : m.field.radial_breaks()) near_break = near_break || std::abs(r / b - 1.0) < 1e-3;
            if (near_break) continue;
            worst = std::max(worst, mu_fd_error(m, std::polar(r, ang(rng))));
        }
        INFO(m.name);
        CHECK(worst < 1e-6);
    }
}

TEST_CASE("annulus bump closed form") {
    const double a = 0.1, b = 0.4;
    const cplx k(0.3, 0.1);
    const auto m = builtin("annulus_bump", {{"a", a}, {"b", b}, {"k", k.real()}, {"k_im", k.imag()}});
    const cplx D = 2.0 * k / (1.0 - k);
    // identity outside, linear inside, power law across
    CHECK(std::abs(m(cplx(0.0, 0.7)) - cplx(0.0, 0.7)) < 1e-15);
    REQUIRE(m.derivative_at_0.has_value());
    CHECK(std::abs(*m.derivative_at_0 - std::exp(D * std::log(a / b))) < 1e-14);
    CHECK(std::abs(m(cplx(0.05, 0.0)) / 0.05 - *m.derivative_at_0) < 1e-14);
    CHECK(std::abs(m(cplx(0.2, 0.0)) / 0.2 - std::exp(D * std::log(0.2 / b))) < 1e-14);
    // ratio of the outer and inner linear factors
    const cplx ratio = (m(cplx(0.9, 0.0)) / 0.9) / *m.derivative_at_0;
    CHECK(std::abs(ratio - std::exp(D * std::log(b / a))) < 1e-13);
}

TEST_CASE("smoothed annulus solved numerically matches wirtinger and sandwich") {
    const auto m = builtin("annulus_bump", {{"a", 0.1}, {"b", 0.5}, {"k", 0.5}, {"smooth", 0.3}});
    const RadialProfile& p = *m.field.radial_profile();
    double prev = 0.0;
    for (int i = 1; i <= 60; ++i) {
        const double r = 0.05 * std::pow(20.0, i / 60.0);
        const double g = std::abs(m(cplx(r, 0.0)));
        CHECK(g > prev);
        prev = g;
        // |log (g/r)| <= int_r^{r_hi} 2|h|/(1-|h|) ds/s
        double bound = 0.0;
        const int n = 4000;
        const double T0 = -std::log(std::min(r, 0.5)), T1 = -std::log(0.5);
        for (int j = 0; j < n; ++j) {
            const double T = T1 + (T0 - T1) * (j + 0.5) / n;
            const double hh = std::abs(p(std::exp(-T)));
            bound += 2 * hh / (1 - hh) * (T0 - T1) / n;
        }
        CHECK(std::abs(std::log(g / r)) <= bound * (1 + 1e-6) + 1e-12);
    }
}

TEST_CASE("hoelder family matches its closed form") {
    for (double beta : {1.0, 2.0}) {
        const double c = 0.4;
        const auto m = builtin("hoelder", {{"c", c}, {"beta", beta}});
        REQUIRE(m.derivative_at_0.has_value());
        const double f0 = std::pow(1 - c, 2 / beta);
        CHECK(std::abs(*m.derivative_at_0 - f0) < 1e-12);
        for (double r : {0.9, 0.5, 1e-2, 1e-5}) {
            const cplx z = std::polar(r, 0.7);
            const cplx want = z * f0 * std::pow(1 - c * std::pow(r, beta), -2 / beta);
            CHECK(std::abs(m(z) - want) < 1e-12 * r);
        }
        // remainder |f - f'(0) z| of order |z|^(1+beta)
        const double r = 1e-4;
        const cplx z(r, 0.0);
        const double rem = std::abs(m(z) - *m.derivative_at_0 * z);
        CHECK(rem == doctest::Approx(f0 * 2 * c / beta * std::pow(r, 1 + beta)).epsilon(1e-3));
    }
}

TEST_CASE("gm oscillating derivative against an oscillatory-quadrature oracle") {
    const auto m = builtin("gm_oscillating");
    REQUIRE(m.derivative_at_0.has_value());
    // reference: partial integrals smoothed by a cubic B-spline over three periods (mpmath, 25 digits)
    const cplx f0 = std::exp(cplx(0.3834726698788988, -0.3650580089312312));
    CHECK(std::abs(*m.derivative_at_0 - f0) < 1e-10);
    const cplx tail5(0.2242643415808223, 0.0274200937066893);
    const double r = std::exp(-5.0);
    CHECK(std::abs(m(cplx(r, 0.0)) / r - f0 * std::exp(tail5)) < 1e-11);
    // both evaluation routes agree across the support edge
    const double e = std::exp(-1.0);
    CHECK(std::abs(m(cplx(e * 0.999999, 0.0)) / (e * 0.999999) - 1.0) < 1e-5);
    CHECK(m(cplx(0.5, 0.0)) == cplx(0.5, 0.0));
}

TEST_CASE("grid fields") {
    GridData g{-1, 1, -1, 1, 3, 3, std::vector<cplx>(9, 0.0)};
    const auto z = grid_field(g);
    CHECK(z.esssup() == 0.0);
    CHECK(z(cplx(0.3, 0.3)) == 0.0);
    g.samples.assign(9, cplx(0.2, 0.1));
    const auto c = grid_field(g);
    CHECK(c.esssup() == doctest::Approx(std::abs(cplx(0.2, 0.1))));
    CHECK(std::abs(c(cplx(0.3, -0.7)) - cplx(0.2, 0.1)) < 1e-15);
    CHECK(c(cplx(1.5, 0.0)) == 0.0);
    g.samples[4] = 1.0;
    try {
        grid_field(g);
        FAIL("expected rejection");
    } catch (const DomainError& e) {
        CHECK(std::string(e.what()).find("(1,1)") != std::string::npos);
    }
}

TEST_CASE("sampled radial stretch converges at second order") {
    const auto rs = builtin("radial_stretch", {{"K", 2.0}});
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<cplx> pts;
    while (pts.size() < 200) {
        const cplx z(u(rng), u(rng));
        if (std::abs(z) > 0.3) pts.push_back(z);  // mu has a cone singularity at 0
    }
    double err[2];
    int n = 65;
    for (double& e : err) {
        const auto f = grid_field(sample_field(rs.field, -1, 1, -1, 1, n, n));
        e = 0.0;
        for (const cplx& z : pts) e = std::max(e, std::abs(f(z) - rs.field(z)));
        n = 2 * n - 1;
    }
    CHECK(err[0] < 0.01);
    CHECK(err[0] / err[1] > 3.5);
}

TEST_CASE("grid and radial-table files round trip") {
    const auto dir = std::filesystem::temp_directory_path();
    const auto rs = builtin("annulus_bump", {{"k", 0.3}});
    const GridData g = sample_field(rs.field, -1, 1, -1, 1, 17, 9);
    write_grid(g, rs.field.id(), dir / "qc_test.grid");
    const auto back = read_grid(dir / "qc_test.grid");
    CHECK(back.id() == rs.field.id());
    CHECK(back.hash() == rs.field.hash());
    CHECK(back.structure() == Structure::Grid);
    for (int j = 0; j < 9; ++j)
        for (int i = 0; i < 17; ++i) CHECK(back.grid_data()->at(i, j) == g.at(i, j));

    {
        std::ofstream t(dir / "qc_test.table");
        t << "# r re im\n0.1 0.0 0.0\n0.2 0.3 0.1\n0.4 0.0 0\n";
    }
    const auto p = read_radial_table(dir / "qc_test.table");
    CHECK(p.r_lo == 0.1);
    CHECK(p.r_hi == 0.4);
    CHECK(std::abs(p(0.15) - cplx(0.15, 0.05)) < 1e-15);
    CHECK(p(0.5) == 0.0);
    const auto m = radial_solve(p, "table");
    CHECK(m.conformal_at_0 == Tri::Yes);
    CHECK(mu_fd_error(m, std::polar(0.3, 1.0)) < 1e-6);
    {
        std::ofstream t(dir / "qc_bad.table");
        t << "0.1 0.0\n0.05 0.3\n";
    }
    CHECK_THROWS_AS(read_radial_table(dir / "qc_bad.table"), DomainError);
    std::filesystem::remove(dir / "qc_test.grid");
    std::filesystem::remove(dir / "qc_test.table");
    std::filesystem::remove(dir / "qc_bad.table");
}

TEST_CASE("non-conformal oracles keep drifting") {
    // spiral: arg(f(z)/z) = c log r drifts without limit
    const auto sp = builtin("spiral", {{"c", 1.0}});
    const double a1 = std::arg(sp(cplx(1e-2, 0)) / 1e-2), a2 = std::arg(sp(cplx(1e-3, 0)) / 1e-3);
    CHECK(std::abs(std::remainder(a1 - a2 - std::log(10.0), 2 * M_PI)) < 1e-12);
    // affine: f(z)/z depends on the direction
    const auto af = builtin("affine", {{"k", 0.5}});
    CHECK(std::abs(af(cplx(1e-6, 0)) / 1e-6 - af(cplx(0, 1e-6)) / cplx(0, 1e-6)) == doctest::Approx(1.0));
}
