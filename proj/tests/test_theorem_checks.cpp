#include <cmath>
#include <random>

#include "doctest.h"
#include "qcconf/errors.hpp"
#include "qcconf/theorem_checks.hpp"

using namespace qcconf;
using namespace qcconf::checks;
using geometry::ExtendedPoint;

namespace {

const hyperbolic::DensityCalibration& calibration() {
    static const auto cal = hyperbolic::calibrate_density(0.01);
    return cal;
}

hyperbolic::LogHolderConstants constants_for(const fields::ModelMap& m) {
    return hyperbolic::log_holder_constants(std::log(std::max(m.K(), 1.5)), calibration());
}

}  // namespace

TEST_CASE("spearman rank correlation") {
    CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
    CHECK(spearman({1, 2, 3, 4}, {4, 1e-3, 1e-5, 1e-9}) == doctest::Approx(-1.0));
    CHECK(spearman({1, 2, 3}, {5, 5, 5}) == 0.0);
    // ties share the average rank: ranks (1, 2.5, 2.5, 4) against (1, 2, 3, 4)
    CHECK(spearman({1, 2, 3, 4}, {1, 2, 2, 3}) == doctest::Approx(4.5 / std::sqrt(5.0 * 4.5)));
}

TEST_CASE("fundamental inequality: identity and affine maps") {
    const Quadruple pts = {ExtendedPoint(1.0), ExtendedPoint(cplx(0, 1)), ExtendedPoint(-1.0), ExtendedPoint::infinity()};
    const auto id = check_fundamental_inequality(fields::builtin("zero"), pts);
    CHECK(id.pass());
    CHECK(id.lhs == 0.0);
    CHECK(id.rhs == doctest::Approx(0.0).epsilon(1e-12));

    const auto aff = check_fundamental_inequality(fields::builtin("affine", {{"k", 0.3}}), pts);
    CHECK(aff.all_pass());
    CHECK(aff.lhs > 0.0);
    CHECK(aff.slack > 0.0);
    // K-bar <= K(f) and the classical bound d <= log K
    REQUIRE(aff.links.size() == 2);
    CHECK(aff.links[1].rhs == doctest::Approx(std::log(1.3 / 0.7)));
    CHECK(aff.links[1].lhs <= aff.links[1].rhs);

    CHECK_THROWS_AS(check_fundamental_inequality(fields::builtin("zero"),
                                                 {ExtendedPoint(1.0), ExtendedPoint(1.0), ExtendedPoint(-1.0),
                                                  ExtendedPoint::infinity()}),
                    DomainError);
}

TEST_CASE("fundamental inequality sweep over oracle maps") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int checked = 0;
    for (const char* name : {"annulus_bump", "gm_oscillating", "hoelder", "radial_stretch", "spiral", "affine"}) {
        const auto m = fields::builtin(name);
        for (int i = 0; i < 8; ++i) {
            Quadruple z;
            for (auto& p : z) p = ExtendedPoint(cplx(u(rng), u(rng)) * std::exp(-2.0 * std::abs(u(rng))));
            if (i % 2) z[3] = ExtendedPoint(0.0);
            if (i % 4 == 3) z[2] = ExtendedPoint::infinity();
            const auto r = check_fundamental_inequality(m, z);
            CHECK_MESSAGE(r.all_pass(), name, " slack ", r.slack);
            CHECK(r.slack >= 0.0);
            ++checked;
        }
    }
    CHECK(checked == 48);
}

TEST_CASE("fundamental inequality is scale natural") {
    // f_c(w) = c f(w / c) has mu_c(w) = mu(w / c) c / conj(c) and maps c z_j to c f(z_j)
    const auto m = fields::builtin("gm_oscillating");
    const cplx c = std::polar(0.37, 0.4);
    const auto mu = m.field;
    const auto scaled = fields::BeltramiField::general(
        [mu, c](cplx w) { return mu(w / c) * c / std::conj(c); }, mu.esssup(), "gm-scaled", mu.support_radius() * std::abs(c));
    const auto f = m.f;
    const MapFn fc = [f, c](cplx w) { return c * f(w / c); };
    const cplx z[3] = {cplx(0.2, 0.05), cplx(-0.03, 0.01), cplx(0.004, -0.02)};
    const auto plain = check_fundamental_inequality(
        [f](cplx w) { return f(w); },
        fields::BeltramiField::general([mu](cplx w) { return mu(w); }, mu.esssup(), "gm-plain", mu.support_radius()),
        {ExtendedPoint(z[0]), ExtendedPoint(z[1]), ExtendedPoint(z[2]), ExtendedPoint::infinity()});
    const auto moved = check_fundamental_inequality(
        fc, scaled, {ExtendedPoint(c * z[0]), ExtendedPoint(c * z[1]), ExtendedPoint(c * z[2]), ExtendedPoint::infinity()});
    CHECK(plain.pass());
    CHECK(moved.pass());
    CHECK(std::abs(plain.lhs - moved.lhs) < 1e-8);
    CHECK(std::abs(plain.rhs - moved.rhs) < 1e-7);
}

TEST_CASE("fundamental inequality on a solved map") {
    const auto m = fields::builtin("annulus_bump", {{"k", 0.4}, {"smooth", 0.2}});
    solver::SolverConfig cfg;
    cfg.grid_n = 128;
    const auto a = solver::solve(m.field, cfg);
    const auto r = check_fundamental_inequality(a, m.field,
                                                {ExtendedPoint(0.7), ExtendedPoint(cplx(0.05, 0.3)),
                                                 ExtendedPoint(0.0), ExtendedPoint::infinity()});
    CHECK(r.pass());
    CHECK(r.slack > 0.0);
    CHECK_THROWS_AS(check_fundamental_inequality(a, fields::builtin("hoelder").field,
                                                 {ExtendedPoint(0.7), ExtendedPoint(0.2), ExtendedPoint(0.0),
                                                  ExtendedPoint::infinity()}),
                    DomainError);
}

TEST_CASE("key inequality") {
    SUBCASE("identity gives 0 <= 0") {
        const auto m = fields::builtin("zero");
        const auto c = constants_for(m);
        const auto r = check_key_inequality(m, 0.1, 0.1 * c.delta1 * 0.5, c);
        CHECK(r.all_pass());
        CHECK(r.lhs == 0.0);
        CHECK(r.rhs == 0.0);
    }
    SUBCASE("annulus bump below its support") {
        const auto m = fields::builtin("annulus_bump");
        const auto c = constants_for(m);
        const auto r = check_key_inequality(m, 0.05, 0.05 * c.delta1 / 2.0, c);
        CHECK(r.all_pass());
        CHECK(r.links.size() == 7);
        CHECK(r.lhs < 1e-14);  // f is linear on |z| < 0.1
        CHECK(r.rhs > 0.0);
    }
    SUBCASE("GM oscillating: both sides shrink across three decades") {
        const auto m = fields::builtin("gm_oscillating");
        const auto c = constants_for(m);
        double prev_l = INFINITY, prev_r = INFINITY;
        for (double s : {1e-1, 1e-2, 1e-3, 1e-4}) {
            const auto r = check_key_inequality(m, s, s * c.delta1 * cplx(0.3, 0.4), c);
            CHECK(r.all_pass());
            CHECK(r.lhs < prev_l);
            CHECK(r.rhs < prev_r);
            prev_l = r.lhs;
            prev_r = r.rhs;
        }
    }
    SUBCASE("preconditions") {
        const auto m = fields::builtin("hoelder");
        const auto c = constants_for(m);
        CHECK(check_key_inequality(m, 0.1, 0.05, c).outcome == Outcome::NotApplicable);
        const auto weak = hyperbolic::log_holder_constants(0.1, calibration());
        CHECK(check_key_inequality(m, 0.1, 0.1 * weak.delta1 / 2, weak).outcome == Outcome::NotApplicable);
    }
    SUBCASE("the constant") {
        const auto c = constants_for(fields::builtin("hoelder"));
        CHECK(key_constant(c) == doctest::Approx(c.C1 * (1 + c.delta1) / (2 * geometry::kPi)));
    }
}

TEST_CASE("main estimate") {
    SUBCASE("identity") {
        const auto m = fields::builtin("zero");
        const auto r = check_main_theorem(m, {1e-1, 1e-2, 1e-3}, constants_for(m));
        CHECK(r.pass);
        for (const auto& p : r.points) {
            CHECK(p.lhs == 0.0);
            CHECK(p.j_liminf == 0.0);
        }
    }
    SUBCASE("Hoelder family, beta = 1") {
        const auto m = fields::builtin("hoelder", {{"beta", 1.0}});
        const auto r = check_main_theorem(m, {1e-1, 1e-2, 1e-3, 1e-4}, constants_for(m));
        CHECK(r.derivative_declared);
        CHECK(r.bounds_pass);
        CHECK(r.j_tends_to_zero);
        CHECK(r.pass);
        for (const auto& p : r.points) {
            CHECK(p.bound.pass());
            CHECK(p.J.size() == 8);
        }
    }
    SUBCASE("radial stretch: J does not tend to 0") {
        const auto m = fields::builtin("radial_stretch", {{"K", 2.0}});
        const auto r = check_main_theorem(m, {1e-1, 1e-2, 1e-3}, constants_for(m));
        CHECK(!r.j_tends_to_zero);
        CHECK(r.conformal_oracle == Tri::No);
        CHECK(!r.derivative_declared);
        // J(z, delta z) is scale invariant here
        CHECK(r.j_trend[0] == doctest::Approx(r.j_trend[2]).epsilon(1e-6));
        for (const auto& p : r.points) CHECK(p.bound.outcome == Outcome::NotApplicable);
    }
    CHECK_THROWS_AS(check_main_theorem(fields::builtin("zero"), {}, constants_for(fields::builtin("hoelder"))),
                    DomainError);
}

TEST_CASE("remainder slope fits") {
    const auto radii = default_holder_radii();
    SUBCASE("mu supported away from 0: f is linear near 0") {
        const auto m = fields::builtin("annulus_bump");
        const auto fit = holder_fit(m, {0.05, 0.01, 1e-3});
        for (double rem : fit.remainders) CHECK(rem < 1e-15);
        CHECK(std::isinf(fit.slope));
        CHECK(fit.pass);
    }
    SUBCASE("beta = 1") {
        const auto fit = holder_fit(fields::builtin("hoelder", {{"beta", 1.0}}), radii);
        CHECK(fit.beta == doctest::Approx(1.0).epsilon(0.1));
        CHECK(fit.slope >= 1.313);
        CHECK(fit.pass);
    }
    SUBCASE("beta = 2") {
        const auto fit = holder_fit(fields::builtin("hoelder", {{"beta", 2.0}}), radii);
        CHECK(fit.beta == doctest::Approx(2.0).epsilon(0.1));
        CHECK(fit.slope >= 1.48);
        CHECK(fit.pass);
    }
    SUBCASE("GM oscillating: I(r) is infinite") {
        const auto fit = holder_fit(fields::builtin("gm_oscillating"), radii);
        CHECK(!fit.applicable);
        CHECK(!fit.pass);
    }
}

TEST_CASE("classification") {
    const integrals::CriteriaConfig cfg;
    SUBCASE("mu = 0") {
        const auto v = classify(fields::builtin("zero"), cfg);
        CHECK(v.twb == Hypothesis::Holds);
        CHECK(v.gm == Hypothesis::Holds);
        CHECK(v.hoelder.has_value());
        CHECK(v.conformal == Tri::Yes);
    }
    SUBCASE("GM oscillating, gamma = 0.6") {
        const auto v = classify(fields::builtin("gm_oscillating", {{"gamma", 0.6}}), cfg);
        CHECK(v.twb == Hypothesis::Fails);
        CHECK(v.twb_series.diverged);
        CHECK(v.gm == Hypothesis::Holds);
        CHECK(!v.hoelder.has_value());
        CHECK(v.conformal == Tri::Yes);
        CHECK(v.oracle == Tri::Yes);
        REQUIRE(v.measured.has_value());
        CHECK(v.measured->derivative_declared);
    }
    SUBCASE("spiral: undecided by the criteria, not conformal by the oracle") {
        const auto v = classify(fields::builtin("spiral", {{"c", 1.0}}), cfg);
        CHECK(v.twb == Hypothesis::Fails);
        CHECK(v.gm == Hypothesis::Fails);
        CHECK(v.gm_limit.diverged);
        CHECK(v.conformal == Tri::Unknown);
        CHECK(v.oracle == Tri::No);
        CHECK(!v.measured.has_value());
    }
    SUBCASE("Hoelder family") {
        const auto v = classify(fields::builtin("hoelder", {{"beta", 1.0}}), cfg);
        REQUIRE(v.hoelder.has_value());
        CHECK(v.hoelder->beta == doctest::Approx(1.0).epsilon(0.1));
        CHECK(v.hoelder->alpha_max == doctest::Approx(1.0 / 3.0).epsilon(0.1));
    }
    SUBCASE("logarithmic decay of I(r) is not a power law") {
        const auto v = classify(fields::builtin("gm_oscillating", {{"gamma", 2.0}}), cfg);
        CHECK(v.twb == Hypothesis::Holds);
        CHECK(!v.hoelder.has_value());
    }
}

TEST_CASE("more cutoffs never turn holds into fails without divergence") {
    const auto mu = fields::builtin("gm_oscillating", {{"gamma", 0.6}}).field;
    const std::vector<double> all = integrals::CriteriaConfig().cutoffs;
    Hypothesis prev = Hypothesis::Undecided;
    for (std::size_t n = 4; n <= all.size(); ++n) {
        integrals::CriteriaConfig cfg;
        cfg.cutoffs.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n));
        const auto v = classify(mu, cfg);
        if (prev == Hypothesis::Holds && v.twb == Hypothesis::Fails) CHECK(v.twb_series.diverged);
        prev = v.twb;
    }
}
