// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "qcconf/beltrami_solver.hpp"
#include "qcconf/commands.hpp"
#include "qcconf/core_geometry.hpp"
#include "qcconf/fields.hpp"
#include "qcconf/integrals.hpp"
#include "qcconf/modular.hpp"
#include "qcconf/quadrature.hpp"
#include "qcconf/theorem_checks.hpp"

using namespace qcconf;
using geometry::ExtendedPoint;
using cplx = std::complex<double>;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
    bool pass = true;
    std::string detail;
};

// appends "name=value" to the detail and folds ok into pass
void expect(Outcome& o, bool ok, const std::string& what) {
    o.pass = o.pass && ok;
    if (!o.detail.empty()) o.detail += "; ";
    o.detail += what + (ok ? "" : " [x]");
}

std::string fmt(double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.3g", v);
    return b;
}

cplx gauss(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    return {n(rng), n(rng)};
}

double uniform(std::mt19937_64& rng, double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

const hyperbolic::DensityCalibration& calibration() {
    static const auto cal = hyperbolic::calibrate_density(0.01);
    return cal;
}

hyperbolic::LogHolderConstants constants_for(const fields::ModelMap& m) {
    return hyperbolic::log_holder_constants(m.K() > 1.0 ? std::log(m.K()) : 0.01, calibration());
}

// ---- 1 ---------------------------------------------------------------------------------------

Outcome geometry_kernel() {
    Outcome o;
    std::mt19937_64 rng(101);
    auto moebius = [](cplx a, cplx b, cplx c, cplx d, const ExtendedPoint& z) {
        if (z.is_infinity()) return c == 0.0 ? ExtendedPoint::infinity() : ExtendedPoint(a / c);
        const cplx den = c * z.value() + d;
        return den == 0.0 ? ExtendedPoint::infinity() : ExtendedPoint((a * z.value() + b) / den);
    };
    double worst = 0.0;
    int done = 0;
    while (done < 1000) {
        std::array<ExtendedPoint, 4> z;
        for (auto& p : z) p = ExtendedPoint(gauss(rng));
        if (done % 4 == 0) z[done % 3] = ExtendedPoint::infinity();
        const cplx a = gauss(rng), b = gauss(rng), c = gauss(rng), d = gauss(rng);
        if (std::abs(a * d - b * c) < 1e-2) continue;
        const cplx before = geometry::cross_ratio(z[0], z[1], z[2], z[3]).value();
        const cplx after = geometry::cross_ratio(moebius(a, b, c, d, z[0]), moebius(a, b, c, d, z[1]),
                                                 moebius(a, b, c, d, z[2]), moebius(a, b, c, d, z[3]))
                               .value();
        worst = std::max(worst, std::abs(after - before) / std::abs(before));
        ++done;
    }
    expect(o, worst < 1e-12, "Moebius invariance worst " + fmt(worst));

    double sym = 0.0, tri = 0.0, self = 0.0, period = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const geometry::CylinderElement x(gauss(rng) * 5.0), y(gauss(rng) * 5.0), w(gauss(rng) * 5.0);
        const double xy = geometry::cylinder_distance(x, y);
        sym = std::max(sym, std::abs(xy - geometry::cylinder_distance(y, x)));
        tri = std::max(tri, geometry::cylinder_distance(x, w) - xy - geometry::cylinder_distance(y, w));
        self = std::max(self, geometry::cylinder_distance(x, x));
        const geometry::CylinderElement shifted(x.representative() + cplx(0.0, 2.0 * kPi * 3));
        period = std::max(period, geometry::cylinder_distance(x, shifted));
    }
    expect(o, sym <= 1e-12 && tri <= 1e-12 && self <= 1e-12 && period <= 1e-12,
           "metric axioms: symmetry " + fmt(sym) + ", triangle excess " + fmt(tri) + ", d(x,x) " + fmt(self) +
               ", 2 pi i periodicity " + fmt(period));
    return o;
}

// ---- 2 ---------------------------------------------------------------------------------------

Outcome lambda_machinery() {
    Outcome o;
    const double at_i = std::abs(hyperbolic::modular_lambda(hyperbolic::HalfPlanePoint({0, 1})).value() - 0.5);
    expect(o, at_i < 1e-12, "|lambda(i) - 1/2| " + fmt(at_i));

    std::mt19937_64 rng(202);
    // scaled by max(1, |lambda|): near the cusps at +-1 lambda is in the thousands and an
    // absolute 1e-12 would be finer than the spacing of doubles there
    double inv = 0.0, inv_abs = 0.0;
    for (int i = 0; i < 100; ++i) {
        const cplx tau(uniform(rng, -1.0, 1.0), uniform(rng, 0.3, 2.5));
        const cplx l = hyperbolic::modular_lambda(hyperbolic::HalfPlanePoint(tau)).value();
        const cplx m = hyperbolic::modular_lambda(hyperbolic::HalfPlanePoint(-1.0 / tau)).value();
        inv_abs = std::max(inv_abs, std::abs(m - (1.0 - l)));
        inv = std::max(inv, std::abs(m - (1.0 - l)) / std::max(1.0, std::abs(l)));
    }
    expect(o, inv < 1e-12, "lambda(-1/tau) = 1 - lambda(tau) worst scaled " + fmt(inv) + " (absolute " + fmt(inv_abs) + ")");

    double round = 0.0;
    for (int done = 0; done < 100;) {
        const cplx z(uniform(rng, -4.0, 4.0), uniform(rng, -4.0, 4.0));
        if (std::abs(z) < 1e-3 || std::abs(z - 1.0) < 1e-3) continue;
        const auto t = hyperbolic::lambda_inverse(geometry::OmegaPoint(z));
        round = std::max(round, std::abs(hyperbolic::modular_lambda(t).value() - z) / std::abs(z));
        ++done;
    }
    expect(o, round < 1e-10, "lambda(lambda^-1(z)) worst relative " + fmt(round));

    double excess = -1e300;
    for (int i = 0; i < 200; ++i) {
        const hyperbolic::HalfPlanePoint a(cplx(uniform(rng, -1.0, 1.0), uniform(rng, 0.3, 2.0)));
        const hyperbolic::HalfPlanePoint b(cplx(uniform(rng, -1.0, 1.0), uniform(rng, 0.3, 2.0)));
        const auto d = hyperbolic::d_omega(hyperbolic::modular_lambda(a), hyperbolic::modular_lambda(b));
        excess = std::max(excess, d.value - hyperbolic::d_halfplane(a, b));
    }
    expect(o, excess <= 1e-9, "d_Omega - d_H max " + fmt(excess));
    return o;
}

// ---- 3 ---------------------------------------------------------------------------------------

Outcome quadrature_closed_forms() {
    Outcome o;
    using integrals::PoleTriple;
    const PoleTriple p(cplx(0.8, 0.3), cplx(0.05, -0.1));
    const cplx ref = integrals::residue_circle_integral(0.2, p);
    double spread = 0.0;
    for (double r : {0.12, 0.3, 0.5, 0.7, 0.85}) spread = std::max(spread, std::abs(integrals::residue_circle_integral(r, p) - ref));
    expect(o, spread < 1e-10, "residue circle r-independence " + fmt(spread));

    const double base = integrals::j_star(p).real();
    double scale = 0.0;
    for (cplx c : {cplx(1e-4, 0.0), cplx(0.0, 3.0), cplx(-250.0, 40.0)})
        scale = std::max(scale, rel(integrals::j_star(PoleTriple(c * p.z1(), c * p.z2())).real(), base));
    expect(o, scale < 1e-8, "J* scale invariance " + fmt(scale));

    std::mt19937_64 rng(303);
    double min_slack = 1e300;
    for (int done = 0; done < 100;) {
        const cplx z1 = gauss(rng);
        const cplx z2 = z1 * std::polar(uniform(rng, 1e-3, 0.95), uniform(rng, 0.0, 2.0 * kPi));
        if (std::abs(z1) < 1e-3) continue;
        const PoleTriple q(z1, z2);
        const double lower = 2.0 * kPi * std::log(std::abs(z1) / std::abs(z2)) / std::abs(1.0 - z2 / z1);
        min_slack = std::min(min_slack, integrals::j_star(q).real() - lower);
        ++done;
    }
    expect(o, min_slack > 0.0, "J* minus its lower bound, min over 100 triples " + fmt(min_slack));
    return o;
}

// ---- 4 ---------------------------------------------------------------------------------------

Outcome kbar_identity() {
    Outcome o;
    std::vector<fields::ModelMap> maps;
    for (double k : {0.1, 0.3, 0.5, 0.7, 0.9}) maps.push_back(fields::builtin("affine", {{"k", k}}));
    for (double k : {0.1, 0.2, 0.4, 0.6, 0.8}) maps.push_back(fields::builtin("annulus_bump", {{"k", k}}));
    for (double K : {1.2, 1.5, 2.0, 3.0, 5.0}) maps.push_back(fields::builtin("radial_stretch", {{"K", K}}));
    for (double g : {0.55, 0.6, 0.8, 1.0, 2.0}) maps.push_back(fields::builtin("gm_oscillating", {{"gamma", g}}));

    std::mt19937_64 rng(404);
    double worst = 0.0;
    for (const auto& m : maps) {
        const cplx z1 = std::polar(uniform(rng, 0.05, 1.0), uniform(rng, 0.0, 2.0 * kPi));
        const cplx z2 = z1 * std::polar(uniform(rng, 0.01, 0.9), uniform(rng, 0.0, 2.0 * kPi));
        const auto kb = integrals::kbar(m.field, z1, z2, 0.0, ExtendedPoint::infinity());
        const auto j = integrals::j_integral(m.field, integrals::PoleTriple(z1, z2));
        worst = std::max(worst, rel(kb.value, 1.0 + j.total.real() / j.jstar.real()));
    }
    expect(o, worst <= 1e-6, "20 fields, worst relative gap " + fmt(worst));
    return o;
}

// ---- 5 ---------------------------------------------------------------------------------------

Outcome fundamental_sweep() {
    Outcome o;
    const std::vector<fields::ModelMap> maps = {
        fields::builtin("affine", {{"k", 0.4}}), fields::builtin("annulus_bump"), fields::builtin("radial_stretch"),
        fields::builtin("gm_oscillating"), fields::builtin("hoelder"), fields::builtin("spiral")};
    std::mt19937_64 rng(505);
    int total = 0, violations = 0, classical = 0, undecided = 0;
    double min_slack = 1e300;
    for (int i = 0; i < 504; ++i) {
        const auto& m = maps[i % maps.size()];
        checks::Quadruple z;
        for (;;) {
            for (auto& p : z) p = ExtendedPoint(std::exp(uniform(rng, -4.0, 0.5)) * std::polar(1.0, uniform(rng, 0.0, 2.0 * kPi)));
            if (i % 3 == 1) z[3] = ExtendedPoint::infinity();
            if (i % 3 == 2) z[2] = ExtendedPoint(0.0);
            bool apart = true;
            for (int a = 0; a < 4; ++a)
                for (int b = a + 1; b < 4; ++b)
                    if (!z[a].is_infinity() && !z[b].is_infinity() && std::abs(z[a].value() - z[b].value()) < 1e-3)
                        apart = false;
            if (apart) break;
        }
        const auto r = checks::check_fundamental_inequality(m, z, 1e-9);
        ++total;
        if (r.outcome == checks::Outcome::Fail) ++violations;
        if (r.outcome == checks::Outcome::Undecided) ++undecided;
        if (r.outcome == checks::Outcome::Pass) min_slack = std::min(min_slack, r.slack);
        for (const auto& l : r.links)
            if (l.name == "classical" && l.outcome == checks::Outcome::Fail) ++classical;
    }
    expect(o, total >= 500, std::to_string(total) + " configurations over 6 families");
    expect(o, violations == 0 && undecided == 0,
           std::to_string(violations) + " violations, " + std::to_string(undecided) + " undecided");
    expect(o, min_slack >= 0.0, "min slack " + fmt(min_slack));
    expect(o, classical == 0, std::to_string(classical) + " with d_Omega > log K(f)");
    return o;
}

// ---- 6 ---------------------------------------------------------------------------------------

// true if the sequence is identically (numerically) zero or falls with Spearman <= -0.9 against depth
bool tends_to_zero(const std::vector<double>& depth, const std::vector<double>& v, double& rho) {
    rho = checks::spearman(depth, v);
    return *std::max_element(v.begin(), v.end()) <= 1e-14 || rho <= -0.9;
}

Outcome key_sweep() {
    Outcome o;
    const std::vector<fields::ModelMap> maps = {fields::builtin("annulus_bump"), fields::builtin("gm_oscillating"),
                                                fields::builtin("hoelder")};
    const std::vector<double> scales = {1e-1, 1e-2, 1e-3};
    std::mt19937_64 rng(606);
    int total = 0, violations = 0;
    for (const auto& m : maps) {
        const auto consts = constants_for(m);
        for (int i = 0; i < 102; ++i) {
            const double s = scales[i % scales.size()];
            const cplx z1 = std::polar(s, uniform(rng, 0.0, 2.0 * kPi));
            const double t = i < 3 ? 1.0 : uniform(rng, 0.05, 1.0);
            const cplx z2 = z1 * consts.delta1 * t * std::polar(1.0, uniform(rng, 0.0, 2.0 * kPi));
            const auto r = checks::check_key_inequality(m, z1, z2, consts, 1e-9);
            ++total;
            if (r.outcome != checks::Outcome::Pass) ++violations;
        }
    }
    expect(o, total >= 300, std::to_string(total) + " admissible pairs over 3 families");
    expect(o, violations == 0, std::to_string(violations) + " not passing");

    // both sides along z = 10^-1 .. 10^-4 on the conformal oracles
    const std::vector<double> decades = {1e-1, 1e-2, 1e-3, 1e-4};
    std::vector<double> depth;
    for (double s : decades) depth.push_back(std::log(1.0 / s));
    for (const auto& m : maps) {
        const auto rep = checks::check_main_theorem(m, decades, constants_for(m));
        std::vector<double> lhs, rhs;
        for (const auto& p : rep.points) {
            lhs.push_back(p.lhs);
            rhs.push_back(rep.C * p.j_liminf);
        }
        double rl = 0.0, rr = 0.0;
        const bool ok = rep.bounds_pass && tends_to_zero(depth, lhs, rl) && tends_to_zero(depth, rhs, rr);
        expect(o, ok, m.name + " lhs " + fmt(lhs.front()) + " -> " + fmt(lhs.back()) + " (rho " + fmt(rl) + "), C J " +
                          fmt(rhs.front()) + " -> " + fmt(rhs.back()) + " (rho " + fmt(rr) + ")");
    }
    return o;
}

// ---- 7 ---------------------------------------------------------------------------------------

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Outcome criteria_separation() {
    Outcome o;
    const integrals::CriteriaConfig cfg;
    const auto gm = fields::builtin("gm_oscillating", {{"gamma", 0.6}});
    const auto twb = integrals::twb_integral(gm.field, 1.0, cfg.cutoffs);
    const auto sq = integrals::gm_square_integral(gm.field, cfg.cutoffs);
    const auto lim = integrals::gm_limit_integral(gm.field, cfg.cutoffs);
    expect(o, twb.diverged, "GM twb diverged (growth " + fmt(twb.growth_rate) + ")");
    expect(o, sq.converged, "GM square converged to " + fmt(sq.estimate.real()));

    // Cauchy test on the smooth-cutoff partials at T = 1, 10, 100, ...
    std::vector<cplx> decade;
    for (std::size_t i = 0; i < lim.cutoffs.size() && i < lim.tapered.size(); ++i) {
        const double l = std::log10(lim.cutoffs[i]);
        if (std::abs(l - std::round(l)) < 1e-12) decade.push_back(lim.tapered[i]);
    }
    double worst = 0.0;
    for (std::size_t i = 2; i < decade.size(); ++i) {
        const double prev = std::abs(decade[i - 1] - decade[i - 2]);
        const double cur = std::abs(decade[i] - decade[i - 1]);
        if (prev > 1e-13) worst = std::max(worst, cur / prev);
    }
    expect(o, lim.converged && decade.size() >= 4 && worst <= 0.1,
           "GM limit converged, worst difference ratio per decade " + fmt(worst));

    // spiral: |partials| grow linearly in T = log(1/r); the 1-D oracle is 2 pi times the mean of
    // h / (1 - |h|^2) over T, from the radial profile alone
    const auto sp = fields::builtin("spiral", {{"c", 1.0}});
    const auto* prof = sp.field.radial_profile();
    quad::Options qo;
    qo.rel_tol = 1e-12;
    const auto avg = quad::integrate_complex(
        [prof](double T) {
            const cplx h = (*prof)(std::exp(-T));
            return h / (1.0 - std::norm(h));
        },
        std::vector<double>{10.0, 1e3}, qo);
    const double oracle = 2.0 * kPi * std::abs(avg.value) / (1e3 - 10.0);
    const auto sl = integrals::gm_limit_integral(sp.field, cfg.cutoffs);
    std::vector<double> T, mag;
    for (std::size_t i = 0; i < sl.cutoffs.size(); ++i)
        if (sl.cutoffs[i] >= 10.0) {
            T.push_back(sl.cutoffs[i]);
            mag.push_back(std::abs(sl.partials[i]));
        }
    const double slope = ls_slope(T, mag);
    expect(o, sl.diverged && rel(slope, oracle) <= 0.1,
           "spiral partial slope " + fmt(slope) + " vs 1-D oracle " + fmt(oracle));
    return o;
}

// ---- 8 ---------------------------------------------------------------------------------------

Outcome hoelder() {
    Outcome o;
    std::vector<double> radii;
    for (int i = 4; i <= 20; ++i) radii.push_back(std::pow(10.0, -i / 4.0));
    for (double beta : {1.0, 2.0}) {
        const auto m = fields::builtin("hoelder", {{"beta", beta}});
        const auto fit = checks::holder_fit(m, radii);
        const double need = 1.0 + beta / (2.0 + beta) - 0.02;
        const auto h = integrals::i_holder(m.field, radii);
        expect(o, fit.slope >= need && h.applicable && rel(h.beta, beta) <= 0.1,
               "beta " + fmt(beta) + ": remainder slope " + fmt(fit.slope) + " >= " + fmt(need) + ", fitted beta " +
                   fmt(h.beta));
    }
    return o;
}

// ---- 9 ---------------------------------------------------------------------------------------

Outcome estimate_checks() {
    Outcome o;
    const integrals::CriteriaConfig cfg;
    const auto gm = fields::builtin("gm_oscillating");
    double min_slack = 1e300;
    bool all = true;
    for (double a : {1e-1, 1e-2, 1e-3}) {
        const auto r = integrals::estimate_on_j_check(gm.field, integrals::PoleTriple(a, a * 0.125), cfg);
        std::vector<integrals::BoundReport> parts = {r.first, r.second, r.decomposition};
        parts.insert(parts.end(), r.hoelder.begin(), r.hoelder.end());
        all = all && r.applicable;
        for (const auto& b : parts) {
            all = all && b.pass;
            min_slack = std::min(min_slack, b.slack);
        }
        const auto ip = integrals::i_ps_bound_check(gm.field, a, 1.0, cfg);
        all = all && ip.pass;
        min_slack = std::min(min_slack, ip.slack);
    }
    expect(o, all && min_slack >= 0.0, "estimate on J and I_ps bound at 1e-1..1e-3, min slack " + fmt(min_slack));

    double worst = 0.0;
    bool finite = true;
    for (int j = 1; j <= 4; ++j) {
        const auto coarse = integrals::h_reference_estimate(j, cfg, 1e-6);
        const auto fine = integrals::h_reference_estimate(j, cfg, 1e-10);
        finite = finite && std::isfinite(fine.real()) && fine.real() > 0.0;
        worst = std::max(worst, rel(coarse.real(), fine.real()));
    }
    expect(o, finite && worst < 0.01, "H_1..H_4 finite, change under refinement " + fmt(worst));
    return o;
}

// ---- 10 --------------------------------------------------------------------------------------

Outcome solver_cross_validation() {
    Outcome o;
    // smoothed bump: with a jump in mu the interpolated map converges at order < 1
    const auto m = fields::builtin("annulus_bump", {{"k", 0.5}, {"smooth", 0.2}});
    solver::SolverConfig c;
    c.box_half_width = 2.0;
    double err[2];
    int idx = 0;
    for (int n : {128, 256}) {
        c.grid_n = n;
        err[idx++] = solver::validate(solver::solve(m.field, c), m).sup_error;
    }
    const double order = std::log2(err[0] / err[1]);
    expect(o, order >= 1.0, "sup error " + fmt(err[0]) + " -> " + fmt(err[1]) + ", order " + fmt(order));

    c.grid_n = 256;
    const auto id = solver::solve(fields::BeltramiField(), c);
    bool exact = true;
    for (int j = 0; j < id.n(); ++j)
        for (int i = 0; i < id.n(); ++i) exact = exact && id.at(i, j) == cplx(id.node(i), id.node(j));
    expect(o, exact, "mu = 0 gives the identity exactly");
    return o;
}

// ---- 11 --------------------------------------------------------------------------------------

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome determinism() {
    Outcome o;
    const auto root = std::filesystem::temp_directory_path() / "qcconf_acceptance";
    std::filesystem::remove_all(root);
    cli::RunConfig cfg;
    cfg.command = "analyze";
    cfg.field.builtin = "gm_oscillating";
    cfg.field.params = {{"gamma", 0.7}};
    int same = 0, files = 0;
    std::vector<std::filesystem::path> dirs = {root / "a", root / "b"};
    for (const auto& d : dirs) {
        cfg.out = d;
        if (cli::cmd_analyze(cfg).exit_code != 0) expect(o, false, "analyze failed");
    }
    for (const auto& e : std::filesystem::directory_iterator(dirs[0])) {
        ++files;
        same += slurp(e.path()) == slurp(dirs[1] / e.path().filename());
    }
    expect(o, files > 0 && same == files, std::to_string(same) + "/" + std::to_string(files) + " files identical");
    std::filesystem::remove_all(root);
    return o;
}

}  // namespace

int main() {
    struct Criterion {
        int number;
        const char* title;
        double budget_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> all = {
        {1, "cross-ratio and cylinder metric", 1, geometry_kernel},
        {2, "lambda machinery", 10, lambda_machinery},
        {3, "quadrature against closed forms", 120, quadrature_closed_forms},
        {4, "K-bar identity", 300, kbar_identity},
        {5, "fundamental inequality sweep", 600, fundamental_sweep},
        {6, "key inequality sweep", 600, key_sweep},
        {7, "criteria separation", 300, criteria_separation},
        {8, "Hoelder remainder", 120, hoelder},
        {9, "estimate checks", 600, estimate_checks},
        {10, "solver cross-validation", 300, solver_cross_validation},
        {11, "determinism", 1e9, determinism},
    };
    calibration();
    int failed = 0;
    for (const auto& c : all) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        expect(o, secs < c.budget_s, fmt(secs) + " s");
        failed += !o.pass;
        std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", c.number, c.title, o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
