#include "qcconf/theorem_checks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "qcconf/errors.hpp"

namespace qcconf::checks {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = geometry::kPi;

// Which side of a comparison is only known from above (an unconverged d_Omega search).
enum class Bound { Exact, LhsUpper, RhsUpper };

InequalityReport settle(std::string name, double lhs, double rhs, double tolerance, Bound bound = Bound::Exact) {
    InequalityReport r;
    r.name = std::move(name);
    r.lhs = lhs;
    r.rhs = rhs;
    r.slack = rhs - lhs;
    r.tolerance = tolerance;
    const bool holds = lhs <= rhs + tolerance;
    if (!std::isfinite(lhs) || std::isnan(rhs))
        r.outcome = Outcome::Undecided;
    else if (holds)
        r.outcome = bound == Bound::RhsUpper ? Outcome::Undecided : Outcome::Pass;
    else
        r.outcome = bound == Bound::LhsUpper ? Outcome::Undecided : Outcome::Fail;
    return r;
}

Bound upper_if(bool converged, Bound side) { return converged ? Bound::Exact : side; }

ExtendedPoint image(const MapFn& f, const ExtendedPoint& z) {
    if (z.is_infinity()) return z;
    return ExtendedPoint(f(z.value()));
}

void echo_points(InequalityReport& r, const Quadruple& z) {
    for (int i = 0; i < 4; ++i) {
        const std::string tag = "z" + std::to_string(i + 1);
        if (z[i].is_infinity()) {
            r.inputs.push_back({tag + ".inf", 1.0});
        } else {
            r.inputs.push_back({tag + ".re", z[i].value().real()});
            r.inputs.push_back({tag + ".im", z[i].value().imag()});
        }
    }
}

double field_K(const BeltramiField& mu) { return (1.0 + mu.esssup()) / (1.0 - mu.esssup()); }

// least-squares slope of y against x
double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

}  // namespace

const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::Pass: return "pass";
        case Outcome::Fail: return "fail";
        case Outcome::Undecided: return "undecided";
        case Outcome::NotApplicable: return "not-applicable";
    }
    return "?";
}

const char* to_string(Hypothesis h) {
    switch (h) {
        case Hypothesis::Holds: return "holds";
        case Hypothesis::Fails: return "fails";
        case Hypothesis::Undecided: return "undecided";
    }
    return "?";
}

bool InequalityReport::all_pass() const {
    if (!pass()) return false;
    return std::all_of(links.begin(), links.end(), [](const InequalityReport& l) { return l.all_pass(); });
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw DomainError("spearman: sizes differ");
    if (x.size() < 2) return 0.0;
    const auto rx = ranks(x), ry = ranks(y);
    const double n = static_cast<double>(x.size());
    const double m = 0.5 * (n + 1.0);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (rx[i] - m) * (ry[i] - m);
        sxx += (rx[i] - m) * (rx[i] - m);
        syy += (ry[i] - m) * (ry[i] - m);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

// ---- cross-ratio distortion ---------------------------------------------------------------

InequalityReport check_fundamental_inequality(const MapFn& f, const BeltramiField& mu, const Quadruple& z, double tol,
                                              int search_depth) {
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            if (z[i] == z[j]) throw DomainError("fundamental inequality: points must be distinct");
    Quadruple w;
    for (int i = 0; i < 4; ++i) w[i] = image(f, z[i]);
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            if (w[i] == w[j]) throw DomainError("fundamental inequality: images coincide");

    const auto before = geometry::cross_ratio(z[0], z[1], z[2], z[3]);
    const auto after = geometry::cross_ratio(w[0], w[1], w[2], w[3]);
    const auto d = hyperbolic::d_omega(before, after, search_depth);
    const auto kb = integrals::kbar(mu, z[0], z[1], z[2], z[3], tol);

    const double rhs = std::log(kb.value);
    // lambda inversion is good to about 1e-10; the quadrature error is propagated through the log
    const double tolerance = 10.0 * kb.err / kb.value + 1e-9 * (1.0 + d.value);
    InequalityReport r = settle("fundamental", d.value, rhs, tolerance, upper_if(d.converged, Bound::LhsUpper));
    echo_points(r, z);
    r.inputs.push_back({"tol", tol});
    r.inputs.push_back({"search_depth", search_depth});
    r.inputs.push_back({"kbar", kb.value});
    r.inputs.push_back({"kbar_err", kb.err});
    r.inputs.push_back({"d_omega_converged", d.converged ? 1.0 : 0.0});
    if (!d.converged) r.note = "d_Omega search did not converge; the distance is an upper bound";

    r.links.push_back(settle("kbar_below_K", rhs, std::log(field_K(mu)), tolerance));
    r.links.push_back(settle("classical", d.value, std::log(field_K(mu)), 1e-9 * (1.0 + d.value),
                             upper_if(d.converged, Bound::LhsUpper)));
    return r;
}

InequalityReport check_fundamental_inequality(const ModelMap& map, const Quadruple& z, double tol, int search_depth) {
    return check_fundamental_inequality(map.f, map.field, z, tol, search_depth);
}

InequalityReport check_fundamental_inequality(const solver::ApproxMap& map, const BeltramiField& mu,
                                              const Quadruple& z, double tol, int search_depth) {
    if (map.field_hash() != mu.hash()) throw DomainError("fundamental inequality: map was solved from another field");
    return check_fundamental_inequality([&map](cplx p) { return map(p); }, mu, z, tol, search_depth);
}

// ---- key inequality -----------------------------------------------------------------------

double key_constant(const hyperbolic::LogHolderConstants& consts) {
    return consts.C1 * (1.0 + consts.delta1) / (2.0 * kPi);
}

InequalityReport check_key_inequality(const ModelMap& map, cplx z1, cplx z2, const hyperbolic::LogHolderConstants& consts,
                                      double tol, int search_depth) {
    const double C = key_constant(consts);
    InequalityReport r;
    r.name = "key";
    r.inputs = {{"z1.re", z1.real()}, {"z1.im", z1.imag()}, {"z2.re", z2.real()}, {"z2.im", z2.imag()},
                {"C", C}, {"C1", consts.C1}, {"delta1", consts.delta1}, {"L", consts.L}, {"tol", tol}};
    // the boundary |z2| = delta1 |z1| is admissible; allow for rounding in forming z2
    if (!(std::abs(z2) > 0.0 && std::abs(z2) <= consts.delta1 * std::abs(z1) * (1.0 + 1e-12))) {
        r.note = "needs 0 < |z2| <= delta1 |z1|";
        return r;
    }
    if (consts.L < std::log(map.K()) * (1.0 - 1e-12)) {
        r.note = "constants were built for L < log K(f)";
        return r;
    }
    const cplx f1 = map(z1), f2 = map(z2);
    if (f1 == 0.0 || f2 == 0.0) throw DomainError("key inequality: f vanishes at a sample point");

    const double lhs = geometry::cylinder_distance(geometry::log_deviation(z1, f1), geometry::log_deviation(z2, f2));
    const auto J = integrals::j_integral(map.field, integrals::PoleTriple(z1, z2), tol);
    const double j = J.total.real(), jerr = J.total.err;
    const double jstar = J.jstar.real();
    const double rel = 10.0 * (jerr / std::max(j, 1e-300) + J.jstar.err / jstar);

    r = settle("key", lhs, C * j, 10.0 * C * jerr + 1e-12 * (1.0 + lhs));
    r.inputs = {{"z1.re", z1.real()}, {"z1.im", z1.imag()}, {"z2.re", z2.real()}, {"z2.im", z2.imag()},
                {"C", C}, {"C1", consts.C1}, {"delta1", consts.delta1}, {"L", consts.L}, {"tol", tol},
                {"J", j}, {"J_err", jerr}, {"J_star", jstar}};

    // the chain through zeta1 = z2/z1 and zeta2 = f(z2)/f(z1)
    const cplx zeta1 = z2 / z1, zeta2 = f2 / f1;
    const double log_inv = std::log(1.0 / std::abs(zeta1));
    const double lower = 2.0 * kPi * log_inv / std::abs(1.0 - zeta1);
    double d = 0.0;
    bool d_conv = true;
    if (zeta1 != zeta2) {
        const auto dist = hyperbolic::d_omega(geometry::OmegaPoint(zeta1), geometry::OmegaPoint(zeta2), search_depth);
        d = dist.value;
        d_conv = dist.converged;
    }
    const double ratio = j / jstar;
    const double dtol = 1e-9 * (1.0 + d);
    r.inputs.push_back({"d_omega", d});
    r.inputs.push_back({"d_omega_converged", d_conv ? 1.0 : 0.0});

    const Bound dl = upper_if(d_conv, Bound::LhsUpper), dr = upper_if(d_conv, Bound::RhsUpper);
    r.links.push_back(settle("d_omega <= log kbar", d, std::log1p(ratio), rel * ratio + dtol, dl));
    r.links.push_back(settle("log kbar <= J/J*", std::log1p(ratio), ratio, rel * ratio));
    r.links.push_back(settle("J/J* <= J/lower(J*)", ratio, j / lower, rel * ratio));
    r.links.push_back(settle("groetzsch", d, std::log(map.K()), dtol, dl));
    r.links.push_back(settle("log vs distance", lhs, consts.C1 * d * log_inv, 1e-12 * (1.0 + lhs) + consts.C1 * dtol * log_inv, dr));
    const double mid = consts.C1 * std::abs(1.0 - zeta1) / (2.0 * kPi) * j;
    r.links.push_back(settle("distance vs J", consts.C1 * d * log_inv, mid, rel * mid + consts.C1 * dtol * log_inv, dl));
    r.links.push_back(settle("|1 - z2/z1| <= 1 + delta1", mid, C * j, 1e-12 * mid));
    if (!d_conv) r.note = "d_Omega search did not converge; links through it are one-sided";
    return r;
}

// ---- main estimate -------------------------------------------------------------------------

MainTheoremReport check_main_theorem(const ModelMap& map, const std::vector<double>& scales,
                                     const hyperbolic::LogHolderConstants& consts, int samples, double tol) {
    if (scales.empty()) throw DomainError("main theorem: no scales");
    if (samples < 1) throw DomainError("main theorem: samples must be positive");
    for (double s : scales)
        if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("main theorem: scales must be positive");

    MainTheoremReport rep;
    rep.C = key_constant(consts);
    rep.delta = consts.delta1;
    rep.conformal_oracle = map.conformal_at_0;
    if (map.derivative_at_0) {
        rep.derivative = map.derivative_at_0;
        rep.derivative_declared = true;
    } else {
        // stand-in: the quotient at the deepest sample
        const double smallest = *std::min_element(scales.begin(), scales.end());
        const double w = smallest * std::pow(consts.delta1, samples);
        if (w > 0.0 && map(w) != 0.0) rep.derivative = map(w) / w;
    }

    rep.bounds_pass = true;
    for (double s : scales) {
        MainTheoremPoint pt;
        pt.z = s;
        double m = s;
        for (int n = 1; n <= samples; ++n) {
            m *= consts.delta1;
            if (!(m > 0.0)) break;
            pt.z2_moduli.push_back(m);
            pt.J.push_back(integrals::j_integral(map.field, integrals::PoleTriple(pt.z, m), tol).total.real());
        }
        if (pt.J.empty()) throw DomainError("main theorem: delta1^n |z| underflows");
        pt.j_liminf = *std::min_element(pt.J.begin(), pt.J.end());
        rep.j_trend.push_back(pt.J.front());

        // J growing by steady increments along z2 = delta^n z means liminf J = +inf (the
        // radial stretch has exactly constant increments); a stand-in f'(0) is useless then
        const std::size_t k = pt.J.size();
        const bool grows = k >= 3 && pt.J[1] > pt.J[0] && pt.J[k - 1] - pt.J[k - 2] >= 0.5 * (pt.J[1] - pt.J[0]);
        if (!rep.derivative) {
            pt.bound.name = "main";
            pt.bound.note = "no f'(0)";
        } else if (!rep.derivative_declared && grows) {
            pt.bound.name = "main";
            pt.bound.note = "J grows as z2 -> 0; liminf is not finite";
        } else {
            pt.lhs = geometry::cylinder_distance(geometry::log_deviation(pt.z, map(pt.z)),
                                                 geometry::CylinderElement(std::log(*rep.derivative)));
            pt.bound = settle("main", pt.lhs, rep.C * pt.j_liminf, 1e-9 * (1.0 + pt.lhs));
            if (!rep.derivative_declared) pt.bound.note = "f'(0) measured at the deepest sample";
        }
        pt.bound.inputs = {{"z", s}, {"C", rep.C}, {"delta", rep.delta}, {"samples", static_cast<double>(samples)}};
        if (pt.bound.outcome == Outcome::Fail || pt.bound.outcome == Outcome::Undecided) rep.bounds_pass = false;
        rep.points.push_back(std::move(pt));
    }

    std::vector<double> depth;
    for (double s : scales) depth.push_back(std::log(1.0 / s));
    rep.spearman = spearman(depth, rep.j_trend);
    const double jmax = *std::max_element(rep.j_trend.begin(), rep.j_trend.end());
    rep.j_tends_to_zero = jmax == 0.0 || (scales.size() >= 3 && rep.spearman <= -0.9);
    rep.pass = rep.bounds_pass && (rep.conformal_oracle != Tri::Yes || rep.j_tends_to_zero);
    return rep;
}

// ---- Hoelder remainder -----------------------------------------------------------------------

HolderFit holder_fit(const ModelMap& map, const std::vector<double>& radii, double margin) {
    if (radii.size() < 2) throw DomainError("holder_fit: need at least two radii");
    HolderFit fit;
    fit.radii = radii;
    const double smallest = *std::min_element(radii.begin(), radii.end());
    if (map.derivative_at_0) {
        fit.derivative = *map.derivative_at_0;
        fit.derivative_declared = true;
    } else {
        const double w = smallest * 1e-6;
        fit.derivative = map(w) / w;
    }

    const auto h = integrals::i_holder(map.field, radii);
    fit.applicable = h.applicable;
    fit.beta = h.beta;
    fit.alpha_max = h.applicable ? h.alpha_max : 0.0;
    fit.required = 1.0 + fit.alpha_max - margin;

    std::vector<double> xs, ys;
    for (double r : radii) {
        const double rem = std::abs(map(r) - fit.derivative * r);
        fit.remainders.push_back(rem);
        // a few ulps of f'(0) r is rounding, not remainder
        if (rem > 1e-14 * std::abs(fit.derivative) * r) {
            xs.push_back(std::log(r));
            ys.push_back(std::log(rem));
        }
    }
    fit.slope = xs.size() >= 2 ? ls_slope(xs, ys) : kInf;
    fit.pass = fit.applicable && fit.slope >= fit.required;
    return fit;
}

// ---- classification --------------------------------------------------------------------------

std::vector<double> default_holder_radii() {
    std::vector<double> r;
    for (int i = 4; i <= 20; ++i) r.push_back(std::pow(10.0, -i / 4.0));
    return r;
}

namespace {

Hypothesis verdict_of(const integrals::CutoffSeries& s) {
    if (!s.estimate.converged) return Hypothesis::Undecided;
    return s.converged ? Hypothesis::Holds : Hypothesis::Fails;
}

// I(r) = O(r^beta) is accepted when the slope over the first and the last decade agree,
// which rules out logarithmic decay such as I ~ 1/log(1/r).
std::optional<HolderVerdict> hoelder_verdict(const BeltramiField& field, double tol) {
    const auto radii = default_holder_radii();
    const auto h = integrals::i_holder(field, radii, tol);
    if (!h.applicable) return std::nullopt;
    HolderVerdict v;
    v.beta = h.beta;
    v.alpha_max = h.alpha_max;
    v.radii = h.radii;
    v.values = h.values;
    if (std::isinf(h.beta)) return v;
    if (!(h.beta > 0.05)) return std::nullopt;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < 5 && i < h.values.size(); ++i) {
        if (!(h.values[i] > 0.0)) return std::nullopt;
        xs.push_back(std::log(h.radii[i]));
        ys.push_back(std::log(h.values[i]));
    }
    const double early = ls_slope(xs, ys);
    if (std::abs(early - h.beta) > 0.2 * h.beta) return std::nullopt;
    return v;
}

}  // namespace

ConformalityVerdict classify(const BeltramiField& field, const integrals::CriteriaConfig& cfg) {
    cfg.validate();
    ConformalityVerdict v;
    v.twb_series = integrals::twb_integral(field, 1.0, cfg.cutoffs, cfg.tol);
    v.gm_square = integrals::gm_square_integral(field, cfg.cutoffs, cfg.tol);
    v.gm_limit = integrals::gm_limit_integral(field, cfg.cutoffs, cfg.tol);
    v.twb = verdict_of(v.twb_series);
    const Hypothesis sq = verdict_of(v.gm_square), lim = verdict_of(v.gm_limit);
    if (sq == Hypothesis::Holds && lim == Hypothesis::Holds)
        v.gm = Hypothesis::Holds;
    else if (sq == Hypothesis::Fails || lim == Hypothesis::Fails)
        v.gm = Hypothesis::Fails;
    else
        v.gm = Hypothesis::Undecided;
    v.hoelder = hoelder_verdict(field, cfg.tol);
    v.conformal = (v.twb == Hypothesis::Holds || v.gm == Hypothesis::Holds || v.hoelder) ? Tri::Yes : Tri::Unknown;
    v.note = v.conformal == Tri::Yes ? "a sufficient condition holds" : "no sufficient condition is met";
    return v;
}

ConformalityVerdict classify(const ModelMap& map, const integrals::CriteriaConfig& cfg) {
    ConformalityVerdict v = classify(map.field, cfg);
    v.oracle = map.conformal_at_0;
    if (map.derivative_at_0) {
        const HolderFit fit = holder_fit(map, default_holder_radii());
        v.measured = MeasuredBehaviour{fit.derivative, true, fit.slope};
    }
    if (v.conformal == Tri::Yes && v.oracle == Tri::No)
        v.note = "inconsistent: a criterion holds but the model map is not conformal at 0";
    else if (v.conformal != Tri::Yes && v.oracle == Tri::No)
        v.note = "criteria undecided; the model map is known not to be conformal at 0";
    else if (v.conformal != Tri::Yes && v.oracle == Tri::Yes)
        v.note = "criteria undecided; the model map is conformal at 0";
    return v;
}

}  // namespace qcconf::checks
