#include "qcconf/modular.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "qcconf/errors.hpp"

namespace qcconf::hyperbolic {

using geometry::kPi;
using geometry::kTwoPi;

namespace {

// Anharmonic moves on the pair (zeta, 1 - zeta):
//   Swap:  zeta -> 1 - zeta            (tau -> -1/tau)
//   Shift: zeta -> zeta / (zeta - 1)   (tau -> tau + 1)
// Both are involutions on lambda values.
enum class Move { Swap, Shift };

LambdaPair apply_move(Move m, const LambdaPair& p) {
    if (m == Move::Swap) return {p.one_minus, p.lambda};
    return {-p.lambda / p.one_minus, 1.0 / p.one_minus};
}

// |d zeta_new / d zeta_old| for a move
double move_jacobian(Move m, const LambdaPair& old) {
    if (m == Move::Swap) return 1.0;
    return 1.0 / std::norm(old.one_minus);
}

LambdaPair theta_series(cplx tau) {
    const cplx q = std::exp(cplx(0.0, kPi) * tau);
    const double aq = std::abs(q);
    if (16.0 * aq < 1e-300) throw OverflowError("modular_lambda: nome underflows (Im tau too large)");
    // theta2^4 = 16 q (sum q^{n(n+1)})^4, theta3 = 1 + 2 sum q^{n^2}, theta4 = 1 + 2 sum (-q)^{n^2}
    cplx s2 = 1.0, t3 = 1.0, t4 = 1.0;
    for (int n = 1; n < 64; ++n) {
        const cplx qn2 = std::pow(q, n * n);
        const cplx qnn = std::pow(q, n * (n + 1));
        s2 += qnn;
        t3 += 2.0 * qn2;
        t4 += (n % 2 ? -2.0 : 2.0) * qn2;
        if (std::abs(qnn) < 1e-17 * std::abs(s2) && std::abs(qn2) < 1e-17) break;
    }
    const cplx t3_4 = std::pow(t3, 4);
    return {16.0 * q * std::pow(s2, 4) / t3_4, std::pow(t4, 4) / t3_4};
}

cplx agm(cplx a, cplx b) {
    for (int it = 0; it < 200; ++it) {
        const cplx a1 = 0.5 * (a + b);
        cplx b1 = std::sqrt(a * b);
        if (std::abs(a1 - b1) > std::abs(a1 + b1)) b1 = -b1;
        a = a1;
        b = b1;
        if (std::abs(a - b) <= 1e-16 * std::abs(a)) break;
    }
    return 0.5 * (a + b);
}

// Representative of zeta under the anharmonic group with the smallest modulus,
// together with the moves leading to it.
struct AnharmonicReduction {
    LambdaPair pair;
    std::vector<Move> moves;
    double jacobian = 1.0;  // |d zeta_reduced / d zeta|
};

AnharmonicReduction anharmonic_reduce(cplx zeta) {
    AnharmonicReduction best{{zeta, 1.0 - zeta}, {}, 1.0};
    // words of length <= 3 in {Swap, Shift} reach all six anharmonic images
    std::vector<AnharmonicReduction> frontier = {best};
    for (int len = 0; len < 3; ++len) {
        std::vector<AnharmonicReduction> next;
        for (const auto& r : frontier) {
            for (Move m : {Move::Swap, Move::Shift}) {
                if (!r.moves.empty() && r.moves.back() == m) continue;
                AnharmonicReduction n = r;
                n.jacobian *= move_jacobian(m, r.pair);
                n.pair = apply_move(m, r.pair);
                n.moves.push_back(m);
                if (std::abs(n.pair.lambda) < std::abs(best.pair.lambda) * (1.0 - 1e-14)) best = n;
                next.push_back(std::move(n));
            }
        }
        frontier = std::move(next);
    }
    return best;
}

cplx undo_moves(cplx tau, const std::vector<Move>& moves) {
    for (auto it = moves.rbegin(); it != moves.rend(); ++it) tau = (*it == Move::Swap) ? -1.0 / tau : tau + 1.0;
    return tau;
}

// tau with lambda(tau) = zeta for |zeta| <= 1, Re zeta <= 1/2, polished by Newton on log lambda.
cplx invert_reduced(const LambdaPair& p) {
    const cplx k = std::sqrt(p.lambda);
    const cplx kp = std::sqrt(p.one_minus);
    cplx tau = cplx(0.0, 1.0) * agm(1.0, kp) / agm(1.0, k);
    if (!(tau.imag() > 0.0) || !std::isfinite(tau.imag()))
        throw OverflowError("lambda_inverse: argument too close to a puncture");
    const cplx target = std::log(p.lambda);
    for (int it = 0; it < 4; ++it) {
        const HalfPlanePoint t(tau);
        const cplx lam = modular_lambda_pair(t).lambda;
        const cplx g = std::log(lam) - target;
        if (std::abs(g) < 1e-15) break;
        const cplx step = g * lam / lambda_derivative(t);
        tau -= step;
        if (!(tau.imag() > 0.0)) throw ConvergenceError("lambda_inverse: Newton polish left the half-plane", 0.0);
        if (std::abs(step) < 1e-15 * std::abs(tau)) break;
    }
    return tau;
}

std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

HalfPlanePoint::HalfPlanePoint(cplx tau) : tau_(tau) {
    if (!(tau.imag() > 0.0) || !std::isfinite(tau.real()) || !std::isfinite(tau.imag()))
        throw DomainError("HalfPlanePoint: Im tau must be positive and finite");
}

DeckTransform::DeckTransform(std::int64_t a_, std::int64_t b_, std::int64_t c_, std::int64_t d_)
    : a(a_), b(b_), c(c_), d(d_) {
    if (a * d - b * c != 1) throw DomainError("DeckTransform: determinant must be 1");
    if (a % 2 == 0 || d % 2 == 0 || b % 2 != 0 || c % 2 != 0)
        throw DomainError("DeckTransform: not in the level-2 congruence group");
}

HalfPlanePoint DeckTransform::apply(const HalfPlanePoint& tau) const {
    const cplx t = tau.value();
    return HalfPlanePoint((double(a) * t + double(b)) / (double(c) * t + double(d)));
}

DeckTransform DeckTransform::operator*(const DeckTransform& o) const {
    DeckTransform r;
    r.a = a * o.a + b * o.c;
    r.b = a * o.b + b * o.d;
    r.c = c * o.a + d * o.c;
    r.d = c * o.b + d * o.d;
    return r;
}

LambdaPair modular_lambda_pair(const HalfPlanePoint& tau) {
    // Reduce to |Re| <= 1/2, |tau| >= 1 under SL(2,Z), recording the moves.
    cplx t = tau.value();
    std::vector<Move> moves;
    for (int it = 0; it < 10000; ++it) {
        const double n = std::round(t.real());
        if (n != 0.0) {
            t -= n;
            if (std::fmod(std::abs(n), 2.0) == 1.0) moves.push_back(Move::Shift);
        }
        if (std::norm(t) < 1.0 - 1e-15) {
            t = -1.0 / t;
            moves.push_back(Move::Swap);
            continue;
        }
        break;
    }
    LambdaPair p = theta_series(t);
    for (auto it = moves.rbegin(); it != moves.rend(); ++it) p = apply_move(*it, p);
    return p;
}

OmegaPoint modular_lambda(const HalfPlanePoint& tau) {
    const LambdaPair p = modular_lambda_pair(tau);
    if (!std::isfinite(std::abs(p.lambda))) throw OverflowError("modular_lambda: value overflows near cusp");
    if (p.lambda == cplx(0.0) || p.one_minus == cplx(0.0))
        throw OverflowError("modular_lambda: value indistinguishable from a puncture");
    return OmegaPoint(p.lambda);
}

cplx lambda_derivative(const HalfPlanePoint& tau) {
    const cplx t = tau.value();
    const double h = 1e-2 * std::min(1.0, tau.im());
    auto lam = [&](double dx) { return modular_lambda_pair(HalfPlanePoint(t + dx)).lambda; };
    auto central = [&](double s) { return (lam(s) - lam(-s)) / (2.0 * s); };
    const cplx d1 = central(h), d2 = central(h / 2), d3 = central(h / 4);
    const cplx r1 = (4.0 * d2 - d1) / 3.0;
    const cplx r2 = (4.0 * d3 - d2) / 3.0;
    return (16.0 * r2 - r1) / 15.0;
}

HalfPlanePoint reduce_to_fundamental_domain(const HalfPlanePoint& tau) {
    cplx t = tau.value();
    for (int it = 0; it < 100000; ++it) {
        // shift by an even integer into (-1, 1]
        const double n = std::ceil((t.real() - 1.0) / 2.0);
        t -= 2.0 * n;
        if (std::abs(t - 0.5) < 0.5 * (1.0 - 1e-15)) {
            t = t / (1.0 - 2.0 * t);
        } else if (std::abs(t + 0.5) < 0.5 * (1.0 - 1e-15)) {
            t = t / (1.0 + 2.0 * t);
        } else {
            return HalfPlanePoint(t);
        }
    }
    throw ConvergenceError("reduce_to_fundamental_domain: iteration limit", 0.0);
}

HalfPlanePoint lambda_inverse(const OmegaPoint& zeta) {
    const AnharmonicReduction r = anharmonic_reduce(zeta.value());
    if (!(std::abs(r.pair.lambda) > 1e-300)) throw OverflowError("lambda_inverse: argument too close to a puncture");
    const cplx tau = undo_moves(invert_reduced(r.pair), r.moves);
    return reduce_to_fundamental_domain(HalfPlanePoint(tau));
}

double d_halfplane(const HalfPlanePoint& t1, const HalfPlanePoint& t2) {
    return 2.0 * std::asinh(std::abs(t1.value() - t2.value()) / (2.0 * std::sqrt(t1.im() * t2.im())));
}

OmegaDistance d_omega(const OmegaPoint& z1, const OmegaPoint& z2, int search_depth) {
    if (search_depth < 1) throw DomainError("d_omega: search_depth must be >= 1");
    const HalfPlanePoint t1 = lambda_inverse(z1);
    const HalfPlanePoint t2 = lambda_inverse(z2);

    using Key = std::array<std::int64_t, 4>;
    auto key = [](const DeckTransform& g) {
        // g and -g act identically
        const bool flip = g.a < 0 || (g.a == 0 && g.b < 0);
        return flip ? Key{-g.a, -g.b, -g.c, -g.d} : Key{g.a, g.b, g.c, g.d};
    };
    const std::array<DeckTransform, 4> gens = {DeckTransform(1, 2, 0, 1), DeckTransform(1, -2, 0, 1),
                                               DeckTransform(1, 0, 2, 1), DeckTransform(1, 0, -2, 1)};
    std::set<Key> seen{key(DeckTransform())};
    std::vector<DeckTransform> level = {DeckTransform()};
    double best = d_halfplane(t1, t2);
    double previous = best;
    for (int depth = 1; depth <= search_depth; ++depth) {
        previous = best;
        std::vector<DeckTransform> next;
        for (const auto& g : level) {
            for (const auto& s : gens) {
                const DeckTransform h = s * g;
                if (!seen.insert(key(h)).second) continue;
                best = std::min(best, d_halfplane(t1, h.apply(t2)));
                next.push_back(h);
            }
        }
        level = std::move(next);
    }
    OmegaDistance out;
    out.value = best;
    out.previous_depth_value = previous;
    out.depth = search_depth;
    out.converged = (previous - best) <= 1e-10;
    return out;
}

double density(const OmegaPoint& zeta) {
    // density is invariant under the anharmonic automorphisms: evaluate at the
    // smallest-modulus image, where the lift is well conditioned, and pull back
    const AnharmonicReduction r = anharmonic_reduce(zeta.value());
    if (!(std::abs(r.pair.lambda) > 1e-300)) throw OverflowError("density: argument too close to a puncture");
    const HalfPlanePoint tau(invert_reduced(r.pair));
    return r.jacobian / (tau.im() * std::abs(lambda_derivative(tau)));
}

std::string DensityCalibration::hash() const {
    const std::string s = "delta0=" + format_double(delta0) + ";C0=" + format_double(C0) +
                          ";grid=" + std::to_string(radial_points) + "x" + std::to_string(angular_points);
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

DensityCalibration calibrate_density(double delta0, int radial_points, int angular_points) {
    if (!(delta0 > 0.0 && delta0 < 1.0)) throw DomainError("calibrate_density: delta0 must lie in (0,1)");
    if (radial_points < 2 || angular_points < 1) throw DomainError("calibrate_density: grid too small");
    double lo = std::numeric_limits<double>::infinity();
    for (int j = 0; j < radial_points; ++j) {
        const double r = std::pow(delta0, 1.0 + 3.0 * j / (radial_points - 1));
        for (int k = 0; k < angular_points; ++k) {
            const cplx z = std::polar(r, kTwoPi * k / angular_points);
            lo = std::min(lo, density(OmegaPoint(z)) * r * std::log(1.0 / r));
        }
    }
    return {0.99 * lo, delta0, radial_points, angular_points};
}

void save_calibration(const DensityCalibration& cal, const std::filesystem::path& path, const std::string& timestamp) {
    nlohmann::ordered_json j;
    j["format"] = "qcconf-calibration";
    j["version"] = 1;
    j["delta0"] = cal.delta0;
    j["C0"] = cal.C0;
    j["grid"] = {cal.radial_points, cal.angular_points};
    j["hash"] = cal.hash();
    j["timestamp"] = timestamp;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_calibration: cannot write " + path.string());
    out << j.dump(2) << "\n";
}

DensityCalibration load_calibration(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_calibration: cannot read " + path.string());
    const auto j = nlohmann::json::parse(in);
    if (j.value("format", "") != "qcconf-calibration" || j.value("version", 0) != 1)
        throw std::runtime_error("load_calibration: unsupported calibration document");
    DensityCalibration cal;
    cal.delta0 = j.at("delta0").get<double>();
    cal.C0 = j.at("C0").get<double>();
    cal.radial_points = j.at("grid").at(0).get<int>();
    cal.angular_points = j.at("grid").at(1).get<int>();
    return cal;
}

DensityCalibration cached_calibration(const std::filesystem::path& path, double delta0, int radial_points,
                                      int angular_points) {
    if (std::filesystem::exists(path)) {
        const auto cal = load_calibration(path);
        if (cal.delta0 == delta0 && cal.radial_points == radial_points && cal.angular_points == angular_points)
            return cal;
    }
    const auto cal = calibrate_density(delta0, radial_points, angular_points);
    save_calibration(cal, path);
    return cal;
}

LogHolderConstants log_holder_constants(double L, const DensityCalibration& cal) {
    if (!(L > 0.0)) throw DomainError("log_holder_constants: L must be positive");
    if (!(cal.C0 > 0.0)) throw DomainError("log_holder_constants: calibration has no positive C0");
    LogHolderConstants c;
    c.L = L;
    c.nu = std::exp(L / cal.C0);
    c.delta1 = std::pow(cal.delta0, c.nu);
    c.C1 = c.nu / cal.C0;
    c.calibration = cal;
    return c;
}

LogDistanceReport check_log_vs_distance(const OmegaPoint& z1, const OmegaPoint& z2, const LogHolderConstants& consts,
                                        int search_depth) {
    LogDistanceReport rep;
    const double r1 = std::abs(z1.value());
    const auto d = d_omega(z1, z2, search_depth);
    rep.distance = d.value;
    rep.distance_converged = d.converged;
    rep.lhs = geometry::cylinder_distance(geometry::CylinderElement(std::log(z1.value())),
                                          geometry::CylinderElement(std::log(z2.value())));
    rep.rhs = consts.C1 * d.value * std::log(1.0 / r1);
    rep.applicable = r1 < consts.delta1 && d.value <= consts.L;
    rep.pass = rep.applicable && rep.lhs <= rep.rhs * (1.0 + 1e-12) + 1e-15;
    return rep;
}

}  // namespace qcconf::hyperbolic
