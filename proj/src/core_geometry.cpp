#include "qcconf/core_geometry.hpp"

#include <cmath>

#include "qcconf/errors.hpp"

namespace qcconf::geometry {

namespace {

bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

}  // namespace

ExtendedPoint::ExtendedPoint(cplx v) : v_(v) {
    if (!finite(v)) throw DomainError("ExtendedPoint: non-finite coordinates");
}

cplx ExtendedPoint::value() const {
    if (inf_) throw DomainError("ExtendedPoint: infinity has no finite value");
    return v_;
}

CylinderElement::CylinderElement(cplx w) {
    double im = std::remainder(w.imag(), kTwoPi);  // in [-pi, pi]
    if (im <= -kPi) im += kTwoPi;
    w_ = cplx(w.real(), im);
}

OmegaPoint::OmegaPoint(cplx z) : z_(z) {
    if (!finite(z)) throw DomainError("OmegaPoint: non-finite value");
    if (z == cplx(0.0) || z == cplx(1.0)) throw DomainError("OmegaPoint: value is a puncture (0 or 1)");
}

OmegaPoint cross_ratio(const ExtendedPoint& z1, const ExtendedPoint& z2,
                       const ExtendedPoint& z3, const ExtendedPoint& z4) {
    const ExtendedPoint* pts[4] = {&z1, &z2, &z3, &z4};
    int infinite = 0;
    for (int i = 0; i < 4; ++i) {
        if (pts[i]->is_infinity()) ++infinite;
        for (int j = i + 1; j < 4; ++j)
            if (*pts[i] == *pts[j]) throw DomainError("cross_ratio: coincident points");
    }
    if (infinite > 1) throw DomainError("cross_ratio: at most one point may be infinity");

    // difference factor, or 1 when it contains the point at infinity
    auto diff = [](const ExtendedPoint& a, const ExtendedPoint& b) -> cplx {
        if (a.is_infinity() || b.is_infinity()) return 1.0;
        return a.value() - b.value();
    };
    const cplx num = diff(z1, z3) * diff(z2, z4);
    const cplx den = diff(z2, z3) * diff(z1, z4);
    const cplx cr = num / den;
    if (cr == cplx(0.0) || cr == cplx(1.0) || !finite(cr))
        throw DomainError("cross_ratio: degenerate result (points numerically coincident)");
    return OmegaPoint(cr);
}

double cylinder_distance(const CylinderElement& w1, const CylinderElement& w2) {
    const cplx d = w1.representative() - w2.representative();
    // Im d lies in (-2pi, 2pi); the minimizer is among n in {-1, 0, 1}
    double best = std::abs(d);
    for (int n : {-1, 1}) best = std::min(best, std::abs(d + cplx(0.0, kTwoPi * n)));
    return best;
}

CylinderElement log_deviation(cplx z, cplx fz) {
    if (z == cplx(0.0) || fz == cplx(0.0)) throw DomainError("log_deviation: zero argument");
    // log|fz| - log|z| avoids overflow of the quotient for extreme magnitudes
    const double re = std::log(std::abs(fz)) - std::log(std::abs(z));
    const double im = std::arg(fz) - std::arg(z);
    return CylinderElement(cplx(re, im));
}

std::optional<double> cauchy_pair_deficiency(std::span<const Sample> samples, double delta1) {
    if (!(delta1 > 0.0 && delta1 < 1.0)) throw DomainError("cauchy_pair_deficiency: delta1 must lie in (0,1)");
    std::optional<double> sup;
    for (const auto& a : samples) {
        if (a.z == cplx(0.0) || a.fz == cplx(0.0)) throw DomainError("cauchy_pair_deficiency: zero sample");
        const auto la = log_deviation(a.z, a.fz);
        for (const auto& b : samples) {
            if (!(std::abs(b.z) <= delta1 * std::abs(a.z))) continue;
            const double d = cylinder_distance(la, log_deviation(b.z, b.fz));
            sup = sup ? std::max(*sup, d) : d;
        }
    }
    return sup;
}

}  // namespace qcconf::geometry
