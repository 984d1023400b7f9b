#pragma once

#include <complex>
#include <optional>
#include <span>
#include <utility>

namespace qcconf::geometry {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Point of the Riemann sphere: a finite complex value or the single point at infinity.
class ExtendedPoint {
public:
    constexpr ExtendedPoint() = default;
    ExtendedPoint(cplx v);  // throws DomainError on non-finite input
    ExtendedPoint(double x) : ExtendedPoint(cplx(x, 0.0)) {}

    static constexpr ExtendedPoint infinity() {
        ExtendedPoint p;
        p.inf_ = true;
        return p;
    }

    bool is_infinity() const noexcept { return inf_; }
    cplx value() const;  // throws DomainError for infinity

    friend bool operator==(const ExtendedPoint& a, const ExtendedPoint& b) {
        return a.inf_ == b.inf_ && (a.inf_ || a.v_ == b.v_);
    }

private:
    cplx v_{};
    bool inf_ = false;
};

/// Element of the cylinder C/2*pi*i*Z. The stored representative has Im in (-pi, pi].
class CylinderElement {
public:
    CylinderElement() = default;
    explicit CylinderElement(cplx w);

    cplx representative() const noexcept { return w_; }

private:
    cplx w_{};
};

/// Point of the thrice-punctured sphere C \ {0, 1}.
class OmegaPoint {
public:
    explicit OmegaPoint(cplx z);  // throws DomainError for 0, 1 or non-finite
    cplx value() const noexcept { return z_; }

private:
    cplx z_;
};

/// Cross-ratio (z1-z3)(z2-z4)/((z2-z3)(z1-z4)); factors containing an infinite point drop out.
OmegaPoint cross_ratio(const ExtendedPoint& z1, const ExtendedPoint& z2,
                       const ExtendedPoint& z3, const ExtendedPoint& z4);

/// min over n of |w1 - w2 + 2*pi*i*n|.
double cylinder_distance(const CylinderElement& w1, const CylinderElement& w2);

/// log(fz / z) as a cylinder element.
CylinderElement log_deviation(cplx z, cplx fz);

struct Sample {
    cplx z;
    cplx fz;
};

/// Largest cylinder distance between log deviations over sample pairs with
/// |z2| <= delta1 |z1|. nullopt when no admissible pair exists.
std::optional<double> cauchy_pair_deficiency(std::span<const Sample> samples, double delta1);

}  // namespace qcconf::geometry
