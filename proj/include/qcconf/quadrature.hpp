#pragma once

// Deterministic adaptive Gauss-Kronrod quadrature: 1-D intervals, tensor 2-D cells,
// and a plane integrator built from a log-polar chart plus pole-centred charts.
// All integrands are vector valued so that several integrals sharing evaluations
// are refined together.

#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace qcconf::quad {

using cplx = std::complex<double>;

struct Options {
    double abs_tol = 1e-12;
    double rel_tol = 1e-10;
    int max_cells = 20000;
    // when >= 0, every component is accepted at rel_tol times the larger of its own
    // magnitude and this component's magnitude
    int reference_component = -1;
};

struct VecEstimate {
    std::vector<double> value;
    std::vector<double> err;
    int cells = 0;
    bool converged = true;  // false when the cell budget ran out first
};

using Fn1 = std::function<void(double x, std::span<double> out)>;

/// Integral over [points.front(), points.back()], with the interior points as
/// forced panel boundaries. Endpoints are never evaluated.
VecEstimate integrate_1d(const Fn1& f, std::size_t dim, std::span<const double> points, const Options& opt = {});

/// Integral over [a, inf) with a > 0, through x = a / u^m. Suited to tails decaying
/// at least like x^(-1-1/m).
VecEstimate integrate_tail(const Fn1& f, std::size_t dim, double a, const Options& opt = {}, int m = 8);

struct Estimate {
    double value = 0.0;
    double err = 0.0;
    int cells = 0;
    bool converged = true;
};
struct CEstimate {
    cplx value = 0.0;
    double err = 0.0;
    int cells = 0;
    bool converged = true;
};

Estimate integrate(const std::function<double(double)>& f, std::span<const double> points, const Options& opt = {});
Estimate integrate(const std::function<double(double)>& f, double a, double b, const Options& opt = {});
CEstimate integrate_complex(const std::function<cplx(double)>& f, std::span<const double> points,
                            const Options& opt = {});
CEstimate integrate_complex_tail(const std::function<cplx(double)>& f, double a, const Options& opt = {}, int m = 8);

// ---- 2-D ---------------------------------------------------------------

struct Rect {
    double x0, x1, y0, y1;
    int chart = 0;
};

using Fn2 = std::function<void(int chart, double x, double y, std::span<double> out)>;

/// Adaptive tensor G7/K15 cubature over a union of rectangles.
VecEstimate integrate_2d(const Fn2& f, std::size_t dim, std::span<const Rect> initial, const Options& opt = {});

// ---- plane ---------------------------------------------------------------

struct PlanePole {
    cplx at;
    double alpha = 1.0;  // integrand ~ |z - at|^(-alpha), alpha < 2
};

struct PlaneDomain {
    double r_in = 0.0;  // 0: no inner boundary
    double r_out = std::numeric_limits<double>::infinity();
    // integrand * |z|^2 = O(|z|^decay_in) at 0 and O(|z|^-decay_out) at infinity
    double decay_in = 1.0;
    double decay_out = 1.0;
    std::vector<PlanePole> poles;       // nonzero locations; 0 is covered by decay_in
    std::vector<double> radial_breaks;  // circles across which the integrand is not smooth
    std::vector<double> scales;         // further radii where the integrand has structure
};

using PlaneFn = std::function<void(cplx z, std::span<double> out)>;

/// Integral over {r_in < |z| < r_out} of f dx dy.
VecEstimate integrate_plane(const PlaneFn& f, std::size_t dim, const PlaneDomain& dom, const Options& opt = {});

/// C-infinity step: 1 on s <= 1/2, 0 on s >= 1.
double bump(double s);

}  // namespace qcconf::quad
