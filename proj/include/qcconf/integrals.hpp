#pragma once

// The quadratic differential phi_{z1,z2}(z) = z1 / (z (z - z1)(z - z2)) and the
// integrals built from it and from mu: J*, J, K-bar, the radial criteria
// integrals (TWB, GM square, GM limit, I(r)), I_{p,s} and the reference
// integrals H_1..H_4 behind the constant C'.
//
// Radial-phase fields mu = h(|z|) z/conj(z) reduce every criterion integral to a
// 1-D integral in T = log(1/|z|); other fields go through the plane integrator.

#include <string>
#include <vector>

#include "qcconf/core_geometry.hpp"
#include "qcconf/fields.hpp"

namespace qcconf::integrals {

using cplx = std::complex<double>;
using fields::BeltramiField;

class PoleTriple {
public:
    PoleTriple(cplx z1, cplx z2);  // requires 0 < |z2| < |z1|
    cplx z1() const { return z1_; }
    cplx z2() const { return z2_; }

private:
    cplx z1_, z2_;
};

struct AnnulusSpec {
    double r, R;
    AnnulusSpec(double r, double R);  // requires 0 < r < R
};

struct IntegralEstimate {
    cplx value = 0.0;  // real integrals have zero imaginary part
    double err = 0.0;
    int cells = 0;
    bool diverged = false;
    double growth_rate = 0.0;  // increase per unit of log(1/eps) when diverged
    bool converged = true;     // quadrature met its tolerance
    double real() const { return value.real(); }
};

struct CriteriaConfig {
    double p = 4.0;
    double s = 2.0;
    double rho = 0.5;
    // inner cutoffs as T = log(1/eps), increasing
    std::vector<double> cutoffs = {1, 3, 10, 30, 100, 300, 1e3, 3e3, 1e4, 3e4, 1e5};
    double tol = 1e-8;

    void validate() const;
    double q() const { return p / (p - 1.0); }
};

cplx phi(cplx z, const PoleTriple& poles);
/// phi + c/z^2 - c (psi1 + psi2) with c = z1/(z1+z2); identically zero.
cplx decomposition_residual(cplx z, const PoleTriple& poles);
/// Trapezoid rule for the contour integral of z phi(z) dz over |z| = r.
cplx residue_circle_integral(double r, const PoleTriple& poles);

IntegralEstimate j_star(const PoleTriple& poles, double tol = 1e-9);

struct JResult {
    IntegralEstimate total;
    IntegralEstimate jstar;
    cplx B = 0.0;     // int mu phi / (1 - |mu|^2)
    double E = 0.0;   // int |mu|^2 |phi| / (1 - |mu|^2)
    double term_mu = 0.0;   // 2 |B|
    double term_abs = 0.0;  // 2 E
    double kf_integral = 0.0;  // int (K_f - 1) |phi|
};
JResult j_integral(const BeltramiField& mu, const PoleTriple& poles, double tol = 1e-9);

struct KbarResult {
    double value = 1.0;
    double err = 0.0;
    double A = 0.0;  // int (1+|mu|^2)/(1-|mu|^2) |phi|
    cplx B = 0.0;    // int mu phi / (1-|mu|^2), phi normalised by |phi|
    double D = 0.0;  // int |phi|
    int cells = 0;
};
/// Supremum over theta is (A + 2|B|) / D in closed form.
KbarResult kbar(const BeltramiField& mu, const geometry::ExtendedPoint& z1, const geometry::ExtendedPoint& z2,
                const geometry::ExtendedPoint& z3, const geometry::ExtendedPoint& z4, double tol = 1e-9);

struct CutoffSeries {
    std::string route;             // "radial" or "planar"
    std::vector<double> cutoffs;   // T = log(1/eps) used
    std::vector<cplx> partials;
    std::vector<double> errs;
    std::vector<double> oscillation;  // diameter of the partials between consecutive cutoffs
    std::vector<double> decade_factor;  // oscillation shrink factor per decade of T
    std::vector<cplx> tapered;        // smooth-cutoff partials (GM limit only)
    std::vector<double> tapered_factor;
    bool converged = false;
    bool diverged = false;
    double growth_rate = 0.0;
    IntegralEstimate estimate;  // best value, or growth rate when diverged
};

CutoffSeries twb_integral(const BeltramiField& mu, double r, const std::vector<double>& cutoffs, double tol = 1e-10);
CutoffSeries gm_square_integral(const BeltramiField& mu, const std::vector<double>& cutoffs, double tol = 1e-10);
CutoffSeries gm_limit_integral(const BeltramiField& mu, const std::vector<double>& cutoffs, double tol = 1e-10);

struct HolderResult {
    bool applicable = true;
    std::vector<double> radii;
    std::vector<double> values;
    double beta = 0.0;  // +inf when I vanishes near 0
    double alpha_max = 0.0;
};
HolderResult i_holder(const BeltramiField& mu, const std::vector<double>& radii, double tol = 1e-10);

IntegralEstimate i_ps(const BeltramiField& mu, double r, const CriteriaConfig& cfg);

struct BoundReport {
    bool applicable = true;
    bool pass = false;
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;
    double tolerance = 0.0;
    std::vector<std::pair<std::string, double>> terms;
};

/// I_{p,s}(mu; r) <= C2 int_{|z|<r'} |mu|^2/(1-|mu|^2) dxdy/|z|^2 + (C3/s)(r/r')^s
BoundReport i_ps_bound_check(const BeltramiField& mu, double r, double rprime, const CriteriaConfig& cfg);

struct EstimateOnJReport {
    bool applicable = true;
    BoundReport first;       // |int mu phi/(1-|mu|^2)| bound
    BoundReport second;      // int |mu|^2|phi|/(1-|mu|^2) bound
    BoundReport decomposition;  // triangle inequality over the three regions
    std::vector<BoundReport> hoelder;  // region terms against I_{p,s}(D)^{1/p} H_j^{1/q}
    double c_prime = 0.0;
};
EstimateOnJReport estimate_on_j_check(const BeltramiField& mu, const PoleTriple& poles, const CriteriaConfig& cfg);

/// H_j(rho) for j = 1..4, with the prefactors of the corresponding bounds.
IntegralEstimate h_reference_estimate(int j, const CriteriaConfig& cfg, double tol = 1e-9);
double h_reference(int j, const CriteriaConfig& cfg);

/// C' = H1^{1/q} + H2^{1/q} + (H3^{1/q} + H4^{1/q}) / (1 - rho^2)
double c_prime(const CriteriaConfig& cfg);

/// C2 and C3 of the I_{p,s} estimate from K = (1+k)/(1-k).
double c2_constant(double esssup, double p);
double c3_constant(double esssup, double p);

}  // namespace qcconf::integrals
