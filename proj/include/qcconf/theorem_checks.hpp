#pragma once

// Executable forms of the inequalities behind pointwise conformality: the
// cross-ratio distortion bound, the key inequality for log(f(z)/z), the main
// estimate against liminf J, and the three sufficient criteria (TWB, GM, Hoelder).
//
// Criteria are one-sided. A hypothesis that fails says nothing about
// conformality; only an oracle map can say "not conformal".

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qcconf/beltrami_solver.hpp"
#include "qcconf/fields.hpp"
#include "qcconf/integrals.hpp"
#include "qcconf/modular.hpp"

namespace qcconf::checks {

using cplx = std::complex<double>;
using fields::BeltramiField;
using fields::ModelMap;
using fields::Tri;
using geometry::ExtendedPoint;

enum class Outcome { Pass, Fail, Undecided, NotApplicable };
const char* to_string(Outcome o);

struct InequalityReport {
    std::string name;
    Outcome outcome = Outcome::NotApplicable;
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;      // rhs - lhs
    double tolerance = 0.0;  // pass iff lhs <= rhs + tolerance
    std::vector<std::pair<std::string, double>> inputs;
    std::vector<InequalityReport> links;  // intermediate steps, settled independently
    std::string note;

    bool pass() const { return outcome == Outcome::Pass; }
    /// The report and every link passed.
    bool all_pass() const;
};

using MapFn = std::function<cplx(cplx)>;
using Quadruple = std::array<ExtendedPoint, 4>;

/// d_Omega(Cr(z), Cr(f(z))) <= log K-bar_f(z). The map must fix infinity. Also carries the
/// classical consequence lhs <= log K(f) as a link.
InequalityReport check_fundamental_inequality(const MapFn& f, const BeltramiField& mu, const Quadruple& z,
                                              double tol = 1e-9, int search_depth = 8);
InequalityReport check_fundamental_inequality(const ModelMap& map, const Quadruple& z, double tol = 1e-9,
                                              int search_depth = 8);
/// mu must be the field the map was solved from.
InequalityReport check_fundamental_inequality(const solver::ApproxMap& map, const BeltramiField& mu,
                                              const Quadruple& z, double tol = 1e-9, int search_depth = 8);

/// C = C1 (1 + delta1) / (2 pi)
double key_constant(const hyperbolic::LogHolderConstants& consts);

/// |log f(z1)/z1 - log f(z2)/z2|_C <= C J(mu_f; z1, z2) for 0 < |z2| <= delta1 |z1|,
/// with each step of the chain through d_Omega(z2/z1, f(z2)/f(z1)) as a link.
InequalityReport check_key_inequality(const ModelMap& map, cplx z1, cplx z2,
                                      const hyperbolic::LogHolderConstants& consts, double tol = 1e-9,
                                      int search_depth = 8);

struct MainTheoremPoint {
    cplx z;
    double lhs = 0.0;                // |log f(z)/z - log f'(0)|_C
    std::vector<double> z2_moduli;   // |z2| = delta^n |z|, n = 1..samples
    std::vector<double> J;
    double j_liminf = 0.0;           // min over the samples
    InequalityReport bound;          // lhs <= C j_liminf
};

struct MainTheoremReport {
    double C = 0.0;
    double delta = 0.0;
    std::optional<cplx> derivative;  // f'(0) used for the left side
    bool derivative_declared = false;
    std::vector<MainTheoremPoint> points;
    std::vector<double> j_trend;     // J(z, delta z) per scale
    double spearman = 0.0;           // rank correlation of j_trend with log(1/|z|)
    bool j_tends_to_zero = false;
    Tri conformal_oracle = Tri::Unknown;
    bool bounds_pass = false;
    /// Bounds hold and, if the oracle is conformal, J is seen to decrease to 0.
    bool pass = false;
};

/// liminf over z2 -> 0 is replaced by the minimum over z2 = delta1^n z, n = 1..samples.
MainTheoremReport check_main_theorem(const ModelMap& map, const std::vector<double>& scales,
                                     const hyperbolic::LogHolderConstants& consts, int samples = 8,
                                     double tol = 1e-9);

enum class Hypothesis { Holds, Fails, Undecided };
const char* to_string(Hypothesis h);

struct HolderVerdict {
    double beta = 0.0;
    double alpha_max = 0.0;  // beta / (2 + beta)
    std::vector<double> radii;
    std::vector<double> values;
};

struct HolderFit {
    std::vector<double> radii;
    std::vector<double> remainders;  // |f(r) - f'(0) r|
    double slope = 0.0;              // +inf when every remainder is below the noise floor
    double beta = 0.0;
    double alpha_max = 0.0;
    double required = 0.0;           // 1 + alpha_max - margin
    cplx derivative = 0.0;
    bool derivative_declared = false;
    bool applicable = true;          // I(r) finite
    bool pass = false;
};

/// Least-squares slope of log|f(z) - f'(0) z| against log|z| along the positive axis.
HolderFit holder_fit(const ModelMap& map, const std::vector<double>& radii, double margin = 0.02);

struct MeasuredBehaviour {
    cplx derivative = 0.0;
    bool derivative_declared = false;
    double remainder_slope = 0.0;
};

struct ConformalityVerdict {
    Hypothesis twb = Hypothesis::Undecided;
    Hypothesis gm = Hypothesis::Undecided;
    std::optional<HolderVerdict> hoelder;
    std::optional<MeasuredBehaviour> measured;
    integrals::CutoffSeries twb_series;
    integrals::CutoffSeries gm_square;
    integrals::CutoffSeries gm_limit;
    Tri conformal = Tri::Unknown;  // Yes when some criterion holds; criteria never give No
    Tri oracle = Tri::Unknown;     // what a model map declares, when one was given
    std::string note;
};

/// Radii at which I(r) is sampled: 10^-1 down to 10^-5, four per decade.
std::vector<double> default_holder_radii();

ConformalityVerdict classify(const BeltramiField& field, const integrals::CriteriaConfig& cfg);
/// Adds the measured derivative and remainder slope and the oracle's declaration.
ConformalityVerdict classify(const ModelMap& map, const integrals::CriteriaConfig& cfg);

/// Spearman rank correlation with average ranks for ties; 0 when either side is constant.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace qcconf::checks
