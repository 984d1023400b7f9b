#pragma once

// Hyperbolic geometry of the thrice-punctured sphere C \ {0,1}, computed through
// the elliptic modular function lambda: H -> C \ {0,1}.

#include <cstdint>
#include <filesystem>
#include <string>

#include "qcconf/core_geometry.hpp"

namespace qcconf::hyperbolic {

using geometry::cplx;
using geometry::OmegaPoint;

/// Point of the upper half-plane.
class HalfPlanePoint {
public:
    explicit HalfPlanePoint(cplx tau);  // throws DomainError unless Im tau > 0
    cplx value() const noexcept { return tau_; }
    double im() const noexcept { return tau_.imag(); }

private:
    cplx tau_;
};

/// Element of the level-2 congruence group acting by Moebius transformations.
struct DeckTransform {
    std::int64_t a = 1, b = 0, c = 0, d = 1;

    DeckTransform() = default;
    DeckTransform(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d);  // validates

    HalfPlanePoint apply(const HalfPlanePoint& tau) const;
    DeckTransform operator*(const DeckTransform& o) const;
};

OmegaPoint modular_lambda(const HalfPlanePoint& tau);

/// Both lambda(tau) and 1 - lambda(tau), each to full relative precision.
struct LambdaPair {
    cplx lambda;
    cplx one_minus;
};
LambdaPair modular_lambda_pair(const HalfPlanePoint& tau);

/// d lambda / d tau by Richardson-extrapolated central differences.
cplx lambda_derivative(const HalfPlanePoint& tau);

/// Representative of tau modulo the deck group in
/// { -1 < Re tau <= 1, |tau - 1/2| >= 1/2, |tau + 1/2| >= 1/2 }.
HalfPlanePoint reduce_to_fundamental_domain(const HalfPlanePoint& tau);

/// tau in the fundamental domain with modular_lambda(tau) = zeta.
HalfPlanePoint lambda_inverse(const OmegaPoint& zeta);

double d_halfplane(const HalfPlanePoint& t1, const HalfPlanePoint& t2);

struct OmegaDistance {
    double value = 0.0;  // upper bound for the hyperbolic distance, exact when converged
    bool converged = false;
    int depth = 0;
    double previous_depth_value = 0.0;
};

/// Distance on C \ {0,1}: minimum over deck-group words of length <= search_depth.
OmegaDistance d_omega(const OmegaPoint& z1, const OmegaPoint& z2, int search_depth = 8);

/// Density of the complete curvature -1 metric of C \ {0,1}.
double density(const OmegaPoint& zeta);

struct DensityCalibration {
    double C0 = 0.0;
    double delta0 = 0.0;
    int radial_points = 64;
    int angular_points = 64;

    /// Stable identifier of (delta0, C0, grid) for embedding in reports.
    std::string hash() const;
};

/// C0 = 0.99 * min of density(zeta) |zeta| log(1/|zeta|) over a log-radial x angular grid
/// covering delta0^4 <= |zeta| <= delta0.
DensityCalibration calibrate_density(double delta0, int radial_points = 64, int angular_points = 64);

/// Versioned JSON cache document. Timestamp is informational only.
void save_calibration(const DensityCalibration& cal, const std::filesystem::path& path,
                      const std::string& timestamp = "");
DensityCalibration load_calibration(const std::filesystem::path& path);

/// Loads the cache if present and matching delta0/grid, otherwise calibrates and writes it.
DensityCalibration cached_calibration(const std::filesystem::path& path, double delta0,
                                      int radial_points = 64, int angular_points = 64);

struct LogHolderConstants {
    double L = 0.0;
    double nu = 1.0;
    double delta1 = 0.0;
    double C1 = 0.0;
    DensityCalibration calibration;
};

LogHolderConstants log_holder_constants(double L, const DensityCalibration& cal);

struct LogDistanceReport {
    bool applicable = false;
    bool pass = false;
    double lhs = 0.0;       // |log z1 - log z2|_C
    double rhs = 0.0;       // C1 d log(1/|z1|)
    double distance = 0.0;  // d_Omega(z1, z2)
    bool distance_converged = false;
};

LogDistanceReport check_log_vs_distance(const OmegaPoint& z1, const OmegaPoint& z2,
                                        const LogHolderConstants& consts, int search_depth = 8);

}  // namespace qcconf::hyperbolic
