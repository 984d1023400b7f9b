#pragma once

// Beltrami coefficients and the closed-form model maps used as oracles.
//
// The oracle family is radial-times-phase, mu(z) = h(|z|) z / conj(z). For
// f(z) = z F(|z|) the Beltrami equation reduces to
//     d log F / d log r = 2h / (1 - h),
// normalised here by F = 1 outside the support of h.

#include <cmath>
#include <complex>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace qcconf::fields {

using cplx = std::complex<double>;
constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Structure { General, RadialPhase, Grid };
enum class Tri { Yes, No, Unknown };

const char* to_string(Structure s);
const char* to_string(Tri t);

struct RadialProfile {
    std::function<cplx(double r)> h;
    double r_lo = 0.0;  // h = 0 for r < r_lo
    double r_hi = kInf;  // h = 0 for r > r_hi
    double esssup = 0.0;
    std::vector<double> breaks;  // radii where h is not smooth, support ends included

    // Analytic continuation in T = log(1/r), valid for Re T >= T_analytic, Im T >= 0.
    std::function<cplx(cplx T)> h_T;
    std::function<cplx(cplx T)> abs2_T;  // continuation of |h|^2
    double T_analytic = kInf;

    struct Piece {
        double a, b;
        cplx k;
    };
    std::vector<Piece> constant_pieces;  // if non-empty, h is exactly these constants and 0 elsewhere

    // declared from closed-form analysis of the profile, never measured
    Tri conformal_at_0 = Tri::Unknown;

    cplx operator()(double r) const;
    bool has_continuation() const { return static_cast<bool>(h_T) && std::isfinite(T_analytic); }
};

struct GridData {
    double x0, x1, y0, y1;
    int nx, ny;
    std::vector<cplx> samples;  // row-major, index j * nx + i at (x0 + i dx, y0 + j dy)
    cplx at(int i, int j) const { return samples[static_cast<std::size_t>(j) * nx + i]; }
};

class BeltramiField {
public:
    BeltramiField();  // mu = 0

    static BeltramiField general(std::function<cplx(cplx)> mu, double esssup, std::string id,
                                 double support_radius = kInf);
    static BeltramiField radial(RadialProfile profile, std::string id);
    static BeltramiField grid(GridData data, std::string id);

    cplx operator()(cplx z) const;
    double esssup() const { return esssup_; }
    Structure structure() const { return structure_; }
    const RadialProfile* radial_profile() const { return profile_.get(); }
    const GridData* grid_data() const { return grid_.get(); }

    /// Circles across which mu is not smooth.
    std::vector<double> radial_breaks() const;
    /// mu vanishes for |z| > support_radius().
    double support_radius() const { return support_radius_; }
    /// mu vanishes for |z| < inner_radius().
    double inner_radius() const;
    bool is_zero() const { return esssup_ == 0.0; }

    /// Identifier of the mathematical field (name and parameters); grids record the field they sample.
    const std::string& id() const { return id_; }
    std::string hash() const;

private:
    Structure structure_ = Structure::General;
    std::function<cplx(cplx)> mu_;
    std::shared_ptr<const RadialProfile> profile_;
    std::shared_ptr<const GridData> grid_;
    double esssup_ = 0.0;
    double support_radius_ = 0.0;
    std::string id_ = "zero";
};

struct ModelMap {
    std::string name;
    std::function<cplx(cplx)> f;
    BeltramiField field;
    std::optional<cplx> derivative_at_0;
    Tri conformal_at_0 = Tri::Unknown;

    cplx operator()(cplx z) const { return f(z); }
    /// K(f) = (1 + ||mu||) / (1 - ||mu||)
    double K() const;
};

using Params = std::map<std::string, double>;

/// Model map for mu = h(|z|) z / conj(z); throws DomainError if |h| >= 1 somewhere.
ModelMap radial_solve(const RadialProfile& profile, std::string name = "radial");

/// zero, affine{k,k_im}, radial_stretch{K}, spiral{c}, annulus_bump{a,b,k,k_im,smooth},
/// gm_oscillating{gamma,amp}, hoelder{c,beta}
ModelMap builtin(const std::string& name, const Params& params = {});
std::vector<std::string> builtin_names();

RadialProfile annulus_profile(double a, double b, cplx k, double smooth = 0.0);
RadialProfile gm_profile(double gamma, double amp);
RadialProfile hoelder_profile(double c, double beta);

struct Wirtinger {
    cplx fz, fzbar;
};
/// Richardson-extrapolated central differences.
Wirtinger wirtinger(const std::function<cplx(cplx)>& f, cplx z, double step);

/// Bilinear interpolation inside the rectangle, 0 outside. Throws DomainError naming
/// the first sample with modulus >= 1.
BeltramiField grid_field(GridData data, std::string id = "grid");
/// Samples a field on an nx x ny node grid over the rectangle; id is inherited.
GridData sample_field(const BeltramiField& field, double x0, double x1, double y0, double y1, int nx, int ny);

// Text matrix file: "QCGRID 1" / "x0 x1 y0 y1 nx ny" / "id <text>" / nx*ny lines "re im".
void write_grid(const GridData& g, const std::string& id, const std::filesystem::path& path);
BeltramiField read_grid(const std::filesystem::path& path);

/// Rows "r re_h im_h" with increasing r, piecewise-linear h, 0 outside the table.
RadialProfile read_radial_table(const std::filesystem::path& path);

}  // namespace qcconf::fields
