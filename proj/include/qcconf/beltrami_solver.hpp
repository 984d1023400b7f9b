#pragma once

// Periodic spectral solver for f_zbar = mu f_z with compactly supported mu.
//
// Writes f = z + C h, where C is the Cauchy transform (C h)_zbar = h, and solves
// h = mu + mu S h by Neumann iteration; S is the Beurling transform with Fourier
// multiplier conj(xi)/xi. The periodic images of the support alias into the
// result, so mu must live in the inner half of the box and comparisons are made
// there.

#include <complex>
#include <filesystem>
#include <string>
#include <vector>

#include "qcconf/fields.hpp"

namespace qcconf::solver {

using cplx = std::complex<double>;

struct SolverConfig {
    int grid_n = 256;              // power of two, >= 64
    double box_half_width = 2.0;   // grid covers [-L, L)^2
    int max_iter = 200;
    double resid_tol = 1e-10;      // stop once the RMS change of h falls below this
    int subsamples = 1;            // >1: mu averaged over each cell on a subsamples^2 midpoint grid

    void validate() const;
};

class ApproxMap {
public:
    int n() const { return n_; }
    double half_width() const { return L_; }
    double spacing() const { return 2.0 * L_ / n_; }
    double node(int i) const { return -L_ + spacing() * i; }
    /// f at node (i, j), i along x.
    cplx at(int i, int j) const { return f_[static_cast<std::size_t>(j) * n_ + i]; }
    /// Bilinear interpolation of f - z; exact for affine maps.
    cplx operator()(cplx z) const;
    int interpolation_order() const { return 1; }

    double residual() const { return residual_; }      // RMS of f_zbar - mu f_z over the support, centred differences
    double increment() const { return increment_; }    // last RMS change of h
    int iterations() const { return iterations_; }
    bool converged() const { return converged_; }
    const std::vector<double>& history() const { return history_; }  // RMS change per iteration
    const std::string& field_hash() const { return hash_; }
    const std::string& field_id() const { return id_; }
    const std::vector<cplx>& values() const { return f_; }

private:
    friend ApproxMap solve(const fields::BeltramiField&, const SolverConfig&);
    int n_ = 0;
    double L_ = 0.0;
    std::vector<cplx> f_;
    double residual_ = 0.0, increment_ = 0.0;
    int iterations_ = 0;
    bool converged_ = false;
    std::vector<double> history_;
    std::string hash_, id_;
};

/// Requires ess sup |mu| <= 0.9 and mu supported inside the inner half-box [-L/2, L/2]^2.
/// Throws ConvergenceError when an iteration step fails to contract.
ApproxMap solve(const fields::BeltramiField& field, const SolverConfig& cfg);

struct ValidationReport {
    double sup_error = 0.0;
    double mean_error = 0.0;
    double sup_log_deviation = 0.0;  // cylinder distance between log(f/z) of the two maps
    int nodes = 0;
    bool field_mismatch = false;
};

/// Compares at the grid nodes with |x|, |y| <= region (default: inner half-box).
ValidationReport validate(const ApproxMap& approx, const fields::ModelMap& oracle, double region = -1.0);

/// Same text matrix format as grid fields, with f values in place of mu.
void write_map(const ApproxMap& m, const std::filesystem::path& path);

}  // namespace qcconf::solver
