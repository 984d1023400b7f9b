#include "qcconf/beltrami_solver.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include "qcconf/core_geometry.hpp"
#include "qcconf/errors.hpp"

namespace qcconf::solver {

namespace {

constexpr double kPi = std::numbers::pi;

// the FFTW planner is not re-entrant; execution on distinct arrays is
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

class Fft2 {
public:
    explicit Fft2(int n) : n_(n) {
        buf_ = fftw_alloc_complex(static_cast<std::size_t>(n) * n);
        std::lock_guard<std::mutex> lock(planner_mutex());
        fwd_ = fftw_plan_dft_2d(n, n, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
        inv_ = fftw_plan_dft_2d(n, n, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    ~Fft2() {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(inv_);
        fftw_free(buf_);
    }
    Fft2(const Fft2&) = delete;
    Fft2& operator=(const Fft2&) = delete;

    // out = IFFT(mult * FFT(in))
    void apply(const std::vector<cplx>& in, const std::vector<cplx>& mult, std::vector<cplx>& out) {
        const std::size_t total = in.size();
        auto* b = reinterpret_cast<cplx*>(buf_);
        std::copy(in.begin(), in.end(), b);
        fftw_execute(fwd_);
        const double scale = 1.0 / static_cast<double>(total);
        for (std::size_t k = 0; k < total; ++k) b[k] *= mult[k] * scale;
        fftw_execute(inv_);
        out.assign(b, b + total);
    }

private:
    int n_;
    fftw_complex* buf_;
    fftw_plan fwd_, inv_;
};

double rms(const std::vector<cplx>& v) {
    double s = 0.0;
    for (cplx x : v) s += std::norm(x);
    return std::sqrt(s / static_cast<double>(v.size()));
}

// half-width of a square centred at 0 outside which the field vanishes
double support_extent(const fields::BeltramiField& field) {
    if (const fields::GridData* g = field.grid_data())
        return std::max({std::abs(g->x0), std::abs(g->x1), std::abs(g->y0), std::abs(g->y1)});
    return field.support_radius();
}

// Mean of mu over the grid cell centred at w, by the s x s midpoint rule. Keeps the
// location of jumps in mu accurate to O(dx^2) in the mean instead of O(dx).
cplx cell_average(const fields::BeltramiField& field, cplx w, double dx, int s) {
    if (s <= 1) return field(w);
    cplx acc = 0.0;
    for (int b = 0; b < s; ++b)
        for (int a = 0; a < s; ++a)
            acc += field(w + dx * cplx((a + 0.5) / s - 0.5, (b + 0.5) / s - 0.5));
    return acc / static_cast<double>(s * s);
}

}  // namespace

void SolverConfig::validate() const {
    if (grid_n < 64 || (grid_n & (grid_n - 1)) != 0) throw DomainError("solver: grid_n must be a power of two >= 64");
    if (!(box_half_width > 0.0) || !std::isfinite(box_half_width)) throw DomainError("solver: box_half_width must be positive");
    if (max_iter < 1) throw DomainError("solver: max_iter must be positive");
    if (!(resid_tol > 0.0)) throw DomainError("solver: resid_tol must be positive");
    if (subsamples < 1) throw DomainError("solver: subsamples must be positive");
}

ApproxMap solve(const fields::BeltramiField& field, const SolverConfig& cfg) {
    cfg.validate();
    if (field.esssup() > 0.9) throw DomainError("solver: ess sup |mu| must be <= 0.9");
    const double L = cfg.box_half_width;
    const double extent = support_extent(field);
    if (!field.is_zero() && !(extent < 0.5 * L))
        throw DomainError("solver: support of mu must lie strictly inside the inner half-box");

    const int n = cfg.grid_n;
    const std::size_t total = static_cast<std::size_t>(n) * n;
    const double dx = 2.0 * L / n;
    ApproxMap out;
    out.n_ = n;
    out.L_ = L;
    out.hash_ = field.hash();
    out.id_ = field.id();

    std::vector<cplx> z(total), mu(total);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const cplx w(-L + dx * i, -L + dx * j);
            z[static_cast<std::size_t>(j) * n + i] = w;
            mu[static_cast<std::size_t>(j) * n + i] = field.is_zero() ? cplx(0.0) : cell_average(field, w, dx, cfg.subsamples);
        }

    // multipliers; wavenumbers 2 pi m / (2L) with m signed
    std::vector<cplx> beurling(total), cauchy(total);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const int mx = i < n / 2 ? i : i - n, my = j < n / 2 ? j : j - n;
            const cplx kappa(kPi * mx / L, kPi * my / L);
            const std::size_t k = static_cast<std::size_t>(j) * n + i;
            // the Nyquist modes have no sign; dropping them keeps the discrete operators rotation equivariant
            if ((mx == 0 && my == 0) || mx == -n / 2 || my == -n / 2) {
                beurling[k] = 0.0;
                cauchy[k] = 0.0;
            } else {
                beurling[k] = std::conj(kappa) / kappa;
                cauchy[k] = cplx(0.0, -2.0) / kappa;
            }
        }

    Fft2 fft(n);
    std::vector<cplx> h = mu, sh, next(total);
    out.converged_ = field.is_zero();
    if (!field.is_zero()) {
        for (int it = 1; it <= cfg.max_iter; ++it) {
            fft.apply(h, beurling, sh);
            for (std::size_t k = 0; k < total; ++k) next[k] = mu[k] * (1.0 + sh[k]);
            double d = 0.0;
            for (std::size_t k = 0; k < total; ++k) d += std::norm(next[k] - h[k]);
            d = std::sqrt(d / static_cast<double>(total));
            h.swap(next);
            out.history_.push_back(d);
            out.iterations_ = it;
            out.increment_ = d;
            if (d < cfg.resid_tol) {
                out.converged_ = true;
                break;
            }
            // the step must contract until it reaches rounding level
            if (out.history_.size() >= 4 && d > 1e-13 * (1.0 + rms(h))) {
                const double prev = out.history_[out.history_.size() - 2];
                if (d >= prev) throw ConvergenceError("solver: Neumann iteration is not contracting", d / prev);
            }
        }
    }

    std::vector<cplx> ch;
    fft.apply(h, cauchy, ch);
    out.f_.resize(total);
    for (std::size_t k = 0; k < total; ++k) out.f_[k] = z[k] + ch[k];
    const cplx origin = out.f_[static_cast<std::size_t>(n / 2) * n + n / 2];
    for (auto& v : out.f_) v -= origin;

    // centred-difference residual over the nodes where mu is nonzero
    double acc = 0.0;
    std::size_t count = 0;
    for (int j = 1; j + 1 < n; ++j)
        for (int i = 1; i + 1 < n; ++i) {
            const std::size_t k = static_cast<std::size_t>(j) * n + i;
            if (mu[k] == 0.0) continue;
            const cplx fx = (out.f_[k + 1] - out.f_[k - 1]) / (2.0 * dx);
            const cplx fy = (out.f_[k + n] - out.f_[k - n]) / (2.0 * dx);
            const cplx fz = 0.5 * (fx - cplx(0.0, 1.0) * fy);
            const cplx fzb = 0.5 * (fx + cplx(0.0, 1.0) * fy);
            acc += std::norm(fzb - mu[k] * fz);
            ++count;
        }
    out.residual_ = count ? std::sqrt(acc / static_cast<double>(count)) : 0.0;
    return out;
}

cplx ApproxMap::operator()(cplx z) const {
    const double dx = spacing();
    const double u = (z.real() + L_) / dx, v = (z.imag() + L_) / dx;
    if (!(u >= 0.0 && v >= 0.0 && u <= n_ - 1 && v <= n_ - 1)) throw DomainError("ApproxMap: point outside the grid");
    const int i = std::min(static_cast<int>(u), n_ - 2), j = std::min(static_cast<int>(v), n_ - 2);
    const double a = u - i, b = v - j;
    auto corr = [&](int ii, int jj) { return at(ii, jj) - cplx(node(ii), node(jj)); };
    const cplx c = (1 - a) * (1 - b) * corr(i, j) + a * (1 - b) * corr(i + 1, j) + (1 - a) * b * corr(i, j + 1) +
                   a * b * corr(i + 1, j + 1);
    return z + c;
}

ValidationReport validate(const ApproxMap& approx, const fields::ModelMap& oracle, double region) {
    if (region < 0.0) region = 0.5 * approx.half_width();
    ValidationReport rep;
    rep.field_mismatch = approx.field_hash() != oracle.field.hash();
    double sum = 0.0;
    for (int j = 0; j < approx.n(); ++j)
        for (int i = 0; i < approx.n(); ++i) {
            const cplx z(approx.node(i), approx.node(j));
            if (std::abs(z.real()) > region || std::abs(z.imag()) > region) continue;
            const cplx fa = approx.at(i, j), fo = oracle(z);
            const double e = std::abs(fa - fo);
            rep.sup_error = std::max(rep.sup_error, e);
            sum += e;
            ++rep.nodes;
            if (z != 0.0 && fa != 0.0 && fo != 0.0)
                rep.sup_log_deviation = std::max(rep.sup_log_deviation,
                                                 geometry::cylinder_distance(geometry::log_deviation(z, fa),
                                                                             geometry::log_deviation(z, fo)));
        }
    rep.mean_error = rep.nodes ? sum / rep.nodes : 0.0;
    return rep;
}

void write_map(const ApproxMap& m, const std::filesystem::path& path) {
    fields::GridData g;
    g.x0 = g.y0 = m.node(0);
    g.x1 = g.y1 = m.node(m.n() - 1);
    g.nx = g.ny = m.n();
    g.samples = m.values();
    fields::write_grid(g, m.field_id() + ";solved", path);
}

}  // namespace qcconf::solver
