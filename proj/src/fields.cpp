#include "qcconf/fields.hpp"

#include <algorithm>
#include <charconv>
#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "qcconf/errors.hpp"
#include "qcconf/quadrature.hpp"

namespace qcconf::fields {

namespace {

const cplx I(0.0, 1.0);

// shortest text that reads back to the same double
std::string fmt(double x) {
    char buf[40];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

double param(const Params& p, const std::string& key, double fallback) {
    const auto it = p.find(key);
    return it == p.end() ? fallback : it->second;
}

void check_known(const std::string& name, const Params& p, std::initializer_list<const char*> allowed) {
    for (const auto& [k, v] : p) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || k == a;
        if (!ok) throw DomainError("builtin " + name + ": unknown parameter '" + k + "'");
        if (!std::isfinite(v)) throw DomainError("builtin " + name + ": parameter '" + k + "' is not finite");
    }
}

// smooth ramp 0 -> 1 on [0, 1]
double ramp(double x) { return 1.0 - quad::bump(0.5 + 0.5 * x); }

// log F for the radial ansatz, see the header comment
class RadialLog {
public:
    explicit RadialLog(RadialProfile p) : p_(std::move(p)) {
        T_hi_ = -std::log(p_.r_hi);
        T_lo_ = p_.r_lo > 0.0 ? -std::log(p_.r_lo) : kInf;
        T_cut_ = T_hi_;
        for (double b : p_.breaks)
            if (b > 0.0 && b <= p_.r_hi && b >= p_.r_lo) T_cut_ = std::max(T_cut_, -std::log(b));
        if (p_.has_continuation()) T_cut_ = std::max(T_cut_, p_.T_analytic);
        for (double b : p_.breaks)
            if (b > 0.0) Tbreaks_.push_back(-std::log(b));
        std::sort(Tbreaks_.begin(), Tbreaks_.end());

        if (p_.r_lo > 0.0) {
            anchored_ = true;
            log_f0_ = -direct(T_hi_, T_lo_);
        } else if (p_.conformal_at_0 == Tri::Yes) {
            anchored_ = true;
            log_f0_ = -(direct(T_hi_, T_cut_) + tail(T_cut_));
        }
    }

    bool anchored() const { return anchored_; }
    cplx log_f0() const { return log_f0_; }

    cplx operator()(double r) const {
        if (r >= p_.r_hi) return 0.0;
        const double T = -std::log(r);
        if (anchored_ && T >= T_lo_) return log_f0_;
        if (anchored_ && T > T_cut_) return log_f0_ + tail(T);
        return -direct(T_hi_, T);
    }

private:
    cplx D(double T) const {
        const cplx h = p_(std::exp(-T));
        return 2.0 * h / (1.0 - h);
    }

    // int_{T0}^{T1} D dT
    cplx direct(double T0, double T1) const {
        if (!(T1 > T0)) return 0.0;
        if (!p_.constant_pieces.empty()) {
            cplx s = 0.0;
            for (const auto& pc : p_.constant_pieces) {
                const double a = std::max(T0, -std::log(pc.b)), b = std::min(T1, pc.a > 0 ? -std::log(pc.a) : kInf);
                if (b > a) s += 2.0 * pc.k / (1.0 - pc.k) * (b - a);
            }
            return s;
        }
        std::vector<double> pts = {T0};
        for (double t : Tbreaks_)
            if (t > T0 && t < T1) pts.push_back(t);
        pts.push_back(T1);
        // panels of width <= 4 keep oscillatory profiles resolved
        std::vector<double> fine;
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
            const int n = std::max(1, static_cast<int>(std::ceil((pts[i + 1] - pts[i]) / 4.0)));
            for (int j = 0; j < n; ++j) fine.push_back(pts[i] + (pts[i + 1] - pts[i]) * j / n);
        }
        fine.push_back(T1);
        return quad::integrate_complex([this](double T) { return D(T); }, fine, {1e-15, 1e-13, 20000}).value;
    }

    // int_{T0}^inf D dT for T0 >= T_cut
    cplx tail(double T0) const {
        if (p_.has_continuation()) {
            // rotate the contour to T0 + i y; the continuation decays like e^{-y}
            auto g = [this, T0](double y) {
                const cplx h = p_.h_T(cplx(T0, y));
                return I * 2.0 * h / (1.0 - h);
            };
            const std::array<double, 8> pts = {0, 1, 2, 4, 8, 16, 32, 48};
            return quad::integrate_complex(g, pts, {1e-16, 1e-13, 20000}).value;
        }
        // shift so the power map starts at 1
        auto g = [this, T0](double x) { return D(T0 + x - 1.0); };
        return quad::integrate_complex_tail(g, 1.0, {1e-16, 1e-13, 20000}).value;
    }

    RadialProfile p_;
    double T_hi_, T_lo_, T_cut_;
    std::vector<double> Tbreaks_;
    bool anchored_ = false;
    cplx log_f0_ = 0.0;
};

void validate_profile(const RadialProfile& p) {
    if (!p.h) throw DomainError("radial profile: missing h");
    if (!(p.r_lo >= 0.0 && p.r_hi > p.r_lo)) throw DomainError("radial profile: empty support");
    if (!(p.esssup >= 0.0 && p.esssup < 1.0)) throw DomainError("radial profile: esssup must lie in [0,1)");
    // sample log-uniformly across the support and check |h| <= esssup
    const double lo = p.r_lo > 0.0 ? p.r_lo : (std::isfinite(p.r_hi) ? p.r_hi * 1e-12 : 1e-12);
    const double hi = std::isfinite(p.r_hi) ? p.r_hi : std::max(1e6, lo * 1e12);
    for (int i = 0; i <= 400; ++i) {
        const double r = lo * std::pow(hi / lo, i / 400.0);
        if (std::abs(p(r)) >= 1.0) throw DomainError("radial profile: |h| >= 1 at r = " + fmt(r));
        if (std::abs(p(r)) > p.esssup * (1.0 + 1e-12) + 1e-15)
            throw DomainError("radial profile: |h| exceeds declared esssup at r = " + fmt(r));
    }
}

}  // namespace

const char* to_string(Structure s) {
    switch (s) {
        case Structure::General: return "general";
        case Structure::RadialPhase: return "radial-phase";
        case Structure::Grid: return "grid";
    }
    return "general";
}

const char* to_string(Tri t) {
    switch (t) {
        case Tri::Yes: return "yes";
        case Tri::No: return "no";
        case Tri::Unknown: return "unknown";
    }
    return "unknown";
}

cplx RadialProfile::operator()(double r) const {
    if (r < r_lo || r > r_hi) return 0.0;
    return h(r);
}

BeltramiField::BeltramiField() : mu_([](cplx) { return cplx(0.0); }) {}

BeltramiField BeltramiField::general(std::function<cplx(cplx)> mu, double esssup, std::string id,
                                     double support_radius) {
    if (!(esssup >= 0.0 && esssup < 1.0)) throw DomainError("BeltramiField: esssup must lie in [0,1)");
    BeltramiField f;
    f.structure_ = Structure::General;
    f.mu_ = std::move(mu);
    f.esssup_ = esssup;
    f.support_radius_ = esssup == 0.0 ? 0.0 : support_radius;
    f.id_ = std::move(id);
    return f;
}

BeltramiField BeltramiField::radial(RadialProfile profile, std::string id) {
    validate_profile(profile);
    BeltramiField f;
    f.structure_ = Structure::RadialPhase;
    f.esssup_ = profile.esssup;
    f.support_radius_ = profile.r_hi;
    f.profile_ = std::make_shared<const RadialProfile>(std::move(profile));
    f.id_ = std::move(id);
    return f;
}

BeltramiField BeltramiField::grid(GridData data, std::string id) {
    if (data.nx < 2 || data.ny < 2) throw DomainError("grid_field: need at least 2x2 samples");
    if (!(data.x1 > data.x0 && data.y1 > data.y0)) throw DomainError("grid_field: empty rectangle");
    if (data.samples.size() != static_cast<std::size_t>(data.nx) * data.ny)
        throw DomainError("grid_field: sample count does not match dimensions");
    double sup = 0.0;
    for (int j = 0; j < data.ny; ++j)
        for (int i = 0; i < data.nx; ++i) {
            const double a = std::abs(data.at(i, j));
            if (!(a < 1.0))
                throw DomainError("grid_field: sample (" + std::to_string(i) + "," + std::to_string(j) +
                                  ") has modulus >= 1");
            sup = std::max(sup, a);
        }
    BeltramiField f;
    f.structure_ = Structure::Grid;
    f.esssup_ = sup;
    f.support_radius_ = sup == 0.0 ? 0.0
                                   : std::max({std::hypot(data.x0, data.y0), std::hypot(data.x1, data.y0),
                                               std::hypot(data.x0, data.y1), std::hypot(data.x1, data.y1)});
    f.grid_ = std::make_shared<const GridData>(std::move(data));
    f.id_ = std::move(id);
    return f;
}

cplx BeltramiField::operator()(cplx z) const {
    switch (structure_) {
        case Structure::RadialPhase: {
            const double r = std::abs(z);
            if (r == 0.0) return 0.0;
            const cplx u = z / r;
            return (*profile_)(r) * u * u;
        }
        case Structure::Grid: {
            const GridData& g = *grid_;
            if (z.real() < g.x0 || z.real() > g.x1 || z.imag() < g.y0 || z.imag() > g.y1) return 0.0;
            const double u = (z.real() - g.x0) / (g.x1 - g.x0) * (g.nx - 1);
            const double v = (z.imag() - g.y0) / (g.y1 - g.y0) * (g.ny - 1);
            const int i = std::clamp(static_cast<int>(std::floor(u)), 0, g.nx - 2);
            const int j = std::clamp(static_cast<int>(std::floor(v)), 0, g.ny - 2);
            const double s = u - i, t = v - j;
            return (1 - s) * (1 - t) * g.at(i, j) + s * (1 - t) * g.at(i + 1, j) + (1 - s) * t * g.at(i, j + 1) +
                   s * t * g.at(i + 1, j + 1);
        }
        case Structure::General: break;
    }
    return mu_(z);
}

std::vector<double> BeltramiField::radial_breaks() const {
    if (structure_ == Structure::RadialPhase) return profile_->breaks;
    return {};
}

double BeltramiField::inner_radius() const {
    if (structure_ == Structure::RadialPhase) return profile_->r_lo;
    if (structure_ == Structure::Grid) {
        const GridData& g = *grid_;
        const double dx = std::max({g.x0, 0.0, -g.x1}), dy = std::max({g.y0, 0.0, -g.y1});
        return std::hypot(dx, dy);
    }
    return 0.0;
}

std::string BeltramiField::hash() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(id_)));
    return buf;
}

double ModelMap::K() const {
    const double k = field.esssup();
    return (1.0 + k) / (1.0 - k);
}

ModelMap radial_solve(const RadialProfile& profile, std::string name) {
    if (!std::isfinite(profile.r_hi)) throw DomainError("radial_solve: profile support must be bounded");
    BeltramiField field = BeltramiField::radial(profile, name);
    auto logF = std::make_shared<const RadialLog>(profile);
    ModelMap m;
    m.name = std::move(name);
    m.field = field;
    m.f = [logF](cplx z) -> cplx {
        const double r = std::abs(z);
        if (r == 0.0) return 0.0;
        return z * std::exp((*logF)(r));
    };
    if (logF->anchored()) {
        m.derivative_at_0 = std::exp(logF->log_f0());
        m.conformal_at_0 = Tri::Yes;
    } else {
        m.conformal_at_0 = profile.conformal_at_0;
    }
    return m;
}

RadialProfile annulus_profile(double a, double b, cplx k, double smooth) {
    if (!(a > 0.0 && b > a)) throw DomainError("annulus_bump: need 0 < a < b");
    if (!(std::abs(k) < 1.0)) throw DomainError("annulus_bump: need |k| < 1");
    if (!(smooth >= 0.0 && 2.0 * smooth < std::log(b / a))) throw DomainError("annulus_bump: smoothing too wide");
    RadialProfile p;
    p.r_lo = a;
    p.r_hi = b;
    p.esssup = std::abs(k);
    p.conformal_at_0 = Tri::Yes;
    if (smooth == 0.0) {
        p.h = [k](double) { return k; };
        p.breaks = {a, b};
        p.constant_pieces = {{a, b, k}};
    } else {
        const double la = std::log(a), lb = std::log(b);
        p.h = [=](double r) {
            const double t = std::log(r);
            return k * ramp(std::clamp((t - la) / smooth, 0.0, 1.0)) * ramp(std::clamp((lb - t) / smooth, 0.0, 1.0));
        };
        p.breaks = {a, a * std::exp(smooth), b * std::exp(-smooth), b};
    }
    return p;
}

RadialProfile gm_profile(double gamma, double amp) {
    if (!(gamma > 0.0)) throw DomainError("gm_oscillating: need gamma > 0");
    if (!(amp > 0.0 && amp < 1.0)) throw DomainError("gm_oscillating: need 0 < amp < 1");
    RadialProfile p;
    const double r_hi = std::exp(-1.0);
    p.r_lo = 0.0;
    p.r_hi = r_hi;
    p.esssup = amp;  // |h| = amp T^-gamma is largest at T = 1
    p.breaks = {r_hi};
    p.h = [=](double r) {
        const double T = -std::log(r);
        return amp * std::pow(T, -gamma) * std::exp(cplx(0.0, T));
    };
    p.h_T = [=](cplx T) { return amp * std::pow(T, -gamma) * std::exp(I * T); };
    p.abs2_T = [=](cplx T) { return amp * amp * std::pow(T, -2.0 * gamma); };
    p.T_analytic = 1.0;
    // int 2h/(1-h) dT = sum_n int 2 h^n dT, each term a convergent oscillatory integral
    p.conformal_at_0 = Tri::Yes;
    return p;
}

RadialProfile hoelder_profile(double c, double beta) {
    if (!(beta > 0.0)) throw DomainError("hoelder: need beta > 0");
    if (!(std::abs(c) < 1.0)) throw DomainError("hoelder: need |c| < 1");
    RadialProfile p;
    p.r_lo = 0.0;
    p.r_hi = 1.0;
    p.esssup = std::abs(c);
    p.breaks = {1.0};
    p.h = [=](double r) { return cplx(c * std::pow(r, beta)); };
    p.conformal_at_0 = Tri::Yes;  // int |h| ds/s < inf
    return p;
}

std::vector<std::string> builtin_names() {
    return {"zero", "affine", "radial_stretch", "spiral", "annulus_bump", "gm_oscillating", "hoelder"};
}

ModelMap builtin(const std::string& name, const Params& params) {
    auto id_of = [&] {
        std::string s = name;
        for (const auto& [k, v] : params) s += ";" + k + "=" + fmt(v);
        return s;
    };
    if (name == "zero") {
        check_known(name, params, {});
        ModelMap m;
        m.name = "zero";
        m.f = [](cplx z) { return z; };
        m.derivative_at_0 = 1.0;
        m.conformal_at_0 = Tri::Yes;
        return m;
    }
    if (name == "affine") {
        check_known(name, params, {"k", "k_im"});
        const cplx k(param(params, "k", 0.5), param(params, "k_im", 0.0));
        if (!(std::abs(k) < 1.0)) throw DomainError("affine: need |k| < 1");
        ModelMap m;
        m.name = name;
        m.f = [k](cplx z) { return z + k * std::conj(z); };
        m.field = BeltramiField::general([k](cplx) { return k; }, std::abs(k), id_of());
        if (k == 0.0) {
            m.derivative_at_0 = 1.0;
            m.conformal_at_0 = Tri::Yes;
        } else {
            m.conformal_at_0 = Tri::No;
        }
        return m;
    }
    if (name == "radial_stretch" || name == "spiral") {
        cplx D;  // d log F / d log r, constant
        if (name == "radial_stretch") {
            check_known(name, params, {"K"});
            const double K = param(params, "K", 2.0);
            if (!(K > 0.0)) throw DomainError("radial_stretch: need K > 0");
            D = K - 1.0;
        } else {
            check_known(name, params, {"c"});
            D = cplx(0.0, param(params, "c", 1.0));
        }
        const cplx k = D / (2.0 + D);
        RadialProfile p;
        p.r_lo = 0.0;
        p.r_hi = kInf;
        p.esssup = std::abs(k);
        p.h = [k](double) { return k; };
        p.h_T = [k](cplx) { return k; };
        p.abs2_T = [k](cplx) { return cplx(std::norm(k)); };
        p.T_analytic = -kInf;
        p.constant_pieces = {{0.0, kInf, k}};
        ModelMap m;
        m.name = name;
        m.field = BeltramiField::radial(p, id_of());
        m.f = [D](cplx z) -> cplx {
            const double r = std::abs(z);
            if (r == 0.0) return 0.0;
            return z * std::exp(D * std::log(r));
        };
        if (D == 0.0) {
            m.derivative_at_0 = 1.0;
            m.conformal_at_0 = Tri::Yes;
        } else {
            m.conformal_at_0 = Tri::No;
        }
        return m;
    }
    if (name == "annulus_bump") {
        check_known(name, params, {"a", "b", "k", "k_im", "smooth"});
        const auto p = annulus_profile(param(params, "a", 0.1), param(params, "b", 0.5),
                                       cplx(param(params, "k", 0.2), param(params, "k_im", 0.0)),
                                       param(params, "smooth", 0.0));
        return radial_solve(p, id_of());
    }
    if (name == "gm_oscillating") {
        check_known(name, params, {"gamma", "amp"});
        return radial_solve(gm_profile(param(params, "gamma", 0.6), param(params, "amp", 0.3)), id_of());
    }
    if (name == "hoelder") {
        check_known(name, params, {"c", "beta"});
        return radial_solve(hoelder_profile(param(params, "c", 0.3), param(params, "beta", 1.0)), id_of());
    }
    throw DomainError("unknown builtin field '" + name + "'");
}

Wirtinger wirtinger(const std::function<cplx(cplx)>& f, cplx z, double step) {
    if (!(step > 0.0) || !std::isfinite(step)) throw DomainError("wirtinger: step must be positive");
    const double quarter = 0.25 * step;
    if (z.real() + quarter == z.real() || z.imag() + quarter == z.imag())
        throw DomainError("wirtinger: step underflows at this point");
    if (quarter < 1e-300) throw DomainError("wirtinger: step underflows");
    auto diff = [&](double h) {
        const cplx fx = (f(z + h) - f(z - h)) / (2.0 * h);
        const cplx fy = (f(z + cplx(0, h)) - f(z - cplx(0, h))) / (2.0 * h);
        return std::array<cplx, 2>{fx, fy};
    };
    const auto d1 = diff(step), d2 = diff(0.5 * step);
    const cplx fx = (4.0 * d2[0] - d1[0]) / 3.0;
    const cplx fy = (4.0 * d2[1] - d1[1]) / 3.0;
    return {0.5 * (fx - I * fy), 0.5 * (fx + I * fy)};
}

BeltramiField grid_field(GridData data, std::string id) { return BeltramiField::grid(std::move(data), std::move(id)); }

GridData sample_field(const BeltramiField& field, double x0, double x1, double y0, double y1, int nx, int ny) {
    if (nx < 2 || ny < 2) throw DomainError("sample_field: need at least 2x2 samples");
    GridData g{x0, x1, y0, y1, nx, ny, {}};
    g.samples.reserve(static_cast<std::size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            g.samples.push_back(field(cplx(x0 + (x1 - x0) * i / (nx - 1), y0 + (y1 - y0) * j / (ny - 1))));
    return g;
}

void write_grid(const GridData& g, const std::string& id, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_grid: cannot write " + path.string());
    out << "QCGRID 1\n"
        << fmt(g.x0) << ' ' << fmt(g.x1) << ' ' << fmt(g.y0) << ' ' << fmt(g.y1) << ' ' << g.nx << ' ' << g.ny << '\n'
        << "id " << id << '\n';
    for (const cplx& v : g.samples) out << fmt(v.real()) << ' ' << fmt(v.imag()) << '\n';
}

BeltramiField read_grid(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_grid: cannot read " + path.string());
    std::string magic;
    std::getline(in, magic);
    if (magic.rfind("QCGRID 1", 0) != 0) throw DomainError("read_grid: not a QCGRID 1 file: " + path.string());
    GridData g{};
    if (!(in >> g.x0 >> g.x1 >> g.y0 >> g.y1 >> g.nx >> g.ny)) throw DomainError("read_grid: bad header");
    std::string line, id = "grid:" + path.filename().string();
    std::getline(in, line);
    const auto pos = in.tellg();
    if (std::getline(in, line) && line.rfind("id ", 0) == 0) {
        id = line.substr(3);
    } else {
        in.clear();
        in.seekg(pos);
    }
    if (g.nx < 2 || g.ny < 2 || static_cast<long long>(g.nx) * g.ny > 100000000LL)
        throw DomainError("read_grid: bad dimensions");
    g.samples.resize(static_cast<std::size_t>(g.nx) * g.ny);
    for (auto& v : g.samples) {
        double re, im;
        if (!(in >> re >> im)) throw DomainError("read_grid: truncated sample data");
        v = {re, im};
    }
    return grid_field(std::move(g), id);
}

RadialProfile read_radial_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_radial_table: cannot read " + path.string());
    std::vector<double> rs;
    std::vector<cplx> hs;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        double r, re, im = 0.0;
        if (!(ls >> r)) continue;
        if (!(ls >> re)) throw DomainError("read_radial_table: line " + std::to_string(lineno) + " needs r re_h [im_h]");
        ls >> im;
        if (!(r >= 0.0) || (!rs.empty() && !(r > rs.back())))
            throw DomainError("read_radial_table: radii must be nonnegative and increasing (line " +
                              std::to_string(lineno) + ")");
        if (!(std::abs(cplx(re, im)) < 1.0))
            throw DomainError("read_radial_table: |h| >= 1 at line " + std::to_string(lineno));
        rs.push_back(r);
        hs.push_back({re, im});
    }
    if (rs.size() < 2) throw DomainError("read_radial_table: need at least two rows");
    RadialProfile p;
    p.r_lo = rs.front();
    p.r_hi = rs.back();
    p.breaks = rs;
    for (const cplx& h : hs) p.esssup = std::max(p.esssup, std::abs(h));
    p.h = [rs, hs](double r) -> cplx {
        const auto it = std::upper_bound(rs.begin(), rs.end(), r);
        if (it == rs.begin()) return hs.front();
        if (it == rs.end()) return hs.back();
        const std::size_t j = static_cast<std::size_t>(it - rs.begin());
        const double t = (r - rs[j - 1]) / (rs[j] - rs[j - 1]);
        return (1.0 - t) * hs[j - 1] + t * hs[j];
    };
    if (p.r_lo > 0.0) p.conformal_at_0 = Tri::Yes;
    return p;
}

}  // namespace qcconf::fields
