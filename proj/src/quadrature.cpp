#include "qcconf/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace qcconf::quad {

namespace {

constexpr double kPi = 3.14159265358979323846;

// 15-point Kronrod rule with embedded 7-point Gauss rule on [-1, 1] (QUADPACK values)
constexpr std::array<double, 8> kXgk = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                        0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                        0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                        0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                        0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                        0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                        0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                       0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Rule {
    std::array<double, 15> x{}, wk{}, wg{};
    Rule() {
        for (int i = 0; i < 7; ++i) {
            x[i] = -kXgk[i];
            x[14 - i] = kXgk[i];
            wk[i] = wk[14 - i] = kWgk[i];
        }
        x[7] = 0.0;
        wk[7] = kWgk[7];
        // Gauss nodes are the odd-indexed Kronrod nodes
        for (int i = 1; i < 7; i += 2) wg[i] = wg[14 - i] = kWg[i / 2];
        wg[7] = kWg[3];
    }
};
const Rule& rule() {
    static const Rule r;
    return r;
}

// compensated summation, deterministic in input order
struct Neumaier {
    double sum = 0.0, c = 0.0;
    void add(double v) {
        const double t = sum + v;
        c += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
        sum = t;
    }
    double value() const { return sum + c; }
};

struct Cell {
    double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
    int chart = 0;
    int id = 0;
    bool alive = true;
    std::vector<double> val, err;
    double prio = 0.0;
    int split_dim = 0;
};

Cell make_cell(double x0, double x1, double y0, double y1, int chart, int id) {
    Cell c;
    c.x0 = x0;
    c.x1 = x1;
    c.y0 = y0;
    c.y1 = y1;
    c.chart = chart;
    c.id = id;
    return c;
}

struct ByPriority {
    const std::vector<Cell>* cells;
    bool operator()(int a, int b) const {
        const Cell& A = (*cells)[a];
        const Cell& B = (*cells)[b];
        if (A.prio != B.prio) return A.prio < B.prio;
        return A.id > B.id;
    }
};

// Generic adaptive driver; `eval` fills val/err/split_dim for a cell.
template <class Eval>
VecEstimate adapt(std::vector<Cell> cells, std::size_t dim, const Options& opt, Eval eval, bool two_d) {
    for (auto& c : cells) eval(c);

    std::vector<double> total(dim, 0.0), total_err(dim, 0.0), scale(dim, 0.0);
    for (const auto& c : cells)
        for (std::size_t i = 0; i < dim; ++i) {
            total[i] += c.val[i];
            total_err[i] += c.err[i];
        }
    const bool has_ref = opt.reference_component >= 0 && static_cast<std::size_t>(opt.reference_component) < dim;
    auto tol_of = [&](const std::vector<double>& t, std::size_t i) {
        double m = std::abs(t[i]);
        if (has_ref) m = std::max(m, std::abs(t[static_cast<std::size_t>(opt.reference_component)]));
        return std::max(opt.abs_tol, opt.rel_tol * m);
    };
    for (std::size_t i = 0; i < dim; ++i) scale[i] = tol_of(total, i);

    auto priority = [&](Cell& c) {
        double p = 0.0;
        for (std::size_t i = 0; i < dim; ++i) p = std::max(p, c.err[i] / scale[i]);
        const double wx = c.x1 - c.x0, wy = c.y1 - c.y0;
        const double tiny = 1e-13 * (std::abs(c.x0) + std::abs(c.x1) + 1e-300);
        const double tiny_y = 1e-13 * (std::abs(c.y0) + std::abs(c.y1) + 1e-300);
        if (wx < tiny && (!two_d || wy < tiny_y)) p = -1.0;  // unsplittable
        c.prio = p;
    };
    for (auto& c : cells) priority(c);

    std::priority_queue<int, std::vector<int>, ByPriority> pq(ByPriority{&cells});
    for (int i = 0; i < static_cast<int>(cells.size()); ++i)
        if (cells[i].prio > 0.0) pq.push(i);

    auto done = [&] {
        for (std::size_t i = 0; i < dim; ++i)
            if (total_err[i] > tol_of(total, i)) return false;
        return true;
    };

    int next_id = static_cast<int>(cells.size());
    bool budget_hit = false;
    while (!done()) {
        if (pq.empty()) break;
        if (static_cast<int>(cells.size()) + 2 > opt.max_cells) {
            budget_hit = true;
            break;
        }
        const int k = pq.top();
        pq.pop();
        Cell parent = cells[k];
        cells[k].alive = false;
        Cell a = parent, b = parent;
        if (!two_d || parent.split_dim == 0) {
            const double m = 0.5 * (parent.x0 + parent.x1);
            a.x1 = m;
            b.x0 = m;
        } else {
            const double m = 0.5 * (parent.y0 + parent.y1);
            a.y1 = m;
            b.y0 = m;
        }
        a.id = next_id++;
        b.id = next_id++;
        eval(a);
        eval(b);
        for (std::size_t i = 0; i < dim; ++i) {
            total[i] += a.val[i] + b.val[i] - parent.val[i];
            total_err[i] += a.err[i] + b.err[i] - parent.err[i];
        }
        priority(a);
        priority(b);
        cells.push_back(std::move(a));
        if (cells.back().prio > 0.0) pq.push(static_cast<int>(cells.size()) - 1);
        cells.push_back(std::move(b));
        if (cells.back().prio > 0.0) pq.push(static_cast<int>(cells.size()) - 1);
    }

    // final sums over live cells in id order (cells are stored in id order)
    VecEstimate out;
    out.value.assign(dim, 0.0);
    out.err.assign(dim, 0.0);
    std::vector<Neumaier> sv(dim), se(dim);
    int live = 0;
    for (const auto& c : cells) {
        if (!c.alive) continue;
        ++live;
        for (std::size_t i = 0; i < dim; ++i) {
            sv[i].add(c.val[i]);
            se[i].add(c.err[i]);
        }
    }
    for (std::size_t i = 0; i < dim; ++i) {
        out.value[i] = sv[i].value();
        out.err[i] = se[i].value();
    }
    out.cells = live;
    out.converged = !budget_hit;
    if (out.converged)
        for (std::size_t i = 0; i < dim; ++i)
            if (out.err[i] > tol_of(out.value, i) * 1.0000001) {
                out.converged = false;
            }
    return out;
}

}  // namespace

double bump(double s) {
    if (s <= 0.5) return 1.0;
    if (s >= 1.0) return 0.0;
    const double x = 2.0 * s - 1.0;  // in (0,1)
    const double g0 = std::exp(-1.0 / x), g1 = std::exp(-1.0 / (1.0 - x));
    return g1 / (g0 + g1);
}

VecEstimate integrate_1d(const Fn1& f, std::size_t dim, std::span<const double> points, const Options& opt) {
    if (points.size() < 2) throw std::invalid_argument("integrate_1d: need at least two points");
    std::vector<Cell> cells;
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        if (!(points[i] < points[i + 1])) {
            if (points[i] == points[i + 1]) continue;
            throw std::invalid_argument("integrate_1d: points must increase");
        }
        cells.push_back(make_cell(points[i], points[i + 1], 0.0, 0.0, 0, static_cast<int>(cells.size())));
    }
    if (cells.empty()) {
        VecEstimate z;
        z.value.assign(dim, 0.0);
        z.err.assign(dim, 0.0);
        return z;
    }
    const Rule& R = rule();
    std::vector<double> buf(dim);
    auto eval = [&](Cell& c) {
        const double h = 0.5 * (c.x1 - c.x0), m = 0.5 * (c.x1 + c.x0);
        c.val.assign(dim, 0.0);
        std::vector<double> g(dim, 0.0);
        for (int k = 0; k < 15; ++k) {
            std::fill(buf.begin(), buf.end(), 0.0);
            f(m + h * R.x[k], buf);
            for (std::size_t i = 0; i < dim; ++i) {
                c.val[i] += R.wk[k] * buf[i];
                g[i] += R.wg[k] * buf[i];
            }
        }
        c.err.assign(dim, 0.0);
        for (std::size_t i = 0; i < dim; ++i) {
            c.val[i] *= h;
            c.err[i] = std::abs(c.val[i] - h * g[i]);
        }
    };
    return adapt(std::move(cells), dim, opt, eval, false);
}

VecEstimate integrate_tail(const Fn1& f, std::size_t dim, double a, const Options& opt, int m) {
    if (!(a > 0.0)) throw std::invalid_argument("integrate_tail: lower limit must be positive");
    auto g = [&](double u, std::span<double> out) {
        const double um = std::pow(u, m);
        if (um < 1e-300) {
            std::fill(out.begin(), out.end(), 0.0);
            return;
        }
        const double x = a / um;
        f(x, out);
        const double jac = m * a / (um * u);
        for (auto& v : out) v *= jac;
    };
    const std::array<double, 5> pts = {0.0, 0.125, 0.25, 0.5, 1.0};
    return integrate_1d(g, dim, pts, opt);
}

Estimate integrate(const std::function<double(double)>& f, std::span<const double> points, const Options& opt) {
    const auto r = integrate_1d([&](double x, std::span<double> o) { o[0] = f(x); }, 1, points, opt);
    return {r.value[0], r.err[0], r.cells, r.converged};
}

Estimate integrate(const std::function<double(double)>& f, double a, double b, const Options& opt) {
    const std::array<double, 2> pts = {a, b};
    return integrate(f, pts, opt);
}

CEstimate integrate_complex(const std::function<cplx(double)>& f, std::span<const double> points, const Options& opt) {
    const auto r = integrate_1d(
        [&](double x, std::span<double> o) {
            const cplx v = f(x);
            o[0] = v.real();
            o[1] = v.imag();
        },
        2, points, opt);
    return {{r.value[0], r.value[1]}, std::hypot(r.err[0], r.err[1]), r.cells, r.converged};
}

CEstimate integrate_complex_tail(const std::function<cplx(double)>& f, double a, const Options& opt, int m) {
    const auto r = integrate_tail(
        [&](double x, std::span<double> o) {
            const cplx v = f(x);
            o[0] = v.real();
            o[1] = v.imag();
        },
        2, a, opt, m);
    return {{r.value[0], r.value[1]}, std::hypot(r.err[0], r.err[1]), r.cells, r.converged};
}

VecEstimate integrate_2d(const Fn2& f, std::size_t dim, std::span<const Rect> initial, const Options& opt) {
    std::vector<Cell> cells;
    for (const auto& r : initial) {
        if (!(r.x1 > r.x0 && r.y1 > r.y0)) continue;
        cells.push_back(make_cell(r.x0, r.x1, r.y0, r.y1, r.chart, static_cast<int>(cells.size())));
    }
    if (cells.empty()) {
        VecEstimate z;
        z.value.assign(dim, 0.0);
        z.err.assign(dim, 0.0);
        return z;
    }
    const Rule& R = rule();
    std::vector<double> buf(dim), kk(dim), gk(dim), kg(dim);
    auto eval = [&](Cell& c) {
        const double hx = 0.5 * (c.x1 - c.x0), mx = 0.5 * (c.x1 + c.x0);
        const double hy = 0.5 * (c.y1 - c.y0), my = 0.5 * (c.y1 + c.y0);
        std::fill(kk.begin(), kk.end(), 0.0);
        std::fill(gk.begin(), gk.end(), 0.0);
        std::fill(kg.begin(), kg.end(), 0.0);
        for (int a = 0; a < 15; ++a) {
            const double x = mx + hx * R.x[a];
            for (int b = 0; b < 15; ++b) {
                std::fill(buf.begin(), buf.end(), 0.0);
                f(c.chart, x, my + hy * R.x[b], buf);
                const double wkk = R.wk[a] * R.wk[b], wgk = R.wg[a] * R.wk[b], wkg = R.wk[a] * R.wg[b];
                for (std::size_t i = 0; i < dim; ++i) {
                    kk[i] += wkk * buf[i];
                    gk[i] += wgk * buf[i];
                    kg[i] += wkg * buf[i];
                }
            }
        }
        const double J = hx * hy;
        c.val.assign(dim, 0.0);
        c.err.assign(dim, 0.0);
        double ex = 0.0, ey = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            c.val[i] = J * kk[i];
            const double dx = J * std::abs(kk[i] - gk[i]), dy = J * std::abs(kk[i] - kg[i]);
            c.err[i] = dx + dy;
            ex += dx;
            ey += dy;
        }
        c.split_dim = ex >= ey ? 0 : 1;
    };
    return adapt(std::move(cells), dim, opt, eval, true);
}

VecEstimate integrate_plane(const PlaneFn& f, std::size_t dim, const PlaneDomain& dom, const Options& opt) {
    if (!(dom.r_in >= 0.0 && dom.r_out > dom.r_in)) throw std::invalid_argument("integrate_plane: empty annulus");
    if (dom.r_in == 0.0 && !(dom.decay_in > 0.0)) throw std::invalid_argument("integrate_plane: need decay at 0");
    if (std::isinf(dom.r_out) && !(dom.decay_out > 0.0))
        throw std::invalid_argument("integrate_plane: need decay at infinity");

    auto inside = [&](double r) { return r > dom.r_in && r < dom.r_out; };

    struct Chart {
        cplx p;
        double rp, m;
    };
    std::vector<Chart> charts;
    for (std::size_t k = 0; k < dom.poles.size(); ++k) {
        const cplx p = dom.poles[k].at;
        const double ap = std::abs(p);
        if (ap == 0.0 || !inside(ap)) continue;
        if (!(dom.poles[k].alpha < 2.0)) throw std::invalid_argument("integrate_plane: non-integrable pole");
        double d = ap;
        for (std::size_t j = 0; j < dom.poles.size(); ++j)
            if (j != k && dom.poles[j].at != p) d = std::min(d, std::abs(dom.poles[j].at - p));
        if (dom.r_in > 0.0) d = std::min(d, ap - dom.r_in);
        if (std::isfinite(dom.r_out)) d = std::min(d, dom.r_out - ap);
        double rp = d / 3.0;
        for (double b : dom.radial_breaks) {
            const double db = std::abs(ap - b);
            // shrink away from a nearby break; a pole sitting on one keeps a small chart
            // so that the misaligned discontinuity only crosses a little area
            if (db < rp) rp = std::max(0.9 * db, rp / 1024.0);
        }
        bool dup = false;
        for (const auto& c : charts) dup = dup || c.p == p;
        if (dup) continue;
        charts.push_back({p, rp, 1.0 / (2.0 - std::max(dom.poles[k].alpha, 1.0))});
    }

    // panel boundaries in t = log r
    std::vector<double> marks;
    auto mark = [&](double r) {
        if (r > 0.0 && std::isfinite(r)) marks.push_back(std::log(r));
    };
    for (const auto& pole : dom.poles) mark(std::abs(pole.at));
    for (double b : dom.radial_breaks)
        if (inside(b)) mark(b);
    for (double s : dom.scales) mark(s);
    if (dom.r_in > 0.0) mark(dom.r_in);
    if (std::isfinite(dom.r_out)) mark(dom.r_out);
    if (marks.empty()) marks.push_back(0.0);
    std::sort(marks.begin(), marks.end());
    const double core_lo = marks.front(), core_hi = marks.back();
    const double t_lo = dom.r_in > 0.0 ? std::log(dom.r_in) : core_lo - 39.0 / dom.decay_in;
    const double t_hi = std::isfinite(dom.r_out) ? std::log(dom.r_out) : core_hi + 39.0 / dom.decay_out;

    std::vector<double> knots;
    for (double t : marks)
        if (t >= t_lo && t <= t_hi) knots.push_back(t);
    knots.push_back(t_lo);
    knots.push_back(t_hi);
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

    std::vector<double> tk;
    const double lo_core = std::max(core_lo, t_lo), hi_core = std::min(core_hi, t_hi);
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        const double a = knots[i], b = knots[i + 1];
        tk.push_back(a);
        if (a >= lo_core && b <= hi_core) {
            const int n = static_cast<int>(std::ceil((b - a) / 1.0 - 1e-12));
            for (int j = 1; j < n; ++j) tk.push_back(a + (b - a) * j / n);
        } else if (b <= lo_core) {
            // lower tail: geometric widths measured from b downwards
            double w = 1.0, t = b - w;
            std::vector<double> tmp;
            while (t > a) {
                tmp.push_back(t);
                w *= 2.0;
                t -= w;
            }
            std::reverse(tmp.begin(), tmp.end());
            tk.insert(tk.end(), tmp.begin(), tmp.end());
        } else {
            double w = 1.0, t = a + w;
            while (t < b) {
                tk.push_back(t);
                w *= 2.0;
                t += w;
            }
        }
    }
    tk.push_back(knots.back());

    std::vector<Rect> rects;
    for (std::size_t i = 0; i + 1 < tk.size(); ++i)
        for (int q = 0; q < 4; ++q) rects.push_back({tk[i], tk[i + 1], q * kPi / 2, (q + 1) * kPi / 2, 0});
    for (std::size_t c = 0; c < charts.size(); ++c) {
        const double uh = std::pow(0.5, 1.0 / charts[c].m);
        for (int q = 0; q < 4; ++q) {
            rects.push_back({0.0, uh, q * kPi / 2, (q + 1) * kPi / 2, static_cast<int>(c + 1)});
            rects.push_back({uh, 1.0, q * kPi / 2, (q + 1) * kPi / 2, static_cast<int>(c + 1)});
        }
    }

    auto g = [&](int chart, double x, double y, std::span<double> out) {
        if (chart == 0) {
            const double r = std::exp(x);
            const cplx z = std::polar(r, y);
            double w = 1.0;
            for (const auto& c : charts) w -= bump(std::abs(z - c.p) / c.rp);
            if (w <= 0.0) return;
            f(z, out);
            const double jac = w * r * r;
            for (auto& v : out) v *= jac;
        } else {
            const Chart& c = charts[chart - 1];
            const double um = std::pow(x, c.m);
            const double w = bump(um);
            if (w <= 0.0) return;
            const double rho = c.rp * um;
            const cplx z = c.p + std::polar(rho, y);
            f(z, out);
            const double jac = w * c.m * c.rp * c.rp * std::pow(x, 2.0 * c.m - 1.0);
            for (auto& v : out) v *= jac;
        }
    };
    return integrate_2d(g, dim, rects, opt);
}

}  // namespace qcconf::quad
