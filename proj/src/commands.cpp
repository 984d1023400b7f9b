#include "qcconf/commands.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "qcconf/beltrami_solver.hpp"
#include "qcconf/errors.hpp"
#include "qcconf/theorem_checks.hpp"

namespace qcconf::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using cplx = std::complex<double>;

namespace {

// shortest round-trip form, so equal doubles always print identically
std::string num(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

std::string num(cplx z) { return num(z.real()) + (std::signbit(z.imag()) ? "-" : "+") + num(std::abs(z.imag())) + "i"; }

// JSON has no infinities; they are written as the strings "inf", "-inf", "nan"
json jnum(double x) {
    if (std::isfinite(x)) return x;
    return num(x);
}

json jcplx(cplx z) { return json::array({jnum(z.real()), jnum(z.imag())}); }

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + "\"";
}

class Csv {
public:
    explicit Csv(const char* header) : text_(std::string(header) + "\n") {}
    template <typename... Cols>
    void row(const Cols&... cols) {
        bool first = true;
        ((text_ += (first ? "" : ","), text_ += cell(cols), first = false), ...);
        text_ += "\n";
    }
    const std::string& text() const { return text_; }

private:
    static std::string cell(const std::string& s) { return csv_field(s); }
    static std::string cell(const char* s) { return csv_field(s); }
    static std::string cell(double x) { return num(x); }
    static std::string cell(int x) { return std::to_string(x); }
    static std::string cell(std::size_t x) { return std::to_string(x); }
    std::string text_;
};

void write_file(const fs::path& path, const std::string& content, CommandResult& res) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + path.string());
    res.written.push_back(path);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

const char* tri(fields::Tri t) { return fields::to_string(t); }

hyperbolic::DensityCalibration calibration_for(const RunConfig& cfg) {
    if (!cfg.calibration.empty())
        return hyperbolic::cached_calibration(cfg.calibration, cfg.delta0, cfg.calibration_grid, cfg.calibration_grid);
    return hyperbolic::calibrate_density(cfg.delta0, cfg.calibration_grid, cfg.calibration_grid);
}

json criteria_json(const integrals::CriteriaConfig& c) {
    json j;
    j["p"] = c.p;
    j["s"] = c.s;
    j["rho"] = c.rho;
    j["cutoffs_T"] = c.cutoffs;
    j["tol"] = c.tol;
    return j;
}

json header(const RunConfig& cfg, const hyperbolic::DensityCalibration& cal, const ResolvedField* rf) {
    json j;
    j["schema"] = "qcconf-report";
    j["schema_version"] = kReportSchemaVersion;
    j["tool"] = {{"name", "qcconf"}, {"version", kToolVersion}};
    j["command"] = cfg.command;
    if (rf) {
        json f;
        f["spec"] = cfg.field.describe();
        f["id"] = rf->field.id();
        f["hash"] = rf->field.hash();
        f["structure"] = fields::to_string(rf->field.structure());
        f["esssup"] = rf->field.esssup();
        f["oracle"] = rf->oracle.has_value();
        j["field"] = f;
    }
    j["criteria"] = criteria_json(cfg.criteria);
    j["seed"] = cfg.seed;
    j["calibration"] = {{"hash", cal.hash()},
                        {"delta0", cal.delta0},
                        {"C0", cal.C0},
                        {"grid", {cal.radial_points, cal.angular_points}}};
    return j;
}

json series_json(const integrals::CutoffSeries& s) {
    json j;
    j["route"] = s.route;
    j["converged"] = s.converged;
    j["diverged"] = s.diverged;
    j["growth_rate"] = jnum(s.growth_rate);
    j["value"] = jcplx(s.estimate.value);
    j["err"] = jnum(s.estimate.err);
    j["quadrature_converged"] = s.estimate.converged;
    json rows = json::array();
    for (std::size_t i = 0; i < s.partials.size(); ++i)
        rows.push_back({{"T", s.cutoffs[i]}, {"partial", jcplx(s.partials[i])}, {"err", jnum(s.errs[i])}});
    j["partials"] = rows;
    j["decade_factor"] = json::array();
    for (double f : s.decade_factor) j["decade_factor"].push_back(jnum(f));
    if (!s.tapered.empty()) {
        j["tapered"] = json::array();
        for (cplx t : s.tapered) j["tapered"].push_back(jcplx(t));
        j["tapered_factor"] = json::array();
        for (double f : s.tapered_factor) j["tapered_factor"].push_back(jnum(f));
    }
    return j;
}

json report_json(const checks::InequalityReport& r) {
    json j;
    j["name"] = r.name;
    j["outcome"] = checks::to_string(r.outcome);
    j["lhs"] = jnum(r.lhs);
    j["rhs"] = jnum(r.rhs);
    j["slack"] = jnum(r.slack);
    j["tolerance"] = jnum(r.tolerance);
    if (!r.note.empty()) j["note"] = r.note;
    return j;
}

std::string describe_series(const integrals::CutoffSeries& s) {
    if (s.converged) {
        const cplx v = s.estimate.value;
        return "converged to " + (v.imag() == 0.0 ? num(v.real()) : num(v)) + " (err " + num(s.estimate.err) + ")";
    }
    return "diverged, growth " + num(s.growth_rate) + " per unit of log(1/eps)";
}

struct Tally {
    int total = 0, pass = 0, fail = 0, undecided = 0, not_applicable = 0;
    void add(checks::Outcome o) {
        ++total;
        switch (o) {
            case checks::Outcome::Pass: ++pass; break;
            case checks::Outcome::Fail: ++fail; break;
            case checks::Outcome::Undecided: ++undecided; break;
            case checks::Outcome::NotApplicable: ++not_applicable; break;
        }
    }
    json to_json() const {
        return {{"total", total}, {"pass", pass}, {"fail", fail}, {"undecided", undecided}, {"not_applicable", not_applicable}};
    }
};

// 53 random bits -> [0, 1); unlike the standard distributions this is the same on every library
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

// ---- field specs -------------------------------------------------------------------------

void FieldSpec::validate() const {
    const int n = !builtin.empty() + !grid.empty() + !radial_table.empty();
    if (n != 1) throw DomainError("exactly one of --field, --grid, --radial-table is required");
    if (!params.empty() && builtin.empty()) throw DomainError("--params only applies to builtin fields");
}

std::string FieldSpec::describe() const {
    if (!grid.empty()) return "grid:" + grid.generic_string();
    if (!radial_table.empty()) return "radial-table:" + radial_table.generic_string();
    std::string s = "builtin:" + builtin;
    for (const auto& [k, v] : params) s += ";" + k + "=" + num(v);
    return s;
}

fields::Params parse_params(const std::string& text) {
    fields::Params p;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) throw DomainError("bad parameter '" + item + "', expected name=value");
        const std::string key = item.substr(0, eq), val = item.substr(eq + 1);
        std::size_t used = 0;
        double x = 0.0;
        try {
            x = std::stod(val, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != val.size() || val.empty()) throw DomainError("bad value in parameter '" + item + "'");
        if (p.count(key)) throw DomainError("parameter '" + key + "' given twice");
        p[key] = x;
    }
    return p;
}

ResolvedField resolve(const FieldSpec& spec) {
    spec.validate();
    if (!spec.builtin.empty()) {
        auto m = fields::builtin(spec.builtin, spec.params);
        return {m.field, m};
    }
    if (!spec.grid.empty()) return {fields::read_grid(spec.grid), std::nullopt};
    const auto profile = fields::read_radial_table(spec.radial_table);
    const std::string id = "radial-table:" + spec.radial_table.filename().string();
    if (std::isfinite(profile.r_hi)) {
        auto m = fields::radial_solve(profile, id);
        return {m.field, m};
    }
    return {fields::BeltramiField::radial(profile, id), std::nullopt};
}

void RunConfig::validate() const {
    criteria.validate();
    if (out.empty()) throw DomainError("--out must name a directory");
    if (!(delta0 > 0.0 && delta0 < 1.0)) throw DomainError("delta0 must lie in (0, 1)");
    if (calibration_grid < 4) throw DomainError("calibration grid too small");
    if (configurations < 0 || key_pairs < 0) throw DomainError("sweep sizes must be nonnegative");
    for (double s : scales)
        if (!(s > 0.0 && s < 1.0)) throw DomainError("scales must lie in (0, 1)");
}

const std::vector<PlotTable>& plot_tables() {
    static const std::vector<PlotTable> t = {
        {"integrals.csv", "field,integral,T,eps,re,im,err"},
        {"i_r.csv", "field,r,I"},
        {"remainder.csv", "field,r,remainder,slope"},
        {"j_scale.csv", "field,scale,J,lhs,C_liminf_J"},
    };
    return t;
}

// ---- analyze -----------------------------------------------------------------------------

CommandResult cmd_analyze(const RunConfig& cfg) {
    cfg.validate();
    const ResolvedField rf = resolve(cfg.field);
    const auto cal = calibration_for(cfg);
    const auto v = rf.oracle ? checks::classify(*rf.oracle, cfg.criteria) : checks::classify(rf.field, cfg.criteria);
    const std::string id = rf.field.id();

    std::optional<checks::HolderFit> fit;
    if (rf.oracle && rf.oracle->derivative_at_0) fit = checks::holder_fit(*rf.oracle, checks::default_holder_radii());

    json j = header(cfg, cal, &rf);
    const bool partial = !(v.twb_series.estimate.converged && v.gm_square.estimate.converged &&
                           v.gm_limit.estimate.converged);
    j["partial"] = partial;
    json verdict;
    verdict["twb"] = checks::to_string(v.twb);
    verdict["gm"] = checks::to_string(v.gm);
    if (v.hoelder)
        verdict["hoelder"] = {{"beta", jnum(v.hoelder->beta)}, {"alpha_max", jnum(v.hoelder->alpha_max)}};
    else
        verdict["hoelder"] = nullptr;
    verdict["conformal_at_0"] = tri(v.conformal);
    verdict["oracle_conformal_at_0"] = tri(v.oracle);
    verdict["note"] = v.note;
    if (v.measured)
        verdict["measured"] = {{"derivative_at_0", jcplx(v.measured->derivative)},
                               {"derivative_declared", v.measured->derivative_declared},
                               {"remainder_slope", jnum(v.measured->remainder_slope)}};
    j["verdict"] = verdict;
    json integ;
    integ["twb"] = series_json(v.twb_series);
    integ["gm_square"] = series_json(v.gm_square);
    integ["gm_limit"] = series_json(v.gm_limit);
    if (v.hoelder) {
        json h = json::array();
        for (std::size_t i = 0; i < v.hoelder->radii.size(); ++i)
            h.push_back({{"r", v.hoelder->radii[i]}, {"I", jnum(v.hoelder->values[i])}});
        integ["i_holder"] = h;
    }
    j["integrals"] = integ;
    j["constants"] = {{"C_prime", jnum(integrals::c_prime(cfg.criteria))},
                      {"C2", jnum(integrals::c2_constant(rf.field.esssup(), cfg.criteria.p))},
                      {"C3", jnum(integrals::c3_constant(rf.field.esssup(), cfg.criteria.p))}};

    CommandResult res;
    write_file(cfg.out / "report.json", j.dump(2) + "\n", res);

    Csv table(plot_tables()[0].header);
    auto add_series = [&](const char* name, const integrals::CutoffSeries& s) {
        for (std::size_t i = 0; i < s.partials.size(); ++i)
            table.row(id, name, s.cutoffs[i], std::exp(-s.cutoffs[i]), s.partials[i].real(), s.partials[i].imag(), s.errs[i]);
    };
    add_series("twb", v.twb_series);
    add_series("gm_square", v.gm_square);
    add_series("gm_limit", v.gm_limit);
    write_file(cfg.out / plot_tables()[0].file, table.text(), res);

    Csv ir(plot_tables()[1].header);
    if (v.hoelder)
        for (std::size_t i = 0; i < v.hoelder->radii.size(); ++i) ir.row(id, v.hoelder->radii[i], v.hoelder->values[i]);
    write_file(cfg.out / plot_tables()[1].file, ir.text(), res);

    Csv rem(plot_tables()[2].header);
    if (fit)
        for (std::size_t i = 0; i < fit->radii.size(); ++i) rem.row(id, fit->radii[i], fit->remainders[i], fit->slope);
    write_file(cfg.out / plot_tables()[2].file, rem.text(), res);

    std::ostringstream s;
    s << "qcconf " << kToolVersion << " analyze\n";
    s << "field        " << id << "\n";
    s << "calibration  " << cal.hash() << " (C0 = " << num(cal.C0) << ", delta0 = " << num(cal.delta0) << ")\n";
    s << "TWB          " << checks::to_string(v.twb) << ": " << describe_series(v.twb_series) << "\n";
    s << "GM square    " << describe_series(v.gm_square) << "\n";
    s << "GM limit     " << describe_series(v.gm_limit) << "\n";
    s << "GM           " << checks::to_string(v.gm) << "\n";
    if (v.hoelder)
        s << "Hoelder      I(r) = O(r^" << num(v.hoelder->beta) << "), C^{1+alpha} for alpha < " << num(v.hoelder->alpha_max) << "\n";
    else
        s << "Hoelder      no power-law decay of I(r)\n";
    if (v.measured)
        s << "measured     f'(0) = " << num(v.measured->derivative) << ", remainder slope " << num(v.measured->remainder_slope) << "\n";
    s << "conformal    " << tri(v.conformal) << " (" << v.note << ")\n";
    if (partial) s << "PARTIAL      some quadrature did not meet its tolerance\n";
    write_file(cfg.out / "summary.txt", s.str(), res);
    res.message = s.str();
    return res;
}

// ---- verify ------------------------------------------------------------------------------

CommandResult cmd_verify(const RunConfig& cfg) {
    cfg.validate();
    if (!cfg.field.grid.empty())
        throw DomainError("verify needs a map with a closed form; a grid field has none. Run 'qcconf solve' on it "
                          "and check the solved map through the library instead");
    const ResolvedField rf = resolve(cfg.field);
    if (!rf.oracle)
        throw DomainError("verify needs a map with a closed form (a builtin family or a bounded radial table); "
                          "for grid fields run 'qcconf solve' first and check the solved map");
    if (cfg.configurations == 0 && (cfg.scales.empty() || cfg.key_pairs == 0))
        throw DomainError("empty sweep: set --configs or --scales");
    const fields::ModelMap& map = *rf.oracle;
    const auto cal = calibration_for(cfg);
    const double L = map.K() > 1.0 ? std::log(map.K()) : 0.01;
    const auto consts = hyperbolic::log_holder_constants(L, cal);
    const std::string id = map.field.id();
    std::mt19937_64 rng(cfg.seed);

    Csv rows("check,index,z1_re,z1_im,z2_re,z2_im,z3_re,z3_im,z4_re,z4_im,lhs,rhs,slack,tolerance,outcome,links");
    auto coord = [](const geometry::ExtendedPoint& p, bool imag) {
        if (p.is_infinity()) return std::string("inf");
        return num(imag ? p.value().imag() : p.value().real());
    };
    auto links_ok = [](const checks::InequalityReport& r) {
        for (const auto& l : r.links)
            if (l.outcome == checks::Outcome::Fail) return "fail";
        for (const auto& l : r.links)
            if (l.outcome != checks::Outcome::Pass) return "partial";
        return "pass";
    };

    Tally fund, classical, key;
    for (int i = 0; i < cfg.configurations; ++i) {
        checks::Quadruple z;
        for (;;) {
            for (auto& p : z) {
                const double scale = std::exp(-4.0 * unit(rng));
                p = geometry::ExtendedPoint(scale * cplx(2.0 * unit(rng) - 1.0, 2.0 * unit(rng) - 1.0));
            }
            if (i % 4 == 1) z[3] = geometry::ExtendedPoint::infinity();
            if (i % 4 == 2) {
                z[2] = geometry::ExtendedPoint(0.0);
                z[3] = geometry::ExtendedPoint::infinity();
            }
            if (i % 4 == 3) z[3] = geometry::ExtendedPoint(0.0);
            bool spread = true;
            for (int a = 0; a < 4; ++a)
                for (int b = a + 1; b < 4; ++b)
                    if (!z[a].is_infinity() && !z[b].is_infinity() && std::abs(z[a].value() - z[b].value()) < 1e-3)
                        spread = false;
            if (spread) break;
        }
        const auto r = checks::check_fundamental_inequality(map, z, std::min(cfg.criteria.tol, 1e-9));
        fund.add(r.outcome);
        classical.add(r.links.back().outcome);
        rows.row(std::string("fundamental"), i, coord(z[0], false), coord(z[0], true), coord(z[1], false),
                 coord(z[1], true), coord(z[2], false), coord(z[2], true), coord(z[3], false), coord(z[3], true), r.lhs,
                 r.rhs, r.slack, r.tolerance, std::string(checks::to_string(r.outcome)), std::string(links_ok(r)));
    }

    // admissible pairs; the first pair at each scale sits on the boundary |z2| = delta1 |z1|
    const int per_scale = cfg.scales.empty() ? 0 : (cfg.key_pairs + static_cast<int>(cfg.scales.size()) - 1) /
                                                       static_cast<int>(cfg.scales.size());
    int index = 0;
    for (double s : cfg.scales)
        for (int k = 0; k < per_scale && index < cfg.key_pairs; ++k, ++index) {
            const cplx z1 = std::polar(s, 2.0 * geometry::kPi * unit(rng));
            const double t = k == 0 ? 1.0 : 0.05 + 0.95 * unit(rng);
            const cplx z2 = z1 * consts.delta1 * t * std::polar(1.0, 2.0 * geometry::kPi * unit(rng));
            const auto r = checks::check_key_inequality(map, z1, z2, consts, std::min(cfg.criteria.tol, 1e-9));
            key.add(r.outcome);
            rows.row(std::string("key"), index, z1.real(), z1.imag(), z2.real(), z2.imag(), std::string(""),
                     std::string(""), std::string(""), std::string(""), r.lhs, r.rhs, r.slack, r.tolerance,
                     std::string(checks::to_string(r.outcome)), std::string(links_ok(r)));
        }

    json j = header(cfg, cal, &rf);
    j["constants"] = {{"L", consts.L}, {"nu", consts.nu}, {"delta1", consts.delta1}, {"C1", consts.C1},
                      {"C", checks::key_constant(consts)}};
    j["fundamental"] = fund.to_json();
    j["classical"] = classical.to_json();
    j["key"] = key.to_json();

    Csv js(plot_tables()[3].header);
    bool main_ok = true;
    if (!cfg.scales.empty()) {
        const auto mt = checks::check_main_theorem(map, cfg.scales, consts, 8, std::min(cfg.criteria.tol, 1e-9));
        json m;
        m["C"] = mt.C;
        m["delta"] = mt.delta;
        m["derivative_declared"] = mt.derivative_declared;
        if (mt.derivative) m["derivative_at_0"] = jcplx(*mt.derivative);
        m["spearman"] = jnum(mt.spearman);
        m["j_tends_to_zero"] = mt.j_tends_to_zero;
        m["bounds_pass"] = mt.bounds_pass;
        m["pass"] = mt.pass;
        json pts = json::array();
        for (std::size_t i = 0; i < mt.points.size(); ++i) {
            const auto& p = mt.points[i];
            json q = report_json(p.bound);
            q["z"] = jcplx(p.z);
            q["J"] = p.J;
            q["J_liminf"] = p.j_liminf;
            pts.push_back(q);
            js.row(id, std::abs(p.z), mt.j_trend[i], p.lhs, mt.C * p.j_liminf);
        }
        m["points"] = pts;
        j["main"] = m;
        main_ok = mt.pass;
    }
    const bool all = fund.fail == 0 && classical.fail == 0 && key.fail == 0 && main_ok;
    j["all_pass"] = all;

    CommandResult res;
    write_file(cfg.out / "verify.csv", rows.text(), res);
    write_file(cfg.out / plot_tables()[3].file, js.text(), res);
    write_file(cfg.out / "verify.json", j.dump(2) + "\n", res);
    std::ostringstream s;
    s << "qcconf " << kToolVersion << " verify\n";
    s << "field        " << id << "\n";
    s << "calibration  " << cal.hash() << " (C0 = " << num(cal.C0) << ")\n";
    s << "constants    delta1 = " << num(consts.delta1) << ", C = " << num(checks::key_constant(consts)) << "\n";
    s << "fundamental  " << fund.pass << "/" << fund.total << " pass, " << fund.fail << " fail, " << fund.undecided
      << " undecided\n";
    s << "classical    " << classical.pass << "/" << classical.total << " pass\n";
    s << "key          " << key.pass << "/" << key.total << " pass, " << key.fail << " fail, " << key.undecided
      << " undecided\n";
    if (j.contains("main"))
        s << "main         bounds " << (j["main"]["bounds_pass"].get<bool>() ? "hold" : "FAIL") << ", J -> 0: "
          << (j["main"]["j_tends_to_zero"].get<bool>() ? "yes" : "no") << "\n";
    s << "overall      " << (all ? "all checks pass" : "VIOLATIONS FOUND") << "\n";
    write_file(cfg.out / "summary.txt", s.str(), res);
    res.message = s.str();
    return res;
}

// ---- solve -------------------------------------------------------------------------------

CommandResult cmd_solve(const RunConfig& cfg) {
    cfg.validate();
    const ResolvedField rf = resolve(cfg.field);
    solver::SolverConfig sc;
    sc.grid_n = cfg.grid_n;
    sc.box_half_width = cfg.box_half_width;
    sc.subsamples = cfg.subsamples;
    const auto approx = solver::solve(rf.field, sc);
    const auto cal = calibration_for(cfg);

    json j = header(cfg, cal, &rf);
    j["solver"] = {{"grid_n", sc.grid_n}, {"box_half_width", sc.box_half_width}, {"subsamples", sc.subsamples},
                   {"max_iter", sc.max_iter}, {"resid_tol", sc.resid_tol}};
    j["iterations"] = approx.iterations();
    j["converged"] = approx.converged();
    j["residual"] = approx.residual();
    j["increment"] = approx.increment();
    j["history"] = approx.history();
    std::optional<solver::ValidationReport> val;
    if (rf.oracle) {
        val = solver::validate(approx, *rf.oracle);
        j["validation"] = {{"sup_error", val->sup_error},
                           {"mean_error", val->mean_error},
                           {"sup_log_deviation", val->sup_log_deviation},
                           {"nodes", val->nodes},
                           {"field_mismatch", val->field_mismatch}};
    }
    CommandResult res;
    fs::create_directories(cfg.out);
    solver::write_map(approx, cfg.out / "map.qcgrid");
    res.written.push_back(cfg.out / "map.qcgrid");
    write_file(cfg.out / "solve.json", j.dump(2) + "\n", res);
    std::ostringstream s;
    s << "qcconf " << kToolVersion << " solve\n";
    s << "field        " << rf.field.id() << "\n";
    s << "grid         " << sc.grid_n << "^2 on [-" << num(sc.box_half_width) << ", " << num(sc.box_half_width) << ")^2\n";
    s << "iterations   " << approx.iterations() << (approx.converged() ? " (converged)" : " (NOT converged)") << "\n";
    s << "residual     " << num(approx.residual()) << "\n";
    if (val) s << "oracle       sup error " << num(val->sup_error) << ", mean error " << num(val->mean_error) << "\n";
    write_file(cfg.out / "summary.txt", s.str(), res);
    res.message = s.str();
    return res;
}

// ---- calibrate ---------------------------------------------------------------------------

CommandResult cmd_calibrate(const RunConfig& cfg) {
    cfg.validate();
    const auto cal = hyperbolic::calibrate_density(cfg.delta0, cfg.calibration_grid, cfg.calibration_grid);
    const fs::path path = cfg.calibration.empty() ? cfg.out / "calibration.json" : cfg.calibration;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    hyperbolic::save_calibration(cal, path);
    CommandResult res;
    res.written.push_back(path);
    std::ostringstream s;
    s << "C0 = " << num(cal.C0) << "\ndelta0 = " << num(cal.delta0) << "\ngrid = " << cal.radial_points << " x "
      << cal.angular_points << "\nhash = " << cal.hash() << "\n";
    res.message = s.str();
    return res;
}

// ---- report ------------------------------------------------------------------------------

CommandResult cmd_report(const RunConfig& cfg) {
    std::vector<std::string> missing;
    for (const auto& in : cfg.inputs)
        if (!fs::is_directory(in)) missing.push_back(in.string());
    if (!missing.empty()) {
        std::string msg = "missing inputs:";
        for (const auto& m : missing) msg += "\n  " + m;
        throw DomainError(msg);
    }
    for (const auto& in : cfg.inputs)
        if (fs::exists(cfg.out) && fs::equivalent(in, cfg.out)) throw DomainError("--out must differ from every input");

    CommandResult res;
    std::string summary;
    for (const auto& in : cfg.inputs)
        if (fs::exists(in / "summary.txt")) summary += read_file(in / "summary.txt");
    write_file(cfg.out / "summary.txt", summary, res);

    for (const auto& t : plot_tables()) {
        std::string text = std::string(t.header) + "\n";
        for (const auto& in : cfg.inputs) {
            if (!fs::exists(in / t.file)) continue;
            const std::string body = read_file(in / t.file);
            const auto nl = body.find('\n');
            if (body.substr(0, nl) != t.header)
                throw DomainError(std::string(t.file) + " in " + in.string() + " has an unexpected header");
            if (nl != std::string::npos) text += body.substr(nl + 1);
        }
        write_file(cfg.out / t.file, text, res);
    }
    res.message = "merged " + std::to_string(cfg.inputs.size()) + " input(s) into " + cfg.out.string() + "\n";
    return res;
}

CommandResult run(const RunConfig& cfg) {
    try {
        if (cfg.command == "analyze") return cmd_analyze(cfg);
        if (cfg.command == "verify") return cmd_verify(cfg);
        if (cfg.command == "solve") return cmd_solve(cfg);
        if (cfg.command == "calibrate") return cmd_calibrate(cfg);
        if (cfg.command == "report") return cmd_report(cfg);
        throw DomainError("unknown command '" + cfg.command + "'");
    } catch (const std::exception& e) {
        CommandResult r;
        r.exit_code = 2;
        r.message = std::string("error: ") + e.what() + "\n";
        return r;
    }
}

}  // namespace qcconf::cli
