// qcconf: pointwise conformality criteria for quasiconformal maps.
//
//   qcconf analyze   --field gm_oscillating --params gamma=0.6 --out runs/gm
//   qcconf verify    --field annulus_bump --scales 0.1,0.01,0.001 --out runs/verify
//   qcconf solve     --field annulus_bump --params smooth=0.2 --grid-n 256 --out runs/solve
//   qcconf calibrate --delta0 0.01 --calibration cache/calibration.json
//   qcconf report    --input runs/gm --input runs/verify --out runs/merged

#include <iostream>

#include <CLI11.hpp>

#include "qcconf/commands.hpp"

using namespace qcconf;

int main(int argc, char** argv) {
    CLI::App app{"Pointwise conformality of quasiconformal maps: criteria, inequality checks, solver"};
    app.require_subcommand(1);
    app.set_version_flag("--version", cli::kToolVersion);

    cli::RunConfig cfg;
    std::string params;
    std::vector<double> cutoffs, scales;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--out", cfg.out, "output directory")->capture_default_str();
        sub->add_option("--seed", cfg.seed, "seed for sampled sweeps")->capture_default_str();
        sub->add_option("--calibration", cfg.calibration, "calibration cache file (JSON)");
        sub->add_option("--delta0", cfg.delta0, "density calibration radius")->capture_default_str();
    };
    auto field_opts = [&](CLI::App* sub) {
        sub->add_option("--field", cfg.field.builtin, "builtin field: zero, affine, radial_stretch, spiral, "
                                                      "annulus_bump, gm_oscillating, hoelder");
        sub->add_option("--params", params, "builtin parameters, e.g. k=0.5,smooth=0.2");
        sub->add_option("--grid", cfg.field.grid, "QCGRID file with samples of mu")->check(CLI::ExistingFile);
        sub->add_option("--radial-table", cfg.field.radial_table, "rows of r, Re h, Im h")->check(CLI::ExistingFile);
    };
    auto criteria_opts = [&](CLI::App* sub) {
        sub->add_option("--p", cfg.criteria.p, "exponent p > 2 of I_{p,s}")->capture_default_str();
        sub->add_option("--s", cfg.criteria.s, "damping exponent 0 < s < p")->capture_default_str();
        sub->add_option("--rho", cfg.criteria.rho, "annulus ratio in (0, 1)")->capture_default_str();
        sub->add_option("--cutoffs", cutoffs, "inner cutoffs as T = log(1/eps), increasing")->delimiter(',');
        sub->add_option("--tol", cfg.criteria.tol, "quadrature relative tolerance")->capture_default_str();
    };

    auto* analyze = app.add_subcommand("analyze", "evaluate the TWB, GM and Hoelder criteria for a field");
    common(analyze);
    field_opts(analyze);
    criteria_opts(analyze);

    auto* verify = app.add_subcommand("verify", "sweep the distortion, key and main inequalities on an oracle map");
    common(verify);
    field_opts(verify);
    criteria_opts(verify);
    verify->add_option("--scales", scales, "|z1| values for the key and main checks")->delimiter(',');
    verify->add_option("--configs", cfg.configurations, "random four-point configurations")->capture_default_str();
    verify->add_option("--pairs", cfg.key_pairs, "admissible (z1, z2) pairs")->capture_default_str();

    auto* solve = app.add_subcommand("solve", "solve the Beltrami equation on a periodic grid");
    common(solve);
    field_opts(solve);
    solve->add_option("--grid-n", cfg.grid_n, "grid points per side (power of two)")->capture_default_str();
    solve->add_option("--box", cfg.box_half_width, "half width L of the box [-L, L)^2")->capture_default_str();
    solve->add_option("--subsamples", cfg.subsamples, "cell averaging of mu, per side")->capture_default_str();

    auto* calibrate = app.add_subcommand("calibrate", "compute and cache the density constant C0");
    common(calibrate);

    auto* report = app.add_subcommand("report", "merge summaries and plot tables of earlier runs");
    common(report);
    report->add_option("--input", cfg.inputs, "output directory of an earlier run (repeatable)");

    CLI11_PARSE(app, argc, argv);

    cfg.command = app.get_subcommands().front()->get_name();
    if (!cutoffs.empty()) cfg.criteria.cutoffs = cutoffs;
    if (verify->parsed() && verify->count("--scales")) cfg.scales = scales;
    try {
        if (!params.empty()) cfg.field.params = cli::parse_params(params);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    const auto res = cli::run(cfg);
    (res.exit_code ? std::cerr : std::cout) << res.message;
    return res.exit_code;
}
