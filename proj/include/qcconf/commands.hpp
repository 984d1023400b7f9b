#pragma once

// The five commands behind the qcconf executable. Each takes a RunConfig, writes
// its files under cfg.out and returns; verdicts are data, so only operational
// failures produce a nonzero exit code.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qcconf/fields.hpp"
#include "qcconf/integrals.hpp"
#include "qcconf/modular.hpp"

namespace qcconf::cli {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kReportSchemaVersion = 1;

/// Exactly one of builtin, grid, radial_table is set.
struct FieldSpec {
    std::string builtin;
    fields::Params params;
    std::filesystem::path grid;
    std::filesystem::path radial_table;

    void validate() const;
    std::string describe() const;
};

struct ResolvedField {
    fields::BeltramiField field;
    std::optional<fields::ModelMap> oracle;  // builtin families and bounded radial tables
};
ResolvedField resolve(const FieldSpec& spec);

/// "k=0.5,smooth=0.2" -> {{"k", 0.5}, {"smooth", 0.2}}
fields::Params parse_params(const std::string& text);

struct RunConfig {
    std::string command;
    FieldSpec field;
    integrals::CriteriaConfig criteria;
    std::vector<double> scales = {1e-1, 1e-2, 1e-3, 1e-4};
    std::filesystem::path out = "qcconf-out";
    std::uint64_t seed = 1;

    // calibration cache; empty means calibrate in memory
    std::filesystem::path calibration;
    double delta0 = 0.01;
    int calibration_grid = 64;

    int configurations = 500;  // verify: random four-point configurations
    int key_pairs = 100;       // verify: admissible pairs per scale set

    int grid_n = 256;          // solve
    double box_half_width = 2.0;
    int subsamples = 1;

    std::vector<std::filesystem::path> inputs;  // report: prior output directories

    void validate() const;
};

struct CommandResult {
    int exit_code = 0;
    std::vector<std::filesystem::path> written;
    std::string message;  // one-paragraph summary for the terminal
};

CommandResult cmd_analyze(const RunConfig& cfg);
CommandResult cmd_verify(const RunConfig& cfg);
CommandResult cmd_solve(const RunConfig& cfg);
CommandResult cmd_calibrate(const RunConfig& cfg);
CommandResult cmd_report(const RunConfig& cfg);

/// Dispatches on cfg.command; operational errors become exit code 2 with the message set.
CommandResult run(const RunConfig& cfg);

/// Plot-data files merged by cmd_report, with their fixed headers.
struct PlotTable {
    const char* file;
    const char* header;
};
const std::vector<PlotTable>& plot_tables();

}  // namespace qcconf::cli
