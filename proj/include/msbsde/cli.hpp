#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "msbsde/scheme.hpp"

namespace msbsde::cli {

enum class Format { Csv, Text };

Format parse_format(std::string_view name);

/// One benchmark run: a problem, a scheme level and a list of N.
/// Field names double as keys of the key=value config format.
struct RunConfig {
    std::string problem = "ex1";
    int K_y = 3;
    int K_z = 3;
    std::vector<int> N{128};
    int L = 32;
    int picard_max = 30;
    double picard_tol = 1e-14;
    std::optional<std::array<double, 2>> domain;
    int threads = 0;
    int r = 4;
    std::optional<bool> smoothing;
    int smoothing_order = 6;
    std::optional<double> smoothing_scale;
    int bootstrap_substeps = 16;
    /// "auto", "scalar" or "avx2".
    std::string isa = "auto";
    Format format = Format::Csv;
    /// Empty writes to stdout.
    std::string output;
    /// When false the timing columns are written as zero so that reruns
    /// produce identical files.
    bool timing = true;
};

/// Sets one field from its textual value. Unknown keys and malformed
/// values raise config errors.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

/// Flat key=value lines; '#' starts a comment, blank lines are skipped.
/// Settings are applied on top of base.
RunConfig parse_config(std::string_view text, RunConfig base = {});

RunConfig load_config(const std::string& path, RunConfig base = {});

/// Range checks, strictly increasing N and a known problem name.
void validate(const RunConfig& config);

SolverConfig solver_config(const RunConfig& config, int N);

struct ReportRow {
    int K = 0;
    int N = 0;
    std::int64_t M = 0;
    /// Absent when the problem has no reference or the run failed.
    std::optional<double> y_error;
    std::optional<double> z_error;
    double y0 = 0.0;
    std::array<double, kMaxDim> z0{};
    StageTimes times;
    double picard_avg = 0.0;
    int picard_max_iterations = 0;
    bool failed = false;
    std::string diagnostic;
    std::vector<std::string> warnings;
};

/// Validates, selects the kernel variant, then solves once per N. A solver
/// error marks its row failed and the remaining N still run.
std::vector<ReportRow> run_experiment(const RunConfig& config);

struct OrderEstimate {
    double y = 0.0;
    double z = 0.0;
};

/// Negated least-squares slope of log(error) against log(N), using rows
/// with positive finite errors. Needs two such rows for each of y and z.
OrderEstimate estimate_order(const std::vector<ReportRow>& rows);

/// CSV with header K,N,M,y_error,z_error,t_total_s,t_interp_s,t_expect_s,
/// t_update_s,picard_avg, or an aligned text table. Numbers use six
/// significant digits; missing errors print as nan.
std::string format_report(const std::vector<ReportRow>& rows, Format format, bool timing = true);

/// Writes format_report to path; throws io on failure and
/// invalid-argument on an empty row list.
void emit_report(const std::vector<ReportRow>& rows, Format format, const std::string& path, bool timing = true);

}  // namespace msbsde::cli
