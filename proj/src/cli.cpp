#include "msbsde/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <new>
#include <sstream>

#include "msbsde/error.hpp"
#include "msbsde/kernels.hpp"
#include "msbsde/problems.hpp"

namespace msbsde::cli {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
    raise(ErrorKind::Config, "bad value '" + std::string(value) + "' for " + std::string(key));
}

template <class T>
T parse_number(std::string_view key, std::string_view value) {
    value = trim(value);
    T out{};
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size() || value.empty()) bad_value(key, value);
    return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
    value = trim(value);
    if (value == "on" || value == "true" || value == "1" || value == "yes") return true;
    if (value == "off" || value == "false" || value == "0" || value == "no") return false;
    bad_value(key, value);
}

std::vector<int> parse_int_list(std::string_view key, std::string_view value) {
    std::vector<int> out;
    std::size_t pos = 0;
    while (pos <= value.size()) {
        const auto comma = value.find(',', pos);
        const auto item = trim(value.substr(pos, comma == std::string_view::npos ? value.npos : comma - pos));
        if (item.empty()) bad_value(key, value);
        out.push_back(parse_number<int>(key, item));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::string number(double v) {
    if (!std::isfinite(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.5e", v);
    return buf;
}

std::string number(const std::optional<double>& v) { return v ? number(*v) : std::string("nan"); }

double slope(const std::vector<std::pair<double, double>>& pts) {
    double mx = 0.0;
    double my = 0.0;
    for (const auto& [x, y] : pts) {
        mx += x;
        my += y;
    }
    mx /= static_cast<double>(pts.size());
    my /= static_cast<double>(pts.size());
    double sxy = 0.0;
    double sxx = 0.0;
    for (const auto& [x, y] : pts) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    if (sxx == 0.0) raise(ErrorKind::InsufficientData, "order estimate needs at least two distinct N");
    return sxy / sxx;
}

}  // namespace

Format parse_format(std::string_view name) {
    if (name == "csv") return Format::Csv;
    if (name == "text") return Format::Text;
    raise(ErrorKind::Config, "unknown format '" + std::string(name) + "' (csv or text)");
}

void apply_setting(RunConfig& c, std::string_view key, std::string_view value) {
    value = trim(value);
    if (key == "problem") {
        c.problem = std::string(value);
    } else if (key == "K_y") {
        c.K_y = parse_number<int>(key, value);
    } else if (key == "K_z") {
        c.K_z = parse_number<int>(key, value);
    } else if (key == "K") {
        c.K_y = c.K_z = parse_number<int>(key, value);
    } else if (key == "N") {
        c.N = parse_int_list(key, value);
    } else if (key == "L") {
        c.L = parse_number<int>(key, value);
    } else if (key == "picard_max") {
        c.picard_max = parse_number<int>(key, value);
    } else if (key == "picard_tol") {
        c.picard_tol = parse_number<double>(key, value);
    } else if (key == "domain") {
        const auto colon = value.find(':');
        if (colon == std::string_view::npos) bad_value(key, value);
        c.domain = std::array<double, 2>{parse_number<double>(key, value.substr(0, colon)),
                                         parse_number<double>(key, value.substr(colon + 1))};
    } else if (key == "threads") {
        c.threads = parse_number<int>(key, value);
    } else if (key == "r") {
        c.r = parse_number<int>(key, value);
    } else if (key == "smoothing") {
        c.smoothing = parse_bool(key, value);
    } else if (key == "smoothing_order") {
        c.smoothing_order = parse_number<int>(key, value);
    } else if (key == "smoothing_scale") {
        if (value == "auto") {
            c.smoothing_scale.reset();
        } else {
            c.smoothing_scale = parse_number<double>(key, value);
        }
    } else if (key == "bootstrap_substeps") {
        c.bootstrap_substeps = parse_number<int>(key, value);
    } else if (key == "isa") {
        c.isa = std::string(value);
    } else if (key == "format") {
        c.format = parse_format(value);
    } else if (key == "output") {
        c.output = std::string(value);
    } else if (key == "timing") {
        c.timing = parse_bool(key, value);
    } else {
        raise(ErrorKind::Config, "unknown setting '" + std::string(key) + "'");
    }
}

RunConfig parse_config(std::string_view text, RunConfig base) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto end = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            raise(ErrorKind::Config, "line " + std::to_string(line_no) + ": expected key=value");
        }
        apply_setting(base, trim(line.substr(0, eq)), line.substr(eq + 1));
    }
    return base;
}

RunConfig load_config(const std::string& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) raise(ErrorKind::Config, "cannot read config file " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), std::move(base));
}

void validate(const RunConfig& c) {
    auto fail = [](const std::string& m) { raise(ErrorKind::Config, m); };
    const auto names = problem_names();
    if (std::find(names.begin(), names.end(), c.problem) == names.end()) fail("unknown problem '" + c.problem + "'");
    if (c.K_y < 1 || c.K_y > kMaxSteps || c.K_z < 1 || c.K_z > kMaxSteps) fail("K_y and K_z must be in [1, 6]");
    if (c.N.empty()) fail("N list is empty");
    for (std::size_t i = 0; i < c.N.size(); ++i) {
        if (c.N[i] < std::max(c.K_y, c.K_z)) fail("every N must be at least max(K_y, K_z)");
        if (i > 0 && c.N[i] <= c.N[i - 1]) fail("N list must be strictly increasing");
    }
    if (c.L < 1 || c.L > 64) fail("L must be in [1, 64]");
    if (c.picard_max < 1) fail("picard_max must be positive");
    if (!(c.picard_tol >= 0.0)) fail("picard_tol must be non-negative");
    if (c.threads < 0) fail("threads must be non-negative");
    if (c.r < 1) fail("r must be positive");
    if (c.domain && !((*c.domain)[0] < (*c.domain)[1])) fail("domain needs lo < hi");
    if (c.smoothing_order != 4 && c.smoothing_order != 6) fail("smoothing_order must be 4 or 6");
    if (c.smoothing_scale && !(*c.smoothing_scale > 0.0)) fail("smoothing_scale must be positive");
    if (c.bootstrap_substeps < 1) fail("bootstrap_substeps must be positive");
    if (c.isa != "auto" && c.isa != "scalar" && c.isa != "avx2") fail("isa must be auto, scalar or avx2");
}

SolverConfig solver_config(const RunConfig& c, int N) {
    SolverConfig s;
    s.K_y = c.K_y;
    s.K_z = c.K_z;
    s.N = N;
    s.L = c.L;
    s.picard_max = c.picard_max;
    s.picard_tol = c.picard_tol;
    s.threads = c.threads;
    s.r = c.r;
    s.domain = c.domain;
    s.smoothing = c.smoothing;
    s.smoothing_order = c.smoothing_order;
    s.smoothing_scale = c.smoothing_scale;
    s.bootstrap_substeps = c.bootstrap_substeps;
    return s;
}

std::vector<ReportRow> run_experiment(const RunConfig& config) {
    validate(config);
    const ProblemSpec problem = make_problem(config.problem);
    if (config.isa == "auto") {
        kernels::set_active(kernels::detect());
    } else {
        const kernels::Isa isa = kernels::parse_isa(config.isa);
        if (!kernels::supported(isa)) raise(ErrorKind::Config, "kernel variant " + config.isa + " is not supported here");
        kernels::set_active(isa);
    }

    std::vector<ReportRow> rows;
    for (const int N : config.N) {
        const SolverConfig sc = solver_config(config, N);
        ReportRow row;
        row.K = std::max(config.K_y, config.K_z);
        row.N = N;
        try {
            validate(sc);
            row.M = make_space_grid(problem, sc, (problem.T - problem.t0) / N).M();
            const SolveResult res = solve_backward(problem, sc);
            row.M = res.M;
            row.y0 = res.y0;
            row.z0 = res.z0;
            row.times = res.times;
            row.picard_avg = res.picard.average();
            row.picard_max_iterations = res.picard.max_iterations;
            row.warnings = res.warnings;
            if (problem.analytic) {
                const AnalyticValue ref = (*problem.analytic)(problem.t0, res.eval_point.data());
                row.y_error = std::abs(res.y0 - ref.y);
                double sq = 0.0;
                for (int c = 0; c < problem.d; ++c) sq += (res.z0[c] - ref.z[c]) * (res.z0[c] - ref.z[c]);
                row.z_error = std::sqrt(sq);
            }
        } catch (const Error& e) {
            row.failed = true;
            row.diagnostic = e.what();
        } catch (const std::bad_alloc&) {
            row.failed = true;
            row.diagnostic = "out of memory";
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

OrderEstimate estimate_order(const std::vector<ReportRow>& rows) {
    std::vector<std::pair<double, double>> ys;
    std::vector<std::pair<double, double>> zs;
    for (const ReportRow& r : rows) {
        if (r.failed) continue;
        const double logN = std::log(static_cast<double>(r.N));
        if (r.y_error && std::isfinite(*r.y_error) && *r.y_error > 0.0) ys.emplace_back(logN, std::log(*r.y_error));
        if (r.z_error && std::isfinite(*r.z_error) && *r.z_error > 0.0) zs.emplace_back(logN, std::log(*r.z_error));
    }
    if (ys.size() < 2 || zs.size() < 2) {
        raise(ErrorKind::InsufficientData, "order estimate needs two rows with positive errors");
    }
    return {-slope(ys), -slope(zs)};
}

std::string format_report(const std::vector<ReportRow>& rows, Format format, bool timing) {
    auto t = [timing](double v) { return timing ? v : 0.0; };
    std::ostringstream os;
    if (format == Format::Csv) {
        os << "K,N,M,y_error,z_error,t_total_s,t_interp_s,t_expect_s,t_update_s,picard_avg\n";
        for (const ReportRow& r : rows) {
            os << r.K << ',' << r.N << ',' << r.M << ',' << number(r.y_error) << ',' << number(r.z_error) << ','
               << number(t(r.times.total)) << ',' << number(t(r.times.interp)) << ',' << number(t(r.times.expect))
               << ',' << number(t(r.times.update)) << ',' << number(r.picard_avg) << '\n';
        }
        return os.str();
    }
    char line[256];
    std::snprintf(line, sizeof line, "%3s %6s %8s %13s %13s %12s %12s %12s %12s %8s\n", "K", "N", "M", "|y err|",
                  "|z err|", "t total(s)", "t interp(s)", "t expect(s)", "t update(s)", "picard");
    os << line;
    for (const ReportRow& r : rows) {
        std::snprintf(line, sizeof line, "%3d %6d %8lld %13s %13s %12.4f %12.4f %12.4f %12.4f %8.3f\n", r.K, r.N,
                      static_cast<long long>(r.M), number(r.y_error).c_str(), number(r.z_error).c_str(),
                      t(r.times.total), t(r.times.interp), t(r.times.expect), t(r.times.update), r.picard_avg);
        os << line;
        if (r.failed) os << "    failed: " << r.diagnostic << '\n';
    }
    return os.str();
}

void emit_report(const std::vector<ReportRow>& rows, Format format, const std::string& path, bool timing) {
    if (rows.empty()) raise(ErrorKind::InvalidArgument, "report has no rows");
    const std::string text = format_report(rows, format, timing);
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorKind::Io, "cannot open " + path + " for writing");
    out << text;
    out.flush();
    if (!out) raise(ErrorKind::Io, "failed writing " + path);
}

}  // namespace msbsde::cli
