#include "abhsim/io.hpp"

#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "abhsim/errors.hpp"

namespace abhsim {

std::string version() { return "0.3.0"; }

std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

std::string trajectory_header(int sites) {
    std::string h = "t_seconds,fidelity,trace,purity";
    for (int j = 1; j <= sites; ++j) h += ",n_site_" + std::to_string(j);
    h += ",chi1_radps,chi_radps,kappa_radps";
    return h;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
    out << trajectory_header(trajectory.sites) << '\n';
    for (const auto& s : trajectory.samples) {
        out << format_double(s.t) << ',' << format_double(s.fidelity) << ',' << format_double(s.trace) << ','
            << format_double(s.purity);
        for (double n : s.site_occupation) out << ',' << format_double(n);
        out << ',' << format_double(s.controls.chi1) << ',' << format_double(s.controls.chi) << ','
            << format_double(s.controls.kappa) << '\n';
    }
}

void RunSummary::validate() const {
    constexpr double slack = 1e-12;
    if (final_fidelity < -slack || peak_fidelity > 1.0 + slack || peak_fidelity + slack < final_fidelity)
        throw InvariantError("summary fidelities violate 0 <= final <= peak <= 1");
}

std::string iso8601_now() {
    std::time_t now = std::time(nullptr);
    std::tm utc{};
    gmtime_r(&now, &utc);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
    return buf;
}

void write_summary(std::ostream& out, const RunSummary& s) {
    out << "name: " << s.name << '\n'
        << "version: " << version() << '\n'
        << "timestamp: " << s.timestamp << '\n'
        << "engine: " << s.engine << '\n'
        << "final_fidelity: " << format_double(s.final_fidelity) << '\n'
        << "peak_fidelity: " << format_double(s.peak_fidelity) << '\n'
        << "peak_time_s: " << format_double(s.peak_time) << '\n'
        << "total_time_T_s: " << format_double(s.total_time) << '\n'
        << "trace_drift: " << format_double(s.trace_drift) << '\n'
        << "hermiticity_defect: " << format_double(s.hermiticity_defect) << '\n'
        << "dt_s: " << format_double(s.dt) << '\n'
        << "steps: " << s.steps << '\n'
        << "constraints: " << s.constraint_digest << '\n';
    out << "warnings: " << s.warnings.size() << '\n';
    for (const auto& w : s.warnings) out << "  - " << w << '\n';
    out << "config:\n";
    std::istringstream echo(s.config_echo);
    for (std::string line; std::getline(echo, line);) out << "  " << line << '\n';
}

void write_text_file(const std::string& path, const std::string& text) {
    std::filesystem::path p(path);
    std::error_code ec;
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
    if (ec) throw IoError("cannot create directory for " + path + ": " + ec.message());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw IoError("cannot open " + path + " for writing");
    f << text;
    f.close();
    if (!f) throw IoError("write failed for " + path);
}

void write_outputs(const Trajectory& trajectory, RunSummary summary, const OutputPaths& paths) {
    summary.validate();
    if (summary.timestamp.empty()) summary.timestamp = iso8601_now();
    std::ostringstream csv;
    write_trajectory_csv(csv, trajectory);
    write_text_file(paths.trajectory_csv, csv.str());
    std::ostringstream text;
    write_summary(text, summary);
    write_text_file(paths.summary, text.str());
}

}  // namespace abhsim
