#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "abhsim/dynamics.hpp"

namespace abhsim {

/// Library version reported in summaries.
std::string version();

/// 17 significant digits, shortest exponent form ("%.17g").
std::string format_double(double value);

/// Header: t_seconds,fidelity,trace,purity,n_site_1..n_site_M,chi1_radps,chi_radps,kappa_radps
std::string trajectory_header(int sites);
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

struct RunSummary {
    std::string name;
    std::string engine;
    double final_fidelity = 0.0;
    double peak_fidelity = 0.0;
    double peak_time = 0.0;
    double total_time = 0.0;
    double trace_drift = 0.0;
    double hermiticity_defect = 0.0;
    double dt = 0.0;
    std::size_t steps = 0;
    std::string constraint_digest;
    std::vector<std::string> warnings;
    std::string config_echo;
    std::string timestamp;  // ISO-8601 UTC; filled by write_outputs when empty

    /// Throws InvariantError unless 0 <= final <= peak <= 1 (with 1e-12 slack).
    void validate() const;
};

/// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string iso8601_now();

/// `key: value` lines; the config echo follows a `config:` line, indented.
void write_summary(std::ostream& out, const RunSummary& summary);

struct OutputPaths {
    std::string trajectory_csv;
    std::string summary;
};

/// Writes both files, creating parent directories. Throws IoError with the path.
void write_outputs(const Trajectory& trajectory, RunSummary summary, const OutputPaths& paths);

/// Writes text to a file, creating parent directories. Throws IoError.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace abhsim
