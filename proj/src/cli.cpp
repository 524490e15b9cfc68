#include "abhsim/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <ostream>
#include <sstream>

#include "abhsim/config.hpp"
#include "abhsim/errors.hpp"
#include "abhsim/feasibility.hpp"
#include "abhsim/io.hpp"
#include "abhsim/protocol.hpp"
#include "abhsim/spectra.hpp"
#include "abhsim/verification.hpp"

namespace abhsim {

namespace {

struct Overrides {
    std::optional<double> dt_ps;
    bool no_damping = false;
    std::optional<std::string> disorder;
    std::optional<std::string> out;
    std::optional<std::size_t> stride;
    std::optional<double> margin;
};

void add_common_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--dt-ps", o.dt_ps, "RK4 step in picoseconds");
    cmd->add_flag("--no-damping", o.no_damping, "Disable T1/T_phi damping");
    cmd->add_option("--disorder", o.disorder, "Per-site detunings in MHz, e.g. \"0.5,0,-0.5\"");
    cmd->add_option("--out", o.out, "Output directory");
    cmd->add_option("--stride", o.stride, "RK4 steps between trajectory samples");
    cmd->add_option("--margin", o.margin, "Margin factor for timing bounds");
}

RunConfig load_with_overrides(const std::string& path, const Overrides& o) {
    RunConfig c = load_config(path);
    if (o.dt_ps) c.dt_ps = *o.dt_ps;
    if (o.no_damping) c.damping_enabled = false;
    if (o.disorder) {
        c.disorder_mhz.clear();
        std::istringstream in(*o.disorder);
        for (std::string item; std::getline(in, item, ',');) {
            try {
                std::size_t used = 0;
                c.disorder_mhz.push_back(std::stod(item, &used));
                if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
            } catch (const std::exception&) {
                throw ConfigError("--disorder: '" + item + "' is not a number");
            }
        }
    }
    if (o.out) c.out_dir = *o.out;
    if (o.stride) c.sample_stride = *o.stride;
    if (o.margin) c.margin = *o.margin;
    c.validate();
    return c;
}

std::string path_in(const std::string& dir, const std::string& file) {
    return (std::filesystem::path(dir) / file).string();
}

std::string ns(double seconds) { return format_double(seconds * 1e9); }

// Auto schedules without a fixed Delta t_7 are calibrated before the run.
ControlSchedule resolve_schedule(const RunConfig& c, const BasisPtr& basis, std::ostream& out) {
    if (!c.schedule_auto || c.dt7_ns) return make_schedule(c);
    const auto [lo, hi] = c.n_range();
    const auto plan = recommend_durations(c.chi_max_radps(), c.kappa_max_radps(), lo, hi, c.margin);
    const ControlSchedule provisional = build_schedule(c.chi_max_radps(), c.kappa_max_radps(), plan.durations, c.kappa_path);
    const InputState in = c.input();
    const auto snap = run_to_step6(in, basis, provisional, c.damping(), c.detuning_radps(), c.protocol_options());
    const auto cal = calibrate_dt7(snap, target_state(in, basis), provisional, c.damping(), c.detuning_radps(),
                                   c.protocol_options(), c.calibration_options());
    out << "calibrated_dt7_ns: " << ns(cal.dt7) << '\n';
    return make_schedule(c, cal.dt7);
}

int cmd_protocol(const std::string& path, const Overrides& o, std::ostream& out) {
    const RunConfig c = load_with_overrides(path, o);
    const auto basis = build_basis(c.lattice());
    const ControlSchedule schedule = resolve_schedule(c, basis, out);

    std::vector<std::string> warnings;
    std::string digest_text = "unavailable";
    try {
        FeasibilityInputs fin = c.feasibility_inputs();
        fin.schedule = schedule;
        const auto report = feasibility(fin);
        digest_text = digest(report);
        for (const auto& name : report.failures()) warnings.push_back("constraint " + name + " fails");
    } catch (const ConfigError& e) {
        warnings.push_back(std::string("constraint report skipped: ") + e.what());
    }

    const auto t0 = std::chrono::steady_clock::now();
    ProtocolResult r = run_protocol(c.input(), basis, schedule, c.damping(), c.detuning_radps(), c.protocol_options());
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    RunSummary s;
    s.name = c.name;
    s.engine = to_string(r.engine);
    s.final_fidelity = r.final_fidelity();
    std::tie(s.peak_fidelity, s.peak_time) = r.peak_fidelity();
    s.total_time = schedule.total_time();
    s.trace_drift = r.trajectory.max_trace_drift;
    s.hermiticity_defect = r.trajectory.max_hermiticity_defect;
    s.dt = c.dt_seconds();
    s.steps = r.trajectory.steps;
    s.constraint_digest = digest_text;
    s.warnings = warnings;
    s.warnings.insert(s.warnings.end(), r.warnings.begin(), r.warnings.end());
    s.config_echo = serialize(c);
    s.timestamp = iso8601_now();

    const OutputPaths paths{path_in(c.out_dir, c.trajectory_file), path_in(c.out_dir, c.summary_file)};
    write_outputs(r.trajectory, s, paths);
    out << "final_fidelity: " << format_double(s.final_fidelity) << '\n'
        << "peak_fidelity: " << format_double(s.peak_fidelity) << '\n'
        << "peak_time_s: " << format_double(s.peak_time) << '\n'
        << "total_time_T_s: " << format_double(s.total_time) << '\n'
        << "engine: " << s.engine << '\n'
        << "runtime_s: " << format_double(secs) << '\n'
        << "trajectory: " << paths.trajectory_csv << '\n'
        << "summary: " << paths.summary << '\n';
    return kExitOk;
}

std::vector<double> parse_scan(const std::string& text) {
    std::vector<double> parts;
    std::istringstream in(text);
    for (std::string item; std::getline(in, item, ':');) {
        try {
            parts.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ConfigError("--tau-scan: '" + item + "' is not a number");
        }
    }
    if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0] || parts[0] < 0.0)
        throw ConfigError("--tau-scan expects a:b:step with 0 <= a <= b and step > 0");
    std::vector<double> taus;
    const auto n = static_cast<std::size_t>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9)) + 1;
    for (std::size_t i = 0; i < n; ++i) taus.push_back(parts[0] + static_cast<double>(i) * parts[2]);
    return taus;
}

int cmd_spectrum(const std::string& path, const Overrides& o, int sector, const std::string& scan, std::ostream& out) {
    const RunConfig c = load_with_overrides(path, o);
    LatticeSpec spec = c.lattice();
    spec.per_site_cap = std::max(spec.per_site_cap, sector);
    const auto basis = build_basis(spec);
    const auto rows = phase_scan(basis, c.chi_max_radps(), sector, parse_scan(scan));
    std::ostringstream csv;
    write_phase_scan_csv(csv, rows);
    if (o.out) {
        const std::string file = path_in(*o.out, "phase_scan.csv");
        write_text_file(file, csv.str());
        out << "phase_scan: " << file << '\n';
    } else {
        out << csv.str();
    }
    return kExitOk;
}

int cmd_constraints(const std::string& path, const Overrides& o, std::ostream& out) {
    const RunConfig c = load_with_overrides(path, o);
    const std::string text = to_text(feasibility(c.feasibility_inputs()));
    out << text;
    if (o.out) write_text_file(path_in(*o.out, "constraints.txt"), text);
    return kExitOk;
}

int cmd_calibrate(const std::string& path, const Overrides& o, std::optional<double> total_ns,
                  const std::vector<double>& splits, std::ostream& out) {
    RunConfig c = load_with_overrides(path, o);
    const auto basis = build_basis(c.lattice());
    const InputState in = c.input();
    ControlSchedule base = c.schedule_auto && !c.dt7_ns
                               ? build_schedule(c.chi_max_radps(), c.kappa_max_radps(),
                                                recommend_durations(c.chi_max_radps(), c.kappa_max_radps(),
                                                                    c.n_range().first, c.n_range().second, c.margin)
                                                    .durations,
                                                c.kappa_path)
                               : make_schedule(c);
    std::ostringstream scan_csv;
    scan_csv << "dt7_seconds,fidelity\n";
    if (total_ns) {
        const auto fit = fit_schedule_to_total(in, basis, base, *total_ns * 1e-9, c.detuning_radps(),
                                               c.protocol_options(), c.calibration_options(), splits);
        for (auto [x, f] : fit.scan) scan_csv << format_double(x) << ',' << format_double(f) << '\n';
        out << "mode: fit_total\n"
            << "total_time_T_s: " << format_double(fit.schedule.total_time()) << '\n'
            << "closed_final_fidelity: " << format_double(fit.fidelity) << '\n'
            << "adiabatic_split: " << format_double(fit.split) << '\n'
            << "durations_ns: ";
        for (int i = 0; i < kProtocolSteps; ++i)
            out << (i ? ", " : "") << ns(fit.schedule.durations()[static_cast<std::size_t>(i)]);
        out << '\n';
    } else {
        const auto snap = run_to_step6(in, basis, base, c.damping(), c.detuning_radps(), c.protocol_options());
        const auto cal = calibrate_dt7(snap, target_state(in, basis), base, c.damping(), c.detuning_radps(),
                                       c.protocol_options(), c.calibration_options());
        for (auto [x, f] : cal.scan) scan_csv << format_double(x) << ',' << format_double(f) << '\n';
        out << "mode: dt7\n"
            << "window_lo_ns: " << ns(cal.window_lo) << '\n'
            << "window_hi_ns: " << ns(cal.window_hi) << '\n'
            << "candidates: " << cal.scan.size() << '\n'
            << "dt7_ns: " << ns(cal.dt7) << '\n'
            << "fidelity: " << format_double(cal.fidelity) << '\n'
            << "total_time_T_s: " << format_double(base.end_of(6) + cal.dt7) << '\n';
    }
    if (o.out) write_text_file(path_in(*o.out, "calibration_scan.csv"), scan_csv.str());
    return kExitOk;
}

int cmd_verify(const std::vector<int>& only, std::optional<double> dt_ps, std::ostream& out) {
    VerifyOptions v;
    v.only = only;
    if (dt_ps) v.dt = *dt_ps * 1e-12;
    v.log = nullptr;
    bool ok = true;
    for (const auto& r : run_acceptance(v)) {
        out << format_result(r) << '\n';
        ok = ok && r.pass;
    }
    out << (ok ? "verify: all criteria pass" : "verify: mismatch") << '\n';
    return ok ? kExitOk : kExitVerification;
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Attractive Bose-Hubbard ring simulator"};
    app.require_subcommand(1);

    Overrides o;
    std::string config;

    auto* protocol = app.add_subcommand("protocol", "Run the seven-step protocol");
    protocol->add_option("config", config, "Config file or preset name")->required();
    add_common_flags(protocol, o);

    int sector = 0;
    std::string scan;
    auto* spectrum = app.add_subcommand("spectrum", "Ground-state phase scan of one number sector");
    spectrum->add_option("config", config)->required();
    spectrum->add_option("--sector", sector, "Number of quanta N")->required();
    spectrum->add_option("--tau-scan", scan, "a:b:step")->required();
    add_common_flags(spectrum, o);

    auto* constraints = app.add_subcommand("constraints", "Feasibility report");
    constraints->add_option("config", config)->required();
    add_common_flags(constraints, o);

    std::optional<double> total_ns;
    auto* calibrate = app.add_subcommand("calibrate", "Search Delta t_7 (or fit the schedule to a total time)");
    calibrate->add_option("config", config)->required();
    calibrate->add_option("--total-ns", total_ns, "Fit steps 2, 3, 5, 6 and Delta t_7 to this total");
    std::vector<double> splits;
    for (int i = 4; i <= 16; ++i) splits.push_back(0.05 * i);
    calibrate->add_option("--splits", splits, "Candidate dt2/(dt2+dt3) ratios for --total-ns")
        ->delimiter(',')
        ->capture_default_str();
    add_common_flags(calibrate, o);

    std::vector<int> only;
    std::optional<double> verify_dt;
    auto* verify = app.add_subcommand("verify", "Run the acceptance checks");
    verify->add_option("--only", only, "Criterion numbers to run")->delimiter(',');
    verify->add_option("--dt-ps", verify_dt, "RK4 step for the long reproductions");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        if (*protocol) return cmd_protocol(config, o, out);
        if (*spectrum) return cmd_spectrum(config, o, sector, scan, out);
        if (*constraints) return cmd_constraints(config, o, out);
        if (*calibrate) return cmd_calibrate(config, o, total_ns, splits, out);
        if (*verify) return cmd_verify(only, verify_dt, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const TruncationError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ResourceError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const IoError& e) {
        err << "io error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const Error& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitConfig;
}

}  // namespace abhsim
