#pragma once

#include <optional>
#include <string>
#include <vector>

#include "abhsim/dynamics.hpp"
#include "abhsim/feasibility.hpp"
#include "abhsim/protocol.hpp"
#include "abhsim/schedule.hpp"

namespace abhsim {

/// Run configuration. Values are stored in file units (MHz, GHz, ns, us, ps)
/// so that parse_config(serialize(c)) == c holds bit for bit; the *_radps()
/// and *_seconds() accessors convert to the SI units used by the library.
///
/// File format: one `key = value` per line, `#` starts a comment.
///
///   name                     free text
///   lattice.sites            M
///   lattice.per_site_cap     cap (default: largest n of input_state)
///   lattice.total_cap        optional
///   lattice.boundary         periodic | open
///   hardware.chi_max_mhz     chi_max / 2pi
///   hardware.kappa_max_mhz   kappa_max / 2pi
///   hardware.omega_c_ghz     omega_c / 2pi (default 7.5)
///   hardware.delta_omega_mhz frequency spread for the constraint report (default 1)
///   damping                  on | none (default on)
///   damping.t1_us            T1 (default 20)
///   damping.tphi_zero_s      T_phi at chi = 0 (default 1)
///   damping.tphi_max_us      T_phi at chi_max (default 300)
///   disorder_mhz             none | d1, d2, ..., dM   (delta omega_j / 2pi)
///   input_state              n:re:im, n:re:im, ...     (normalized on use)
///   schedule                 explicit | auto
///   schedule.durations_ns    seven values (explicit)
///   schedule.margin          margin for auto (default 10)
///   schedule.kappa_path      uniform_sign | sign_flip
///   schedule.dt7_ns          optional Delta t_7 for auto (default: calibrate)
///   schedule.n_min, .n_max   optional n range for auto/constraints
///   integrator.dt_ps         RK4 step (default 1)
///   integrator.sample_stride steps between samples (default 100)
///   integrator.engine        auto | closed | open
///   integrator.symmetrize_every, integrator.positivity_every, integrator.trace_budget
///   calibration.candidates, calibration.window_lo_ns, calibration.window_hi_ns,
///   calibration.scan_dt_ps
///   outputs.dir, outputs.trajectory, outputs.summary
struct RunConfig {
    std::string name = "run";

    int sites = 3;
    std::optional<int> per_site_cap;
    std::optional<int> total_cap;
    Boundary boundary = Boundary::periodic;

    double chi_max_mhz = 0.0;
    double kappa_max_mhz = 0.0;
    double omega_c_ghz = 7.5;
    double delta_omega_mhz = 1.0;

    bool damping_enabled = true;
    double t1_us = 20.0;
    double tphi_zero_s = 1.0;
    double tphi_max_us = 300.0;

    std::vector<double> disorder_mhz;  // empty = none

    struct Amplitude {
        int n = 0;
        double re = 0.0;
        double im = 0.0;
        bool operator==(const Amplitude&) const = default;
    };
    std::vector<Amplitude> input_state;

    bool schedule_auto = false;
    std::vector<double> durations_ns;  // explicit: 7 entries
    double margin = kDefaultMargin;
    KappaPath kappa_path = KappaPath::uniform_sign;
    std::optional<double> dt7_ns;
    std::optional<int> n_min;
    std::optional<int> n_max;

    double dt_ps = 1.0;
    std::size_t sample_stride = 100;
    Engine engine = Engine::automatic;
    std::size_t symmetrize_every = 1000;
    std::size_t positivity_every = 0;
    double trace_budget = 1e-6;

    std::size_t calibration_candidates = 200;
    std::optional<double> window_lo_ns;
    std::optional<double> window_hi_ns;
    std::optional<double> scan_dt_ps;

    std::string out_dir = ".";
    std::string trajectory_file = "trajectory.csv";
    std::string summary_file = "summary.txt";

    bool operator==(const RunConfig&) const = default;

    double chi_max_radps() const;
    double kappa_max_radps() const;
    double omega_c_radps() const;
    double delta_omega_radps() const;
    double dt_seconds() const { return dt_ps * 1e-12; }

    /// Throws ConfigError naming the offending key.
    void validate() const;

    InputState input() const;
    LatticeSpec lattice() const;
    std::optional<DampingModel> damping() const;
    /// Per-site detunings in rad/s (zeros when no disorder).
    std::vector<double> detuning_radps() const;
    /// n range from the config or from the input state components with n >= 2.
    std::pair<int, int> n_range() const;

    ProtocolOptions protocol_options() const;
    CalibrationOptions calibration_options() const;
    FeasibilityInputs feasibility_inputs() const;
};

/// Parses the key-value text. Throws ConfigError with line number and key.
RunConfig parse_config(const std::string& text);

/// Inverse of parse_config; numbers written with 17 significant digits.
std::string serialize(const RunConfig& config);

/// Loads `path`, `path` + ".cfg", or a built-in preset of that name (the
/// directory part is ignored for built-ins, so "presets/sim1" resolves even
/// when run outside the source tree). Throws ConfigError if none exist.
RunConfig load_config(const std::string& path);

/// Names of the built-in presets.
std::vector<std::string> preset_names();
/// Text of a built-in preset, or nullopt.
std::optional<std::string> preset_text(const std::string& name);

/// Schedule for the config: explicit durations, or recommend_durations with
/// Delta t_7 from `dt7_ns` (auto without dt7 needs `calibrated_dt7`).
ControlSchedule make_schedule(const RunConfig& config,
                              std::optional<double> calibrated_dt7 = std::nullopt);

}  // namespace abhsim
