#pragma once

#include <optional>
#include <string>
#include <vector>

#include "abhsim/dynamics.hpp"
#include "abhsim/schedule.hpp"
#include "abhsim/state.hpp"

namespace abhsim {

/// Duration of the fast steps 1 and 4 (controls retune in a few ns).
inline constexpr double kFastStepFloor = 3e-9;
/// Factor standing in for "much greater than" in every timing bound.
inline constexpr double kDefaultMargin = 10.0;

/// Adiabatic timing bounds before the margin is applied, seconds.
struct TimingBounds {
    double dt2 = 0.0;  // max_n 4 kappa / [chi (n-1)]^2
    double dt3 = 0.0;  // max_n chi (n-1) / (2 kappa^2)
    double dt5 = 0.0;  // 5 / kappa
    double dt6 = 0.0;  // 10 / chi
};

struct DurationPlan {
    TimingBounds raw;
    double margin = kDefaultMargin;
    /// Steps 1-6 final; entry 6 holds the start of the Delta t_7 search window
    /// (one full Kerr period, 4 pi / chi_max) until calibrated.
    StepDurations durations{};
};

/// Timing bounds for n in [n_min, n_max], scaled by `margin`, with the
/// pairings Delta t_2 = Delta t_6 and Delta t_3 = Delta t_5 enforced.
/// Throws ConfigError for an empty range, n_min < 2 or margin < 1.
DurationPlan recommend_durations(double chi_max, double kappa_max, int n_min, int n_max,
                                 double margin = kDefaultMargin,
                                 double fast_step = kFastStepFloor);

/// (1/sqrt(M)) sum_j |psi_in>_j prod_{r != j} |0>_r, normalized. A
/// non-negligible |0> component makes the terms overlap; the norm correction
/// is reported through `warnings`.
QuantumState target_state(const InputState& psi_in, const BasisPtr& basis,
                          std::vector<std::string>* warnings = nullptr);

enum class Engine { automatic, closed, open };

std::string to_string(Engine engine);
Engine engine_from_string(const std::string& text);

struct ProtocolOptions {
    double dt = 1e-12;
    std::size_t sample_stride = 100;
    Engine engine = Engine::automatic;
    Boundary boundary = Boundary::periodic;
    /// Closed engine: steps between phase-ledger samples (0 = off).
    std::size_t ledger_stride = 10;
    /// Open engine settings.
    std::size_t symmetrize_every = 1000;
    std::size_t positivity_every = 0;
    double trace_budget = 1e-6;
    double low_occupation_threshold = kLowOccupationThreshold;
    /// Stop after this time instead of T (e.g. to save the state at t_6).
    std::optional<double> stop_time;
};

struct ProtocolResult {
    Trajectory trajectory;
    QuantumState final_state;
    QuantumState target;
    Engine engine = Engine::closed;
    /// Closed engine only: per-sector evolution with phase ledgers.
    std::vector<SectorEvolution> sectors;
    std::vector<std::string> warnings;

    double final_fidelity() const;
    /// Highest sampled fidelity and its time.
    std::pair<double, double> peak_fidelity() const;
};

/// Prepares the input on site 1, evolves through the schedule and reports the
/// fidelity with target_state at every sample. The automatic engine picks
/// the sector-decomposed pure-state engine when `damping` is empty.
ProtocolResult run_protocol(const InputState& psi_in, const BasisPtr& basis,
                            const ControlSchedule& schedule,
                            const std::optional<DampingModel>& damping,
                            const std::vector<double>& detuning,
                            const ProtocolOptions& options = {});

/// Per-sector phase deviation from the target, arg <target_n|psi_n(T)>, of a
/// closed run as (n, phase) pairs in ascending n. For a single-Fock input this
/// is arg <W_n|psi_n(T)>.
std::vector<std::pair<int, double>> sector_overlap_phases(const ProtocolResult& result);

/// State saved at the end of step 6, from which step 7 is rerun.
struct Step6Snapshot {
    QuantumState state;
    std::vector<SectorEvolution> sectors;  // closed engine
    Engine engine = Engine::closed;
};

Step6Snapshot run_to_step6(const InputState& psi_in, const BasisPtr& basis,
                           const ControlSchedule& schedule,
                           const std::optional<DampingModel>& damping,
                           const std::vector<double>& detuning,
                           const ProtocolOptions& options = {});

struct CalibrationOptions {
    /// Window [lo, hi] for Delta t_7; defaults to [4 pi/chi_max, 8 pi/chi_max].
    std::optional<double> window_lo;
    std::optional<double> window_hi;
    std::size_t candidates = 200;
    /// Integration step for the candidate scans (defaults to the run dt).
    std::optional<double> scan_dt;
    /// Golden-section refinement around the best grid point.
    bool refine = true;
    /// Golden-section stops when the bracket is narrower than this (seconds).
    double refine_tolerance = 1e-13;
};

struct CalibrationResult {
    double dt7 = 0.0;
    double fidelity = 0.0;
    double window_lo = 0.0;
    double window_hi = 0.0;
    /// Scanned (dt7, fidelity) grid.
    std::vector<std::pair<double, double>> scan;
};

/// Scans Delta t_7 over the window, rerunning only step 7 from `snapshot`,
/// and returns the highest interior local maximum of the final fidelity,
/// refined by golden section. Throws DomainError("widen window") when the
/// grid has no interior maximum.
CalibrationResult calibrate_dt7(const Step6Snapshot& snapshot, const QuantumState& target,
                                const ControlSchedule& schedule,
                                const std::optional<DampingModel>& damping,
                                const std::vector<double>& detuning,
                                const ProtocolOptions& options,
                                const CalibrationOptions& calibration = {});

struct TotalTimeFit {
    ControlSchedule schedule;
    double fidelity = 0.0;
    /// (Delta t_7, fidelity) grid of the chosen split.
    std::vector<std::pair<double, double>> scan;
    /// Delta t_2 / (Delta t_2 + Delta t_3) of the chosen schedule.
    double split = 0.0;
};

/// Fits a schedule of total length `total_time` (closed engine). Steps 1 and 4
/// keep their durations from `base`; the rest of the budget is shared by the
/// paired adiabatic steps, Delta t_2 = Delta t_6 = split B/2 and
/// Delta t_3 = Delta t_5 = (1 - split) B/2 with B = T - Delta t_1 - Delta t_4
/// - Delta t_7. For each split, Delta t_7 is scanned over the window (default
/// [4 pi/chi_max, 12 pi/chi_max]) and the highest interior maximum is kept;
/// the split/Delta t_7 pair with the highest final fidelity wins. An empty
/// `splits` uses the proportions of `base`.
TotalTimeFit fit_schedule_to_total(const InputState& psi_in, const BasisPtr& basis,
                                   const ControlSchedule& base, double total_time,
                                   const std::vector<double>& detuning,
                                   const ProtocolOptions& options,
                                   const CalibrationOptions& calibration = {},
                                   const std::vector<double>& splits = {});

/// Local maxima of the fidelity column during step 7, in time order; the
/// final sample counts when it is not lower than its predecessor.
std::vector<std::pair<double, double>> step7_fidelity_peaks(const Trajectory& trajectory,
                                                            const ControlSchedule& schedule);

}  // namespace abhsim
