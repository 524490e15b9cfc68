#pragma once

#include <array>
#include <string>
#include <vector>

#include "abhsim/operators.hpp"

namespace abhsim {

inline constexpr int kProtocolSteps = 7;
using StepDurations = std::array<double, kProtocolSteps>;

/// Sign of the hopping during steps 2-3.
///
/// `uniform_sign` keeps kappa = +kappa_max from step 2 through step 6 (step 4
/// holds it), so the localized ground state feeds the zero-quasimomentum
/// superfluid and then the k = 0 W state. `sign_flip` uses -kappa_max in
/// steps 2-3 and ramps to +kappa_max in step 4.
enum class KappaPath { uniform_sign, sign_flip };

std::string to_string(KappaPath path);
KappaPath kappa_path_from_string(const std::string& text);

/// One linear ramp of the three controls.
struct Segment {
    double t_start = 0.0;
    double duration = 0.0;
    Controls begin;
    Controls end;

    double t_end() const { return t_start + duration; }
    Controls at(double t) const;
};

/// The seven-step control program, piecewise linear in time.
///
///   1  chi1: 0 -> chi_max                 (kappa = 0, chi = 0)
///   2  kappa: 0 -> s kappa_max            (chi1 = chi_max)
///   3  chi1: chi_max -> 0                 (kappa = s kappa_max)
///   4  kappa: s kappa_max -> kappa_max    (chi1 = chi = 0)
///   5  chi1 = chi: 0 -> chi_max           (kappa = kappa_max)
///   6  kappa: kappa_max -> 0
///   7  chi1 = chi: chi_max -> 0
///
/// with s = +1 for KappaPath::uniform_sign and s = -1 for sign_flip.
class ControlSchedule {
public:
    ControlSchedule(double chi_max, double kappa_max, const StepDurations& durations,
                    KappaPath path = KappaPath::uniform_sign);

    double chi_max() const noexcept { return chi_max_; }
    double kappa_max() const noexcept { return kappa_max_; }
    KappaPath kappa_path() const noexcept { return path_; }
    const StepDurations& durations() const noexcept { return durations_; }
    const std::array<Segment, kProtocolSteps>& segments() const noexcept { return segments_; }

    /// Total time T.
    double total_time() const noexcept { return segments_.back().t_end(); }
    /// Time at the end of step `step` (1-based); end_of(0) == 0.
    double end_of(int step) const;
    /// 1-based step containing t (boundaries belong to the earlier step).
    int step_at(double t) const;
    /// Controls at time t, clamped to [0, T].
    Controls at(double t) const;

    /// Copy with Delta t_7 replaced.
    ControlSchedule with_dt7(double dt7) const;
    /// Copy with steps 1-6 scaled by `factor` (Delta t_7 untouched).
    ControlSchedule with_scaled_first_six(double factor) const;

private:
    double chi_max_;
    double kappa_max_;
    KappaPath path_;
    StepDurations durations_;
    std::array<Segment, kProtocolSteps> segments_;
};

/// Validating factory: throws ConfigError for non-positive durations or controls.
ControlSchedule build_schedule(double chi_max, double kappa_max, const StepDurations& durations,
                               KappaPath path = KappaPath::uniform_sign);

}  // namespace abhsim
