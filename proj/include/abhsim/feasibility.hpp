#pragma once

#include <optional>
#include <string>
#include <vector>

#include "abhsim/protocol.hpp"
#include "abhsim/spectra.hpp"

namespace abhsim {

struct FeasibilityInputs {
    double chi_max = 0.0;      // rad/s
    double kappa_max = 0.0;    // rad/s
    int n_min = 2;
    int n_max = 2;
    double omega_c = 0.0;      // rad/s, bare mode frequency
    double delta_omega = 0.0;  // rad/s, resonator frequency spread
    double margin = kDefaultMargin;
    int sites = 3;
    std::optional<ControlSchedule> schedule;
};

/// One inequality with the value, its bound and the margin factor used.
struct ConstraintCheck {
    std::string name;
    std::string relation;  // e.g. "value >= margin * bound"
    double value = 0.0;
    double bound = 0.0;
    double margin = 1.0;
    bool pass = true;
    /// False when the inequality does not apply (reported, never failed).
    bool applicable = true;
    std::string note;
};

struct FeasibilityReport {
    FeasibilityInputs inputs;

    /// round-half-up((3/4) omega_c / chi_max / margin)
    int n_max_bound = 0;
    double n_max_unrounded = 0.0;

    TimingBounds raw;
    DurationPlan recommended;

    /// kappa_max / (chi_max (n_min - 1)), also used as tau_2 in the step-6 split.
    double tau_star = 0.0;
    double dt6a = 0.0;  // 10 (tau_2 - tau_1) / (chi_max tau_2)
    double dt6b = 0.0;  // 10 tau_1 / (chi_max tau_2)

    /// Upper bound on the frequency spread; empty when the denominator is <= 0.
    std::optional<double> delta_omega_bound;
    /// Largest M with tau_2(M) <= tau_star.
    int m_bound = 0;
    Tau2 tau2_at_sites;

    /// Largest |d(tau/tau_2)/dt| over steps 5-6 in each region, when a schedule is given.
    std::optional<double> rate_below_tau2;
    std::optional<double> rate_above_tau2;

    std::vector<ConstraintCheck> checks;

    bool all_pass() const;
    std::vector<std::string> failures() const;
};

/// Evaluates every hardware and timing constraint. Never throws on a failed
/// constraint; only invalid inputs (non-positive rates, n_min < 2) raise ConfigError.
FeasibilityReport feasibility(const FeasibilityInputs& inputs);

/// Largest M >= 2 with tau_2(M) <= limit, or 0 when even M = 2 fails.
int max_sites_for_tau2(double limit, int search_limit = 1'000'000);

/// `key: value` text, one constraint per block of lines.
std::string to_text(const FeasibilityReport& report);

/// One-line digest: "<passed>/<total> pass" plus failing names.
std::string digest(const FeasibilityReport& report);

}  // namespace abhsim
