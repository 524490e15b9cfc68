#include "abhsim/feasibility.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "abhsim/errors.hpp"
#include "abhsim/io.hpp"

namespace abhsim {

namespace {

constexpr double kMHz = 2.0 * std::numbers::pi * 1e6;
// Beyond this tau/tau_2 the reciprocal-mode distribution no longer changes.
constexpr double kRateRegionCap = 10.0;

ConstraintCheck check(std::string name, std::string relation, double value, double bound, double margin,
                      bool pass, std::string note = {}) {
    return ConstraintCheck{std::move(name), std::move(relation), value, bound, margin, pass, true, std::move(note)};
}

void rate_scan(const FeasibilityInputs& in, const ControlSchedule& s, double t2, FeasibilityReport& r) {
    double below = 0.0, above = 0.0;
    const int samples = 2000;
    for (int n = in.n_min; n <= in.n_max; ++n) {
        for (int step = 5; step <= 6; ++step) {
            const double a = s.end_of(step - 1), b = s.end_of(step);
            double prev_t = 0.0, prev_r = 0.0;
            bool have_prev = false;
            for (int i = 0; i <= samples; ++i) {
                const double t = a + (b - a) * i / samples;
                const Controls c = s.at(t);
                if (!(c.chi > 0.0)) {
                    have_prev = false;
                    continue;
                }
                const double ratio = tau(c.kappa, c.chi, n) / t2;
                if (have_prev) {
                    const double mid = 0.5 * (ratio + prev_r);
                    const double rate = std::abs(ratio - prev_r) / (t - prev_t);
                    if (mid <= 1.0)
                        below = std::max(below, rate);
                    else if (mid <= kRateRegionCap)
                        above = std::max(above, rate);
                }
                prev_t = t;
                prev_r = ratio;
                have_prev = true;
            }
        }
    }
    r.rate_below_tau2 = below;
    r.rate_above_tau2 = above;
}

}  // namespace

int max_sites_for_tau2(double limit, int search_limit) {
    int best = 0;
    for (int m = 2; m <= search_limit; ++m) {
        const double t = tau2(m).value;
        if (t <= limit)
            best = m;
        else if (m >= 5)
            break;  // tau_2 grows monotonically from here on
    }
    return best;
}

bool FeasibilityReport::all_pass() const {
    for (const auto& c : checks)
        if (c.applicable && !c.pass) return false;
    return true;
}

std::vector<std::string> FeasibilityReport::failures() const {
    std::vector<std::string> out;
    for (const auto& c : checks)
        if (c.applicable && !c.pass) out.push_back(c.name);
    return out;
}

FeasibilityReport feasibility(const FeasibilityInputs& in) {
    if (!(in.chi_max > 0.0) || !(in.kappa_max > 0.0)) throw ConfigError("chi_max and kappa_max must be positive");
    if (!(in.omega_c > 0.0)) throw ConfigError("omega_c must be positive");
    if (in.n_min < 2 || in.n_max < in.n_min) throw ConfigError("need 2 <= n_min <= n_max");
    if (!(in.margin >= 1.0)) throw ConfigError("margin must be >= 1");
    if (in.sites < 2) throw ConfigError("sites must be at least 2");

    FeasibilityReport r;
    r.inputs = in;
    const double m = in.margin;

    r.n_max_unrounded = 0.75 * in.omega_c / in.chi_max / m;
    r.n_max_bound = static_cast<int>(std::floor(r.n_max_unrounded + 0.5));
    r.checks.push_back(check("n_max", "n_max <= round_half_up((3/4) omega_c / chi_max / margin)", in.n_max,
                             r.n_max_bound, m, in.n_max <= r.n_max_bound));

    r.recommended = recommend_durations(in.chi_max, in.kappa_max, in.n_min, in.n_max, m);
    r.raw = r.recommended.raw;

    r.tau_star = in.kappa_max / (in.chi_max * (in.n_min - 1));
    r.dt6a = 10.0 * (r.tau_star - kTau1) / (in.chi_max * r.tau_star);
    r.dt6b = 10.0 * kTau1 / (in.chi_max * r.tau_star);

    const double denom = 100.0 * (in.kappa_max - in.chi_max * (in.n_min - 1) / 4.0);
    if (denom > 0.0) {
        r.delta_omega_bound = in.chi_max * in.kappa_max / denom;
        r.checks.push_back(check("delta_omega", "delta_omega <= chi_max kappa_max / (100 [kappa_max - chi_max (n_min-1)/4])",
                                 in.delta_omega, *r.delta_omega_bound, 1.0, in.delta_omega <= *r.delta_omega_bound,
                                 "formula evaluated as written; 2pi x 1 MHz is the spread usually paired with "
                                 "chi_max/2pi >= 14 MHz and disagrees with it"));
    } else {
        ConstraintCheck c = check("delta_omega", "delta_omega <= chi_max kappa_max / (100 [kappa_max - chi_max (n_min-1)/4])",
                                  in.delta_omega, 0.0, 1.0, true, "constraint vacuous/invalid regime (denominator <= 0)");
        c.applicable = false;
        r.checks.push_back(c);
    }
    if (r.tau_star <= kTau1) {
        ConstraintCheck c = check("dt6_split", "tau_star > tau_1", r.tau_star, kTau1, 1.0, false,
                                  "tau_star at or below tau_1: the intermediate regime is not traversed");
        r.checks.push_back(c);
    }

    r.tau2_at_sites = tau2(in.sites);
    r.m_bound = max_sites_for_tau2(r.tau_star);
    r.checks.push_back(check("sites", "M <= max{M : tau_2(M) <= kappa_max / (chi_max (n_min-1))}", in.sites, r.m_bound,
                             1.0, in.sites <= r.m_bound,
                             r.tau2_at_sites.approximate ? "tau_2 at this M is approximate" : ""));

    if (in.schedule) {
        const auto& d = in.schedule->durations();
        const std::array<std::pair<int, double>, 4> pairs{{{2, std::max(r.raw.dt2, r.raw.dt6)},
                                                           {3, std::max(r.raw.dt3, r.raw.dt5)},
                                                           {5, std::max(r.raw.dt3, r.raw.dt5)},
                                                           {6, std::max(r.raw.dt2, r.raw.dt6)}}};
        for (auto [step, bound] : pairs) {
            const double v = d[static_cast<std::size_t>(step - 1)];
            r.checks.push_back(check("dt" + std::to_string(step), "dt >= margin * bound", v, bound, m, v >= m * bound));
        }
        r.checks.push_back(check("pairing_2_6", "dt2 == dt6", d[1], d[5], 1.0,
                                 std::abs(d[1] - d[5]) <= 1e-12 * std::max(d[1], d[5])));
        r.checks.push_back(check("pairing_3_5", "dt3 == dt5", d[2], d[4], 1.0,
                                 std::abs(d[2] - d[4]) <= 1e-12 * std::max(d[2], d[4])));
        rate_scan(in, *in.schedule, r.tau2_at_sites.value, r);
        r.checks.push_back(check("rate_below_tau2", "margin * |d(tau/tau_2)/dt| <= chi_max (tau/tau_2 <= 1)",
                                 *r.rate_below_tau2, in.chi_max, m, m * *r.rate_below_tau2 <= in.chi_max,
                                 "steps 5-6, n in [n_min, n_max]"));
        r.checks.push_back(check("rate_above_tau2", "margin * |d(tau/tau_2)/dt| <= 2 kappa_max (1 < tau/tau_2 <= 10)",
                                 *r.rate_above_tau2, 2.0 * in.kappa_max, m, m * *r.rate_above_tau2 <= 2.0 * in.kappa_max,
                                 "steps 5-6, n in [n_min, n_max]"));
    }
    return r;
}

std::string to_text(const FeasibilityReport& r) {
    std::ostringstream o;
    const auto& in = r.inputs;
    auto f = [](double x) { return format_double(x); };
    o << "chi_max_mhz: " << f(in.chi_max / kMHz) << '\n'
      << "kappa_max_mhz: " << f(in.kappa_max / kMHz) << '\n'
      << "omega_c_ghz: " << f(in.omega_c / kMHz / 1e3) << '\n'
      << "delta_omega_mhz: " << f(in.delta_omega / kMHz) << '\n'
      << "n_min: " << in.n_min << '\n'
      << "n_max: " << in.n_max << '\n'
      << "sites: " << in.sites << '\n'
      << "margin: " << f(in.margin) << '\n'
      << "n_max_bound: " << r.n_max_bound << '\n'
      << "n_max_unrounded: " << f(r.n_max_unrounded) << '\n'
      << "dt2_bound_s: " << f(r.raw.dt2) << '\n'
      << "dt3_bound_s: " << f(r.raw.dt3) << '\n'
      << "dt5_bound_s: " << f(r.raw.dt5) << '\n'
      << "dt6_bound_s: " << f(r.raw.dt6) << '\n'
      << "tau_star: " << f(r.tau_star) << '\n'
      << "dt6a_s: " << f(r.dt6a) << '\n'
      << "dt6b_s: " << f(r.dt6b) << '\n';
    for (int i = 0; i < kProtocolSteps; ++i)
        o << "recommended_dt" << i + 1 << "_s: " << f(r.recommended.durations[static_cast<std::size_t>(i)])
          << (i == 6 ? " (calibration window start)" : "") << '\n';
    if (r.delta_omega_bound)
        o << "delta_omega_bound_mhz: " << f(*r.delta_omega_bound / kMHz) << '\n';
    else
        o << "delta_omega_bound_mhz: vacuous\n";
    o << "delta_omega_quoted_mhz: 1\n"
      << "tau2_at_sites: " << f(r.tau2_at_sites.value) << (r.tau2_at_sites.approximate ? " (approximate)" : "") << '\n'
      << "m_bound: " << r.m_bound << '\n';
    if (r.rate_below_tau2) o << "rate_below_tau2_per_s: " << f(*r.rate_below_tau2) << '\n';
    if (r.rate_above_tau2) o << "rate_above_tau2_per_s: " << f(*r.rate_above_tau2) << '\n';
    for (const auto& c : r.checks) {
        const std::string k = "check." + c.name + ".";
        o << k << "relation: " << c.relation << '\n'
          << k << "value: " << f(c.value) << '\n'
          << k << "bound: " << f(c.bound) << '\n'
          << k << "margin: " << f(c.margin) << '\n'
          << k << "status: " << (!c.applicable ? "not_applicable" : c.pass ? "pass" : "fail") << '\n';
        if (!c.note.empty()) o << k << "note: " << c.note << '\n';
    }
    o << "summary: " << digest(r) << '\n';
    return o.str();
}

std::string digest(const FeasibilityReport& r) {
    int total = 0, passed = 0;
    for (const auto& c : r.checks) {
        if (!c.applicable) continue;
        ++total;
        if (c.pass) ++passed;
    }
    std::string s = std::to_string(passed) + "/" + std::to_string(total) + " pass";
    const auto failed = r.failures();
    if (!failed.empty()) {
        s += " (failing:";
        for (const auto& n : failed) s += " " + n;
        s += ")";
    }
    return s;
}

}  // namespace abhsim
