#include "abhsim/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "abhsim/errors.hpp"
#include "abhsim/parallel.hpp"
#include "abhsim/spectra.hpp"

namespace abhsim {

DurationPlan recommend_durations(double chi_max, double kappa_max, int n_min, int n_max, double margin,
                                 double fast_step) {
    if (n_min < 2) throw ConfigError("n_min must be at least 2");
    if (n_max < n_min) throw ConfigError("empty n range [" + std::to_string(n_min) + ", " + std::to_string(n_max) + "]");
    if (!(margin >= 1.0)) throw ConfigError("margin must be >= 1");
    if (!(chi_max > 0.0) || !(kappa_max > 0.0)) throw ConfigError("chi_max and kappa_max must be positive");
    if (!(fast_step > 0.0)) throw ConfigError("fast step duration must be positive");

    DurationPlan plan;
    plan.margin = margin;
    for (int n = n_min; n <= n_max; ++n) {
        const double e = chi_max * (n - 1);
        plan.raw.dt2 = std::max(plan.raw.dt2, 4.0 * kappa_max / (e * e));
        plan.raw.dt3 = std::max(plan.raw.dt3, e / (2.0 * kappa_max * kappa_max));
    }
    plan.raw.dt5 = 5.0 / kappa_max;
    plan.raw.dt6 = 10.0 / chi_max;

    const double d26 = margin * std::max(plan.raw.dt2, plan.raw.dt6);
    const double d35 = margin * std::max(plan.raw.dt3, plan.raw.dt5);
    plan.durations = {fast_step, d26, d35, fast_step, d35, d26, 4.0 * std::numbers::pi / chi_max};
    return plan;
}

QuantumState target_state(const InputState& psi_in, const BasisPtr& basis, std::vector<std::string>* warnings) {
    const int m = basis->sites();
    Vector sum = Vector::Zero(static_cast<Eigen::Index>(basis->dimension()));
    for (int j = 0; j < m; ++j) sum += embed_input_state(psi_in, basis, j).vector();
    sum /= std::sqrt(static_cast<double>(m));
    const double norm = sum.norm();
    if (warnings && std::abs(norm - 1.0) > 1e-12)
        warnings->push_back("target state terms overlap through the |0> component; norm " +
                            std::to_string(norm) + " corrected to 1");
    sum /= norm;
    return QuantumState::pure(basis, std::move(sum));
}

std::string to_string(Engine engine) {
    switch (engine) {
        case Engine::closed: return "closed";
        case Engine::open: return "open";
        default: return "auto";
    }
}

Engine engine_from_string(const std::string& text) {
    if (text == "auto") return Engine::automatic;
    if (text == "closed") return Engine::closed;
    if (text == "open") return Engine::open;
    throw ConfigError("unknown engine '" + text + "' (auto | closed | open)");
}

double ProtocolResult::final_fidelity() const {
    return trajectory.samples.empty() ? 0.0 : trajectory.samples.back().fidelity;
}

std::pair<double, double> ProtocolResult::peak_fidelity() const {
    double best = -1.0, at = 0.0;
    for (const auto& s : trajectory.samples)
        if (s.fidelity > best) {
            best = s.fidelity;
            at = s.t;
        }
    return {std::max(best, 0.0), at};
}

namespace {

struct Prepared {
    QuantumState initial;
    QuantumState target;
    Engine engine;
    std::vector<std::string> warnings;
};

Prepared prepare(const InputState& psi_in, const BasisPtr& basis, const std::optional<DampingModel>& damping,
                 const ProtocolOptions& options) {
    std::vector<std::string> warnings;
    if (psi_in.low_occupation_weight() > options.low_occupation_threshold)
        warnings.push_back("input weight " + std::to_string(psi_in.low_occupation_weight()) +
                           " on n < 2 is not converted by the protocol");
    QuantumState initial = embed_input_state(psi_in, basis, 0);
    QuantumState target = target_state(psi_in, basis, &warnings);
    Engine engine = options.engine;
    if (engine == Engine::automatic) engine = damping ? Engine::open : Engine::closed;
    if (engine == Engine::closed && damping)
        throw ConfigError("the closed engine cannot include damping; use engine = open or disable damping");
    return {std::move(initial), std::move(target), engine, std::move(warnings)};
}

std::vector<int> occupied_sectors(const QuantumState& psi) {
    std::vector<int> out;
    const auto& basis = psi.basis();
    for (std::size_t i = 0; i < basis->dimension(); ++i)
        if (std::abs(psi.vector()[static_cast<Eigen::Index>(i)]) > 0.0) out.push_back(basis->total(i));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

Vector restrict(const Vector& full, const std::vector<std::size_t>& indices) {
    Vector v(static_cast<Eigen::Index>(indices.size()));
    for (std::size_t k = 0; k < indices.size(); ++k) v[static_cast<Eigen::Index>(k)] = full[static_cast<Eigen::Index>(indices[k])];
    return v;
}

void scatter(const Vector& sub, const std::vector<std::size_t>& indices, Vector& full) {
    for (std::size_t k = 0; k < indices.size(); ++k) full[static_cast<Eigen::Index>(indices[k])] = sub[static_cast<Eigen::Index>(k)];
}

TrajectorySample pure_sample(const QuantumState& psi, const QuantumState& target, double t, const Controls& c) {
    TrajectorySample s;
    s.t = t;
    s.fidelity = fidelity(psi, target);
    s.trace = psi.trace();
    s.purity = 1.0;
    const int m = psi.basis()->sites();
    s.site_occupation.resize(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) s.site_occupation[static_cast<std::size_t>(j)] = psi.site_occupation(j);
    s.controls = c;
    return s;
}

// Closed engine: every occupied number sector is evolved on its own block;
// samples of the full state are rebuilt from the per-sector snapshots.
void run_closed(const Vector& start, const BasisPtr& basis, const ParametricHamiltonian& h,
                const ControlSchedule& schedule, double t0, double t1, const QuantumState& target,
                const ProtocolOptions& options, ProtocolResult& result,
                const std::vector<SectorEvolution>* resume) {
    const QuantumState start_state = QuantumState::pure(basis, start);
    std::vector<int> sectors;
    if (resume) {
        for (const auto& s : *resume) sectors.push_back(s.sector_n);
    } else {
        sectors = occupied_sectors(start_state);
    }

    std::vector<double> times;
    std::vector<std::vector<Vector>> snapshots(sectors.size());
    std::size_t steps = 0;
    for (std::size_t k = 0; k < sectors.size(); ++k) {
        const int n = sectors[k];
        const auto indices = resume ? (*resume)[k].indices : basis->sector_indices(n);
        ClosedEvolutionOptions opts;
        opts.dt = options.dt;
        opts.ledger_stride = options.ledger_stride;
        std::size_t last_done = 0;
        bool recorded = false;
        opts.observer = [&, k](std::size_t done, double t, const Vector& psi) {
            steps = std::max(steps, done);
            const bool take = options.sample_stride == 0 ? done == 0 : done % options.sample_stride == 0;
            if (!take) return;
            if (k == 0) times.push_back(t);
            snapshots[k].push_back(psi);
            last_done = done;
            recorded = true;
        };
        Vector sub = resume ? (*resume)[k].state : restrict(start, indices);
        SectorEvolution ev = evolve_sector_vector(std::move(sub), n, h.restricted(indices), schedule, t0, t1, opts);
        // The end point is always part of the trajectory.
        if (!recorded || last_done != steps) {
            if (k == 0) times.push_back(t1);
            snapshots[k].push_back(ev.state);
        }
        result.sectors.push_back(std::move(ev));
    }

    result.trajectory.sites = basis->sites();
    result.trajectory.steps = steps;
    Vector full = Vector::Zero(static_cast<Eigen::Index>(basis->dimension()));
    for (std::size_t s = 0; s < times.size(); ++s) {
        full.setZero();
        for (std::size_t k = 0; k < sectors.size(); ++k) scatter(snapshots[k][s], result.sectors[k].indices, full);
        const QuantumState psi = QuantumState::pure(basis, full);
        result.trajectory.samples.push_back(pure_sample(psi, target, times[s], schedule.at(times[s])));
        const double drift = std::abs(result.trajectory.samples.back().trace - 1.0);
        result.trajectory.max_trace_drift = std::max(result.trajectory.max_trace_drift, drift);
    }
    full.setZero();
    for (const auto& ev : result.sectors) scatter(ev.state, ev.indices, full);
    result.final_state = QuantumState::pure(basis, full);
}

ProtocolResult run_between(const QuantumState& start, const BasisPtr& basis, const ControlSchedule& schedule,
                           double t0, double t1, const std::optional<DampingModel>& damping,
                           const std::vector<double>& detuning, const ProtocolOptions& options,
                           const QuantumState& target, Engine engine,
                           const std::vector<SectorEvolution>* resume) {
    ParametricHamiltonian h(basis, detuning, options.boundary);
    ProtocolResult result{Trajectory{}, start, target, engine, {}, {}};
    if (engine == Engine::open) {
        OpenEvolutionOptions opts;
        opts.dt = options.dt;
        opts.sample_stride = options.sample_stride;
        opts.symmetrize_every = options.symmetrize_every;
        opts.positivity_every = options.positivity_every;
        opts.trace_budget = options.trace_budget;
        opts.target = target;
        OpenEvolution ev = evolve_open(start, h, schedule, t0, t1, damping, opts);
        result.final_state = std::move(ev.state);
        result.trajectory = std::move(ev.trajectory);
    } else {
        run_closed(start.vector(), basis, h, schedule, t0, t1, target, options, result, resume);
    }
    return result;
}

}  // namespace

ProtocolResult run_protocol(const InputState& psi_in, const BasisPtr& basis, const ControlSchedule& schedule,
                            const std::optional<DampingModel>& damping, const std::vector<double>& detuning,
                            const ProtocolOptions& options) {
    Prepared p = prepare(psi_in, basis, damping, options);
    const double t_end = options.stop_time ? std::min(*options.stop_time, schedule.total_time()) : schedule.total_time();
    ProtocolResult result =
        run_between(p.initial, basis, schedule, 0.0, t_end, damping, detuning, options, p.target, p.engine, nullptr);
    result.warnings = std::move(p.warnings);
    return result;
}

std::vector<std::pair<int, double>> sector_overlap_phases(const ProtocolResult& result) {
    std::vector<std::pair<int, double>> out;
    for (const auto& ev : result.sectors) {
        const Vector t = restrict(result.target.vector(), ev.indices);
        out.emplace_back(ev.sector_n, std::arg(t.dot(ev.state)));
    }
    return out;
}

Step6Snapshot run_to_step6(const InputState& psi_in, const BasisPtr& basis, const ControlSchedule& schedule,
                           const std::optional<DampingModel>& damping, const std::vector<double>& detuning,
                           const ProtocolOptions& options) {
    ProtocolOptions opts = options;
    opts.stop_time = schedule.end_of(6);
    opts.sample_stride = 0;
    opts.ledger_stride = 0;
    ProtocolResult r = run_protocol(psi_in, basis, schedule, damping, detuning, opts);
    return Step6Snapshot{std::move(r.final_state), std::move(r.sectors), r.engine};
}

namespace {

double step7_fidelity(const Step6Snapshot& snapshot, const QuantumState& target, const ControlSchedule& schedule,
                      double dt7, const std::optional<DampingModel>& damping, const std::vector<double>& detuning,
                      const ProtocolOptions& options, double dt) {
    const ControlSchedule s = schedule.with_dt7(dt7);
    ProtocolOptions opts = options;
    opts.dt = dt;
    opts.sample_stride = 0;
    opts.ledger_stride = 0;
    const auto& basis = snapshot.state.basis();
    ProtocolResult r = run_between(snapshot.state, basis, s, s.end_of(6), s.total_time(), damping, detuning, opts,
                                   target, snapshot.engine,
                                   snapshot.engine == Engine::closed ? &snapshot.sectors : nullptr);
    return fidelity(r.final_state, target);
}

struct Window {
    double lo, hi;
};

Window calibration_window(const ControlSchedule& schedule, const CalibrationOptions& c) {
    const double period = 4.0 * std::numbers::pi / schedule.chi_max();
    Window w{c.window_lo.value_or(period), c.window_hi.value_or(2.0 * period)};
    if (!(w.lo > 0.0) || !(w.hi > w.lo)) throw ConfigError("calibration window must satisfy 0 < lo < hi");
    if (c.candidates < 3) throw ConfigError("calibration needs at least 3 candidates");
    return w;
}

// Grid search followed by golden-section refinement on the bracketing cell.
template <class Eval>
std::pair<double, double> maximize(const Window& w, const CalibrationOptions& c, Eval&& coarse, Eval&& fine,
                                   std::vector<std::pair<double, double>>& scan) {
    const std::size_t n = c.candidates;
    scan.assign(n, {0.0, 0.0});
    parallel_for(n, [&](std::size_t i) {
        const double x = w.lo + (w.hi - w.lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        scan[i] = {x, coarse(x)};
    });
    // Highest interior local maximum; a rising or falling edge alone does not count.
    std::size_t best = 0;
    for (std::size_t i = 1; i + 1 < n; ++i)
        if (scan[i].second >= scan[i - 1].second && scan[i].second >= scan[i + 1].second &&
            (best == 0 || scan[i].second > scan[best].second))
            best = i;
    if (best == 0) throw DomainError("calibration window contains no interior maximum; widen window");

    double a = scan[best - 1].first, b = scan[best + 1].first;
    double x_best = scan[best].first, f_best = fine(x_best);
    if (!c.refine) return {x_best, f_best};
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = fine(x1), f2 = fine(x2);
    while (b - a > c.refine_tolerance) {
        if (f1 >= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = fine(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = fine(x2);
        }
    }
    for (auto [x, f] : {std::pair{x1, f1}, std::pair{x2, f2}})
        if (f > f_best) {
            f_best = f;
            x_best = x;
        }
    return {x_best, f_best};
}

}  // namespace

CalibrationResult calibrate_dt7(const Step6Snapshot& snapshot, const QuantumState& target,
                                const ControlSchedule& schedule, const std::optional<DampingModel>& damping,
                                const std::vector<double>& detuning, const ProtocolOptions& options,
                                const CalibrationOptions& calibration) {
    const Window w = calibration_window(schedule, calibration);
    const double scan_dt = calibration.scan_dt.value_or(options.dt);
    std::function<double(double)> coarse = [&](double x) {
        return step7_fidelity(snapshot, target, schedule, x, damping, detuning, options, scan_dt);
    };
    std::function<double(double)> fine = [&](double x) {
        return step7_fidelity(snapshot, target, schedule, x, damping, detuning, options, options.dt);
    };
    CalibrationResult out;
    out.window_lo = w.lo;
    out.window_hi = w.hi;
    auto [x, f] = maximize(w, calibration, coarse, fine, out.scan);
    out.dt7 = x;
    out.fidelity = f;
    return out;
}

TotalTimeFit fit_schedule_to_total(const InputState& psi_in, const BasisPtr& basis, const ControlSchedule& base,
                                   double total_time, const std::vector<double>& detuning,
                                   const ProtocolOptions& options, const CalibrationOptions& calibration,
                                   const std::vector<double>& splits) {
    // Shrinking steps 5-6 while step 7 grows also moves the Kerr phase, so the
    // fidelity oscillates about twice as slowly in Delta t_7 as with steps 1-6 fixed.
    const double period = 4.0 * std::numbers::pi / base.chi_max();
    CalibrationOptions cal = calibration;
    if (!cal.window_lo) cal.window_lo = period;
    if (!cal.window_hi) cal.window_hi = *cal.window_lo + 2.0 * period;
    const Window w = calibration_window(base, cal);
    const auto& d0 = base.durations();
    const double fast = d0[0] + d0[3];
    if (!(fast + w.hi < total_time)) throw ConfigError("total time must exceed the fast steps plus the calibration window");

    std::vector<double> grid = splits;
    if (grid.empty()) grid.push_back(d0[1] / (d0[1] + d0[2]));
    for (double r : grid)
        if (!(r > 0.0 && r < 1.0)) throw ConfigError("adiabatic split must lie in (0, 1)");

    auto make = [&](double split, double dt7) {
        const double budget = total_time - fast - dt7;
        StepDurations d = d0;
        d[1] = d[5] = 0.5 * split * budget;
        d[2] = d[4] = 0.5 * (1.0 - split) * budget;
        d[6] = dt7;
        return build_schedule(base.chi_max(), base.kappa_max(), d, base.kappa_path());
    };
    ProtocolOptions opts = options;
    opts.engine = Engine::closed;
    opts.sample_stride = 0;
    opts.ledger_stride = 0;
    const double scan_dt = cal.scan_dt.value_or(options.dt);

    TotalTimeFit out{make(grid.front(), w.lo), -1.0, {}, grid.front()};
    for (double split : grid) {
        auto eval = [&](double dt7, double dt) {
            ProtocolOptions o = opts;
            o.dt = dt;
            return run_protocol(psi_in, basis, make(split, dt7), std::nullopt, detuning, o).final_fidelity();
        };
        std::function<double(double)> coarse = [&](double x) { return eval(x, scan_dt); };
        std::function<double(double)> fine = [&](double x) { return eval(x, options.dt); };
        std::vector<std::pair<double, double>> scan;
        double x = 0.0, f = -1.0;
        try {
            std::tie(x, f) = maximize(w, cal, coarse, fine, scan);
        } catch (const DomainError&) {
            if (grid.size() == 1) throw;
            continue;
        }
        if (f > out.fidelity) {
            out = TotalTimeFit{make(split, x), f, std::move(scan), split};
        }
    }
    if (out.fidelity < 0.0) throw DomainError("no split gave an interior Delta t_7 maximum; widen window");
    return out;
}

std::vector<std::pair<double, double>> step7_fidelity_peaks(const Trajectory& trajectory,
                                                            const ControlSchedule& schedule) {
    const double t6 = schedule.end_of(6);
    std::vector<std::pair<double, double>> pts;
    for (const auto& s : trajectory.samples)
        if (s.t >= t6) pts.emplace_back(s.t, s.fidelity);
    std::vector<std::pair<double, double>> peaks;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const bool rising = pts[i].second > pts[i - 1].second;
        const bool last = i + 1 == pts.size();
        if (rising && (last || pts[i].second >= pts[i + 1].second)) peaks.push_back(pts[i]);
    }
    return peaks;
}

}  // namespace abhsim
