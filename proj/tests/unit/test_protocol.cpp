#include <doctest.h>

#include <numbers>

#include "abhsim/config.hpp"
#include "abhsim/errors.hpp"
#include "abhsim/feasibility.hpp"
#include "abhsim/protocol.hpp"
#include "abhsim/spectra.hpp"

using namespace abhsim;

namespace {

constexpr double kMHz = 2.0 * std::numbers::pi * 1e6;
constexpr double kGHz = 1e3 * kMHz;

BasisPtr ring(int m, int cap) { return build_basis(LatticeSpec{m, cap, std::nullopt}); }

const StepDurations kDurations{3e-9, 20e-9, 25e-9, 3e-9, 25e-9, 20e-9, 10e-9};

bool same(const Controls& a, const Controls& b, double tol) {
    return std::abs(a.chi1 - b.chi1) <= tol && std::abs(a.chi - b.chi) <= tol && std::abs(a.kappa - b.kappa) <= tol;
}

}  // namespace

TEST_CASE("schedule endpoints and step pattern") {
    const double chi = 100 * kMHz, kappa = 30 * kMHz;
    const auto s = build_schedule(chi, kappa, kDurations);
    const double tol = 1e-9 * chi;
    CHECK(same(s.at(0.0), Controls{0, 0, 0}, tol));
    CHECK(same(s.at(3e-9), Controls{chi, 0, 0}, tol));
    CHECK(same(s.at(s.total_time()), Controls{0, 0, 0}, tol));
    CHECK(s.total_time() == doctest::Approx(106e-9));
    CHECK(same(s.at(s.end_of(2)), Controls{chi, 0, kappa}, tol));
    CHECK(same(s.at(s.end_of(3)), Controls{0, 0, kappa}, tol));
    CHECK(same(s.at(s.end_of(5)), Controls{chi, chi, kappa}, tol));
    CHECK(same(s.at(s.end_of(6)), Controls{chi, chi, 0}, tol));
    CHECK(s.step_at(3e-9) == 1);
    CHECK(s.step_at(3.0001e-9) == 2);

    const auto flip = build_schedule(chi, kappa, kDurations, KappaPath::sign_flip);
    CHECK(same(flip.at(flip.end_of(2)), Controls{chi, 0, -kappa}, tol));
    CHECK(same(flip.at(flip.end_of(4)), Controls{0, 0, kappa}, tol));
    CHECK(same(flip.at(flip.end_of(3) + 1.5e-9), Controls{0, 0, 0}, tol));

    CHECK(s.with_dt7(5e-9).total_time() == doctest::Approx(101e-9));
    CHECK(s.with_scaled_first_six(2.0).end_of(6) == doctest::Approx(2.0 * s.end_of(6)));
    CHECK(kappa_path_from_string(to_string(KappaPath::sign_flip)) == KappaPath::sign_flip);
    CHECK_THROWS_AS(kappa_path_from_string("sideways"), ConfigError);
}

TEST_CASE("schedule is continuous") {
    for (auto path : {KappaPath::uniform_sign, KappaPath::sign_flip}) {
        const auto s = build_schedule(100 * kMHz, 30 * kMHz, kDurations, path);
        const double h = 1e-15;
        for (int k = 1; k < kProtocolSteps; ++k) {
            const double t = s.end_of(k);
            CHECK(same(s.at(t - h), s.at(t + h), 1e-3 * kMHz));
        }
        // Largest jump between fine samples is bounded by the steepest ramp.
        double worst = 0.0;
        for (int i = 1; i <= 10000; ++i) {
            const auto a = s.at((i - 1) * s.total_time() / 10000), b = s.at(i * s.total_time() / 10000);
            worst = std::max({worst, std::abs(a.chi1 - b.chi1), std::abs(a.chi - b.chi), std::abs(a.kappa - b.kappa)});
        }
        CHECK(worst <= 100 * kMHz * (s.total_time() / 10000) / 3e-9 * 1.0001);
    }
}

TEST_CASE("schedule validation") {
    StepDurations bad = kDurations;
    bad[3] = 0.0;
    CHECK_THROWS_AS(build_schedule(100 * kMHz, 30 * kMHz, bad), ConfigError);
    bad[3] = -1e-9;
    CHECK_THROWS_AS(build_schedule(100 * kMHz, 30 * kMHz, bad), ConfigError);
    CHECK_THROWS_AS(build_schedule(0.0, 30 * kMHz, kDurations), ConfigError);
    CHECK_THROWS_AS(build_schedule(100 * kMHz, -1.0, kDurations), ConfigError);
}

TEST_CASE("recommended durations") {
    const double chi = 100 * kMHz, kappa = 30 * kMHz;
    const auto p = recommend_durations(chi, kappa, 2, 3);
    CHECK(p.raw.dt5 == doctest::Approx(26.5e-9).epsilon(2e-3));
    CHECK(p.raw.dt6 == doctest::Approx(15.9e-9).epsilon(2e-3));
    CHECK(recommend_durations(chi, kappa, 2, 2).raw.dt2 == doctest::Approx(1.91e-9).epsilon(3e-3));
    CHECK(p.raw.dt2 == doctest::Approx(4 * kappa / (chi * chi)));
    CHECK(p.raw.dt3 == doctest::Approx(chi * 2 / (2 * kappa * kappa)));

    const auto& d = p.durations;
    CHECK(d[0] == kFastStepFloor);
    CHECK(d[3] == kFastStepFloor);
    CHECK(d[1] == d[5]);
    CHECK(d[2] == d[4]);
    CHECK(d[1] == doctest::Approx(10 * std::max(p.raw.dt2, p.raw.dt6)));
    CHECK(d[2] == doctest::Approx(10 * std::max(p.raw.dt3, p.raw.dt5)));
    CHECK(d[6] == doctest::Approx(4 * std::numbers::pi / chi));

    CHECK_THROWS_AS(recommend_durations(chi, kappa, 3, 2), ConfigError);
    CHECK_THROWS_AS(recommend_durations(chi, kappa, 1, 3), ConfigError);
    CHECK_THROWS_AS(recommend_durations(chi, kappa, 2, 3, 0.5), ConfigError);
}

TEST_CASE("target state") {
    const auto b2 = ring(2, 2);
    const auto t2 = target_state(InputState({{2, 1.0}}), b2).vector();
    CHECK(std::abs(t2[static_cast<Eigen::Index>(*b2->index_of(Occupation{2, 0}))] - 1.0 / std::sqrt(2.0)) < 1e-15);
    CHECK(std::abs(t2[static_cast<Eigen::Index>(*b2->index_of(Occupation{0, 2}))] - 1.0 / std::sqrt(2.0)) < 1e-15);

    const auto b = ring(3, 3);
    const InputState mix({{2, 1.0}, {3, 1.0}});
    const auto t = target_state(mix, b).vector();
    CHECK(t.norm() == doctest::Approx(1.0).epsilon(1e-12));
    for (Occupation o : {Occupation{2, 0, 0}, Occupation{0, 3, 0}, Occupation{0, 0, 2}})
        CHECK(std::abs(t[static_cast<Eigen::Index>(*b->index_of(o))] - 1.0 / std::sqrt(6.0)) < 1e-14);

    for (int n = 1; n <= 3; ++n) {
        const auto w = w_state(b, n, 0).vector();
        CHECK((target_state(InputState({{n, 1.0}}), b).vector() - w).norm() < 1e-14);
    }

    std::vector<std::string> warnings;
    const auto with_vacuum = target_state(InputState({{0, 0.6}, {2, 0.8}}), b, &warnings);
    CHECK(with_vacuum.vector().norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_FALSE(warnings.empty());
}

TEST_CASE("without hopping the input never leaves site 1") {
    const auto b = ring(3, 3);
    const auto s = build_schedule(100 * kMHz, 0.0, kDurations);
    ProtocolOptions o;
    o.dt = 5e-12;
    const auto r = run_protocol(InputState({{2, 1.0}}), b, s, std::nullopt, {0, 0, 0}, o);
    CHECK(r.final_fidelity() == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    CHECK(r.final_state.site_occupation(0) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("engines agree without damping") {
    const auto b = ring(2, 3);
    const auto s = build_schedule(100 * kMHz, 30 * kMHz, kDurations);
    ProtocolOptions o;
    o.dt = 2e-12;
    o.engine = Engine::closed;
    const InputState in({{2, 1.0}, {3, 1.0}});
    const auto closed = run_protocol(in, b, s, std::nullopt, {0, 0}, o);
    o.engine = Engine::open;
    const auto open = run_protocol(in, b, s, std::nullopt, {0, 0}, o);
    CHECK(closed.engine == Engine::closed);
    CHECK(open.engine == Engine::open);
    CHECK(std::abs(closed.final_fidelity() - open.final_fidelity()) < 1e-8);
    CHECK(closed.trajectory.samples.size() == open.trajectory.samples.size());
    CHECK(engine_from_string(to_string(Engine::open)) == Engine::open);
}

TEST_CASE("calibration on a two-site ring") {
    const auto b = ring(2, 3);
    const double chi = 100 * kMHz, kappa = 30 * kMHz;
    const auto plan = recommend_durations(chi, kappa, 2, 3);
    const auto s = build_schedule(chi, kappa, plan.durations);
    ProtocolOptions o;
    o.dt = 2e-12;
    o.engine = Engine::closed;
    const std::vector<double> det{0.0, 0.0};

    SUBCASE("mixed input: reported maximum beats both window ends") {
        const InputState in({{2, 1.0}, {3, 1.0}});
        const auto snap = run_to_step6(in, b, s, std::nullopt, det, o);
        CalibrationOptions c;
        c.candidates = 60;
        const auto r = calibrate_dt7(snap, target_state(in, b), s, std::nullopt, det, o, c);
        CHECK(r.window_lo == doctest::Approx(4 * std::numbers::pi / chi));
        CHECK(r.window_hi == doctest::Approx(8 * std::numbers::pi / chi));
        CHECK(r.scan.size() == 60);
        CHECK(r.dt7 > r.window_lo);
        CHECK(r.dt7 < r.window_hi);
        CHECK(r.fidelity >= r.scan.front().second);
        CHECK(r.fidelity >= r.scan.back().second);

        const auto rerun = run_protocol(in, b, s.with_dt7(r.dt7), std::nullopt, det, o);
        CHECK(rerun.final_fidelity() == doctest::Approx(r.fidelity).epsilon(1e-6));
    }

    SUBCASE("single Fock input: every step-7 timing is an equivalent peak") {
        const InputState in({{2, 1.0}});
        const auto snap = run_to_step6(in, b, s, std::nullopt, det, o);
        CalibrationOptions c;
        c.candidates = 20;
        c.refine = false;
        double lo = 1.0, hi = 0.0;
        try {
            const auto r = calibrate_dt7(snap, target_state(in, b), s, std::nullopt, det, o, c);
            for (const auto& [dt7, f] : r.scan) {
                lo = std::min(lo, f);
                hi = std::max(hi, f);
            }
        } catch (const DomainError&) {
            // A perfectly flat scan has no interior maximum; compare two timings directly.
            for (double dt7 : {4 * std::numbers::pi / chi, 7 * std::numbers::pi / chi}) {
                const double f = run_protocol(in, b, s.with_dt7(dt7), std::nullopt, det, o).final_fidelity();
                lo = std::min(lo, f);
                hi = std::max(hi, f);
            }
        }
        CHECK(hi - lo <= 1e-9);
    }
}

TEST_CASE("step-7 peaks") {
    const auto s = build_schedule(100 * kMHz, 30 * kMHz, kDurations);
    Trajectory tr;
    tr.sites = 3;
    const double t6 = s.end_of(6);
    const std::vector<double> f{0.9, 0.1, 0.5, 0.2, 0.7, 0.3, 0.4};
    tr.samples.push_back({t6 - 1e-9, 0.99, 1, 1, {0, 0, 0}, {}});
    for (std::size_t i = 0; i < f.size(); ++i)
        tr.samples.push_back({t6 + i * (s.durations()[6] / (f.size() - 1)), f[i], 1, 1, {0, 0, 0}, {}});
    const auto p = step7_fidelity_peaks(tr, s);
    REQUIRE(p.size() == 3);
    CHECK(p[0].second == 0.5);
    CHECK(p[1].second == 0.7);
    CHECK(p[2].second == 0.4);
}

TEST_CASE("feasibility examples") {
    FeasibilityInputs in;
    in.omega_c = 7.5 * kGHz;
    in.kappa_max = 30 * kMHz;
    in.delta_omega = 1 * kMHz;
    in.n_min = 2;
    in.n_max = 3;

    in.chi_max = 14 * kMHz;
    const auto r14 = feasibility(in);
    CHECK(r14.n_max_bound == 40);
    CHECK(r14.m_bound == 42);
    in.chi_max = 25 * kMHz;
    CHECK(feasibility(in).n_max_bound == 23);
    in.chi_max = 100 * kMHz;
    const auto r100 = feasibility(in);
    CHECK(r100.n_max_bound == 6);
    CHECK(r100.tau_star == doctest::Approx(0.3));
    CHECK(r100.dt6a + r100.dt6b == doctest::Approx(10.0 / in.chi_max));

    // kappa_max - chi_max (n_min - 1)/4 < 0: the spread bound does not apply.
    in.kappa_max = 10 * kMHz;
    const auto vac = feasibility(in);
    CHECK_FALSE(vac.delta_omega_bound.has_value());
    bool reported = false;
    for (const auto& c : vac.checks)
        if (!c.applicable) {
            reported = true;
            CHECK(c.pass);
        }
    CHECK(reported);

    for (const auto& c : r100.checks) CHECK(c.margin >= 1.0);
    CHECK(to_text(r100).find("n_max_bound: 6") != std::string::npos);
    CHECK(max_sites_for_tau2(0.25 + 1e-12) == 4);
    CHECK(max_sites_for_tau2(0.2) == 0);

    in.chi_max = 0.0;
    CHECK_THROWS_AS(feasibility(in), ConfigError);
}

TEST_CASE("adiabatic following with the recommended durations") {
    // The 106.4 ns preset is about 8x shorter than these bounds and dips to
    // ~0.95 in step 3; the property is checked where the bounds are met.
    const auto cfg = load_config("sim1_nodamp");
    const auto basis = build_basis(cfg.lattice());
    const auto plan = recommend_durations(cfg.chi_max_radps(), cfg.kappa_max_radps(), 2, 3);
    const auto s = build_schedule(cfg.chi_max_radps(), cfg.kappa_max_radps(), plan.durations);
    auto o = cfg.protocol_options();
    o.engine = Engine::closed;
    o.dt = 2e-12;
    o.ledger_stride = 5;
    const auto r = run_protocol(cfg.input(), basis, s, std::nullopt, cfg.detuning_radps(), o);
    REQUIRE(r.sectors.size() == 2);
    for (const auto& sec : r.sectors)
        for (int step : {2, 3, 5, 6}) {
            INFO("sector " << sec.sector_n << " step " << step);
            CHECK(sec.ledger.min_population(s.end_of(step - 1), s.end_of(step)) >= 0.98);
        }
}
