#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <regex>
#include <sstream>

#include "abhsim/cli.hpp"
#include "abhsim/config.hpp"
#include "abhsim/errors.hpp"
#include "abhsim/io.hpp"

using namespace abhsim;

namespace {

std::string error_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

const std::string kMinimal =
    "lattice.sites = 2\nhardware.chi_max_mhz = 100\nhardware.kappa_max_mhz = 30\ninput_state = 2:1\n"
    "schedule = explicit\nschedule.durations_ns = 3, 20, 25, 3, 25, 20, 10\n";

int run_cli(std::vector<std::string> args, std::string* out_text = nullptr) {
    args.insert(args.begin(), "abhsim");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
    if (out_text) *out_text = out.str();
    return code;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

}  // namespace

TEST_CASE("presets load with the published parameters") {
    const auto names = preset_names();
    CHECK(std::find(names.begin(), names.end(), "sim1") != names.end());
    CHECK(std::find(names.begin(), names.end(), "sim2") != names.end());

    const auto s1 = load_config("presets/sim1");
    CHECK(s1.sites == 3);
    CHECK(s1.per_site_cap == 3);
    CHECK(s1.chi_max_mhz == 100.0);
    CHECK(s1.kappa_max_mhz == 30.0);
    CHECK(s1.t1_us == 20.0);
    CHECK(s1.chi_max_radps() == doctest::Approx(2 * std::numbers::pi * 1e8));
    const auto in = s1.input();
    CHECK(in.original_norm() == doctest::Approx(std::sqrt(2.0)));
    CHECK(make_schedule(s1).total_time() == doctest::Approx(106.4e-9).epsilon(1e-9));

    const auto s2 = load_config("sim2");
    CHECK(s2.chi_max_mhz == 120.0);
    CHECK(s2.per_site_cap == 4);
    REQUIRE(s2.input_state.size() == 3);
    CHECK(s2.input_state[2].n == 4);
    CHECK(std::atan2(s2.input_state[2].im, s2.input_state[2].re) == doctest::Approx(std::numbers::pi / 9));
    CHECK(std::hypot(s2.input_state[1].re, s2.input_state[1].im) /
              std::hypot(s2.input_state[0].re, s2.input_state[0].im) ==
          doctest::Approx(2.0));
}

TEST_CASE("config round trip") {
    for (const auto& name : preset_names()) {
        INFO(name);
        const auto c = load_config(name);
        const auto text = serialize(c);
        CHECK(parse_config(text) == c);
        CHECK(serialize(parse_config(text)) == text);
    }
    auto c = parse_config(kMinimal);
    c.disorder_mhz = {0.1, 0.0 / 3.0, -1.0 / 3.0};
    c.sites = 3;
    c.total_cap = 5;
    c.dt7_ns = 1.0 / 7.0;
    c.window_lo_ns = 12.5;
    CHECK(parse_config(serialize(c)) == c);
}

TEST_CASE("config errors name the key") {
    CHECK(error_of(kMinimal + "bogus.key = 3\n").find("bogus.key") != std::string::npos);
    CHECK(error_of(kMinimal + "bogus.key = 3\n").find("line 7") != std::string::npos);
    CHECK(error_of(kMinimal + "damping.t1_us = -5\n").find("damping.t1_us") != std::string::npos);
    CHECK(error_of(kMinimal + "lattice.sites = 4\n").find("duplicate") != std::string::npos);
    CHECK(error_of("lattice.sites = 2\n").find("missing") != std::string::npos);
    CHECK(error_of(kMinimal + "integrator.dt_ps = abc\n").find("integrator.dt_ps") != std::string::npos);
    CHECK(error_of(kMinimal + "disorder_mhz = 1, 2, 3\n").find("disorder_mhz") != std::string::npos);
    CHECK(error_of(kMinimal + "garbage line\n").find("line 7") != std::string::npos);
    CHECK_THROWS_AS(load_config("/nonexistent/definitely_not_here"), ConfigError);
    CHECK_THROWS_AS(load_config(std::string(ABHSIM_SOURCE_DIR) + "/tests/data/bad_t1.cfg"), ConfigError);
}

TEST_CASE("derived settings") {
    auto c = parse_config(kMinimal + "disorder_mhz = 0.5, -0.5\n");
    const auto det = c.detuning_radps();
    CHECK(det[0] == doctest::Approx(std::numbers::pi * 1e6));
    CHECK(det[1] == doctest::Approx(-std::numbers::pi * 1e6));
    CHECK(c.damping().has_value());
    CHECK(c.damping()->t1 == doctest::Approx(20e-6));
    CHECK(c.lattice().per_site_cap == 2);
    CHECK(c.n_range() == std::pair{2, 2});
    CHECK(c.protocol_options().dt == doctest::Approx(1e-12));
    c.damping_enabled = false;
    CHECK_FALSE(c.damping().has_value());
}

TEST_CASE("number formatting") {
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(format_double(1.064e-7) == "1.064e-07");
    CHECK(format_double(1.0 / 3.0) == "0.33333333333333331");
    CHECK(format_double(0.0) == "0");
    CHECK(std::stod(format_double(std::numbers::pi)) == std::numbers::pi);
}

TEST_CASE("trajectory CSV") {
    Trajectory t;
    t.sites = 3;
    std::ostringstream empty;
    write_trajectory_csv(empty, t);
    CHECK(empty.str() == "t_seconds,fidelity,trace,purity,n_site_1,n_site_2,n_site_3,chi1_radps,chi_radps,kappa_radps\n");

    t.samples.push_back({1e-9, 0.5, 1.0, 0.25, {1.0, 0.5, 0.0}, {1.0, 2.0, 3.0}});
    std::ostringstream one;
    write_trajectory_csv(one, t);
    std::istringstream lines(one.str());
    std::string header, row;
    std::getline(lines, header);
    std::getline(lines, row);
    CHECK(std::count(row.begin(), row.end(), ',') == std::count(header.begin(), header.end(), ','));
    CHECK(row.rfind("1.0000000000000001e-09,0.5,1,0.25,", 0) == 0);
}

TEST_CASE("summary") {
    RunSummary s;
    s.name = "x";
    s.final_fidelity = 0.9;
    s.peak_fidelity = 0.95;
    s.config_echo = "a = 1\nb = 2\n";
    s.timestamp = iso8601_now();
    CHECK(std::regex_match(s.timestamp, std::regex(R"(\d{4}-\d\d-\d\dT\d\d:\d\d:\d\dZ)")));
    std::ostringstream out;
    write_summary(out, s);
    CHECK(out.str().find("timestamp: " + s.timestamp + "\n") != std::string::npos);
    CHECK(out.str().find("config:\n  a = 1\n  b = 2\n") != std::string::npos);

    s.final_fidelity = 0.99;
    CHECK_THROWS_AS(s.validate(), InvariantError);
    CHECK_THROWS_AS(write_outputs(Trajectory{}, s, {"/tmp/x.csv", "/tmp/x.txt"}), InvariantError);
    s.final_fidelity = 0.9;
    CHECK_THROWS_AS(write_outputs(Trajectory{}, s, {"/proc/definitely/not/writable.csv", "/proc/x.txt"}), IoError);
}

TEST_CASE("protocol runs are deterministic") {
    const auto dir = std::filesystem::temp_directory_path() / "abhsim_unit_determinism";
    std::filesystem::remove_all(dir);
    const std::string cfg = (dir / "small.cfg").string();
    write_text_file(cfg, kMinimal + "damping = none\nintegrator.dt_ps = 5\n");
    CHECK(run_cli({"protocol", cfg, "--out", (dir / "a").string()}) == 0);
    CHECK(run_cli({"protocol", cfg, "--out", (dir / "b").string()}) == 0);
    const auto a = slurp(dir / "a" / "trajectory.csv");
    CHECK_FALSE(a.empty());
    CHECK(a == slurp(dir / "b" / "trajectory.csv"));

    auto strip = [](std::string text) {
        return std::regex_replace(text, std::regex("(timestamp: |outputs.dir = )[^\n]*\n"), "");
    };
    CHECK(strip(slurp(dir / "a" / "summary.txt")) == strip(slurp(dir / "b" / "summary.txt")));
    CHECK(slurp(dir / "a" / "summary.txt").find("total_time_T_s: 1.06") != std::string::npos);
}

TEST_CASE("CLI exit codes") {
    std::string out;
    CHECK(run_cli({"--help"}) == kExitOk);
    CHECK(run_cli({}) == kExitConfig);
    CHECK(run_cli({"frobnicate"}) == kExitConfig);
    CHECK(run_cli({"protocol", "/nonexistent.cfg"}) == kExitConfig);
    CHECK(run_cli({"protocol", std::string(ABHSIM_SOURCE_DIR) + "/tests/data/bad_t1.cfg"}) == kExitConfig);
    CHECK(run_cli({"protocol", "sim1", "--disorder", "1,x,2"}) == kExitConfig);
    CHECK(run_cli({"spectrum", "sim1", "--sector", "3", "--tau-scan", "0:1"}) == kExitConfig);
    CHECK(run_cli({"constraints", "sim1"}, &out) == kExitOk);
    CHECK(out.find("n_max_bound: 6") != std::string::npos);
    CHECK(run_cli({"spectrum", "sim1", "--sector", "2", "--tau-scan", "0:0.2:0.1"}, &out) == kExitOk);
    CHECK(out.rfind("tau,ground_energy,w_fidelity,q0_population\n", 0) == 0);
    CHECK(std::count(out.begin(), out.end(), '\n') == 4);
    CHECK(run_cli({"verify", "--only", "5"}, &out) == kExitOk);
    CHECK(out.find("[PASS] 5") != std::string::npos);
}
