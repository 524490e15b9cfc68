#include "abhsim/config.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "abhsim/errors.hpp"
#include "abhsim/io.hpp"
#include "abhsim_presets.hpp"

namespace abhsim {

namespace {

constexpr double kTwoPiMega = 2.0 * std::numbers::pi * 1e6;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    return out;
}

struct Entry {
    std::string value;
    int line;
};

class Reader {
public:
    explicit Reader(std::map<std::string, Entry> entries) : entries_(std::move(entries)) {}

    bool has(const std::string& key) const { return entries_.count(key) != 0; }

    const Entry& raw(const std::string& key) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) throw ConfigError("missing required key '" + key + "'");
        return it->second;
    }

    [[noreturn]] void fail(const std::string& key, const std::string& why) const {
        const auto it = entries_.find(key);
        const std::string where = it == entries_.end() ? "" : "line " + std::to_string(it->second.line) + ": ";
        throw ConfigError(where + "key '" + key + "': " + why);
    }

    double number(const std::string& key, const std::string& text) const {
        double v = 0.0;
        const char* b = text.data();
        const char* e = b + text.size();
        auto [p, ec] = std::from_chars(b, e, v);
        if (ec != std::errc() || p != e) fail(key, "'" + text + "' is not a number");
        return v;
    }

    double real(const std::string& key) const { return number(key, raw(key).value); }

    long long integer(const std::string& key) const {
        const std::string& t = raw(key).value;
        long long v = 0;
        auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec != std::errc() || p != t.data() + t.size()) fail(key, "'" + t + "' is not an integer");
        return v;
    }

    std::size_t count(const std::string& key) const {
        long long v = integer(key);
        if (v < 0) fail(key, "must be non-negative");
        return static_cast<std::size_t>(v);
    }

    std::vector<double> list(const std::string& key) const {
        std::vector<double> out;
        for (const auto& item : split(raw(key).value, ',')) out.push_back(number(key, item));
        return out;
    }

private:
    std::map<std::string, Entry> entries_;
};

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "name", "lattice.sites", "lattice.per_site_cap", "lattice.total_cap", "lattice.boundary",
        "hardware.chi_max_mhz", "hardware.kappa_max_mhz", "hardware.omega_c_ghz", "hardware.delta_omega_mhz",
        "damping", "damping.t1_us", "damping.tphi_zero_s", "damping.tphi_max_us", "disorder_mhz", "input_state",
        "schedule", "schedule.durations_ns", "schedule.margin", "schedule.kappa_path", "schedule.dt7_ns",
        "schedule.n_min", "schedule.n_max", "integrator.dt_ps", "integrator.sample_stride", "integrator.engine",
        "integrator.symmetrize_every", "integrator.positivity_every", "integrator.trace_budget",
        "calibration.candidates", "calibration.window_lo_ns", "calibration.window_hi_ns", "calibration.scan_dt_ps",
        "outputs.dir", "outputs.trajectory", "outputs.summary"};
    return keys;
}

std::string f(double x) { return format_double(x); }

}  // namespace

double RunConfig::chi_max_radps() const { return chi_max_mhz * kTwoPiMega; }
double RunConfig::kappa_max_radps() const { return kappa_max_mhz * kTwoPiMega; }
double RunConfig::omega_c_radps() const { return omega_c_ghz * 1e3 * kTwoPiMega; }
double RunConfig::delta_omega_radps() const { return delta_omega_mhz * kTwoPiMega; }

void RunConfig::validate() const {
    auto bad = [](const std::string& key, const std::string& why) { throw ConfigError("key '" + key + "': " + why); };
    if (sites < 1) bad("lattice.sites", "must be >= 1");
    if (per_site_cap && *per_site_cap < 0) bad("lattice.per_site_cap", "must be >= 0");
    if (!(chi_max_mhz > 0.0)) bad("hardware.chi_max_mhz", "must be positive");
    if (!(kappa_max_mhz >= 0.0)) bad("hardware.kappa_max_mhz", "must be non-negative");
    if (!(omega_c_ghz > 0.0)) bad("hardware.omega_c_ghz", "must be positive");
    if (!(delta_omega_mhz >= 0.0)) bad("hardware.delta_omega_mhz", "must be non-negative");
    if (damping_enabled) {
        if (!(t1_us > 0.0)) bad("damping.t1_us", "must be positive");
        if (!(tphi_zero_s > 0.0)) bad("damping.tphi_zero_s", "must be positive");
        if (!(tphi_max_us > 0.0)) bad("damping.tphi_max_us", "must be positive");
    }
    if (!disorder_mhz.empty() && disorder_mhz.size() != static_cast<std::size_t>(sites))
        bad("disorder_mhz", "needs one entry per site");
    if (input_state.empty()) bad("input_state", "needs at least one component");
    double norm = 0.0;
    int max_n = 0;
    for (const auto& a : input_state) {
        if (a.n < 0) bad("input_state", "occupation must be non-negative");
        norm += a.re * a.re + a.im * a.im;
        if (a.re != 0.0 || a.im != 0.0) max_n = std::max(max_n, a.n);
    }
    if (!(norm > 0.0)) bad("input_state", "is not normalizable");
    if (per_site_cap && *per_site_cap < max_n) bad("lattice.per_site_cap", "is below the largest input occupation");
    if (!schedule_auto) {
        if (durations_ns.size() != static_cast<std::size_t>(kProtocolSteps))
            bad("schedule.durations_ns", "needs exactly 7 entries");
        for (double d : durations_ns)
            if (!(d > 0.0)) bad("schedule.durations_ns", "entries must be positive");
    }
    if (!(margin >= 1.0)) bad("schedule.margin", "must be >= 1");
    if (dt7_ns && !(*dt7_ns > 0.0)) bad("schedule.dt7_ns", "must be positive");
    if (n_min && *n_min < 2) bad("schedule.n_min", "must be >= 2");
    if (n_min && n_max && *n_max < *n_min) bad("schedule.n_max", "must be >= n_min");
    if (!(dt_ps > 0.0)) bad("integrator.dt_ps", "must be positive");
    if (sample_stride == 0) bad("integrator.sample_stride", "must be positive");
    if (!(trace_budget > 0.0)) bad("integrator.trace_budget", "must be positive");
    if (calibration_candidates < 3) bad("calibration.candidates", "must be >= 3");
    if (window_lo_ns && !(*window_lo_ns > 0.0)) bad("calibration.window_lo_ns", "must be positive");
    if (window_lo_ns && window_hi_ns && !(*window_hi_ns > *window_lo_ns))
        bad("calibration.window_hi_ns", "must exceed window_lo_ns");
    if (scan_dt_ps && !(*scan_dt_ps > 0.0)) bad("calibration.scan_dt_ps", "must be positive");
}

InputState RunConfig::input() const {
    std::vector<InputState::Component> c;
    for (const auto& a : input_state) c.push_back({a.n, cplx{a.re, a.im}});
    return InputState(std::move(c));
}

LatticeSpec RunConfig::lattice() const {
    LatticeSpec s;
    s.sites = sites;
    s.per_site_cap = per_site_cap.value_or(input().max_n());
    s.total_cap = total_cap;
    return s;
}

std::optional<DampingModel> RunConfig::damping() const {
    if (!damping_enabled) return std::nullopt;
    return DampingModel{t1_us * 1e-6, tphi_zero_s, tphi_max_us * 1e-6, chi_max_radps()};
}

std::vector<double> RunConfig::detuning_radps() const {
    std::vector<double> d(static_cast<std::size_t>(sites), 0.0);
    for (std::size_t j = 0; j < disorder_mhz.size() && j < d.size(); ++j) d[j] = disorder_mhz[j] * kTwoPiMega;
    return d;
}

std::pair<int, int> RunConfig::n_range() const {
    int lo = 0, hi = 0;
    for (const auto& a : input_state) {
        if (a.n < 2 || (a.re == 0.0 && a.im == 0.0)) continue;
        lo = lo == 0 ? a.n : std::min(lo, a.n);
        hi = std::max(hi, a.n);
    }
    if (n_min) lo = *n_min;
    if (n_max) hi = *n_max;
    if (lo < 2 || hi < lo) throw ConfigError("no n >= 2 in input_state; set schedule.n_min and schedule.n_max");
    return {lo, hi};
}

ProtocolOptions RunConfig::protocol_options() const {
    ProtocolOptions o;
    o.dt = dt_seconds();
    o.sample_stride = sample_stride;
    o.engine = engine;
    o.boundary = boundary;
    o.symmetrize_every = symmetrize_every;
    o.positivity_every = positivity_every;
    o.trace_budget = trace_budget;
    return o;
}

CalibrationOptions RunConfig::calibration_options() const {
    CalibrationOptions c;
    c.candidates = calibration_candidates;
    if (window_lo_ns) c.window_lo = *window_lo_ns * 1e-9;
    if (window_hi_ns) c.window_hi = *window_hi_ns * 1e-9;
    if (scan_dt_ps) c.scan_dt = *scan_dt_ps * 1e-12;
    return c;
}

FeasibilityInputs RunConfig::feasibility_inputs() const {
    FeasibilityInputs in;
    in.chi_max = chi_max_radps();
    in.kappa_max = kappa_max_radps();
    std::tie(in.n_min, in.n_max) = n_range();
    in.omega_c = omega_c_radps();
    in.delta_omega = delta_omega_radps();
    in.margin = margin;
    in.sites = sites;
    if (!schedule_auto || dt7_ns) in.schedule = make_schedule(*this);
    return in;
}

RunConfig parse_config(const std::string& text) {
    std::map<std::string, Entry> entries;
    std::istringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(number) + ": expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (!known_keys().count(key))
            throw ConfigError("line " + std::to_string(number) + ": unknown key '" + key + "'");
        if (entries.count(key))
            throw ConfigError("line " + std::to_string(number) + ": duplicate key '" + key + "'");
        entries.emplace(key, Entry{value, number});
    }
    Reader r(std::move(entries));
    RunConfig c;

    if (r.has("name")) c.name = r.raw("name").value;
    c.sites = static_cast<int>(r.integer("lattice.sites"));
    if (r.has("lattice.per_site_cap")) c.per_site_cap = static_cast<int>(r.integer("lattice.per_site_cap"));
    if (r.has("lattice.total_cap")) c.total_cap = static_cast<int>(r.integer("lattice.total_cap"));
    if (r.has("lattice.boundary")) {
        const auto& b = r.raw("lattice.boundary").value;
        if (b == "periodic")
            c.boundary = Boundary::periodic;
        else if (b == "open")
            c.boundary = Boundary::open;
        else
            r.fail("lattice.boundary", "expected periodic | open");
    }

    c.chi_max_mhz = r.real("hardware.chi_max_mhz");
    c.kappa_max_mhz = r.real("hardware.kappa_max_mhz");
    if (r.has("hardware.omega_c_ghz")) c.omega_c_ghz = r.real("hardware.omega_c_ghz");
    if (r.has("hardware.delta_omega_mhz")) c.delta_omega_mhz = r.real("hardware.delta_omega_mhz");

    if (r.has("damping")) {
        const auto& d = r.raw("damping").value;
        if (d == "none")
            c.damping_enabled = false;
        else if (d == "on")
            c.damping_enabled = true;
        else
            r.fail("damping", "expected on | none");
    }
    if (r.has("damping.t1_us")) c.t1_us = r.real("damping.t1_us");
    if (r.has("damping.tphi_zero_s")) c.tphi_zero_s = r.real("damping.tphi_zero_s");
    if (r.has("damping.tphi_max_us")) c.tphi_max_us = r.real("damping.tphi_max_us");

    if (r.has("disorder_mhz") && r.raw("disorder_mhz").value != "none") c.disorder_mhz = r.list("disorder_mhz");

    for (const auto& item : split(r.raw("input_state").value, ',')) {
        const auto parts = split(item, ':');
        if (parts.empty() || parts.size() > 3) r.fail("input_state", "entries are n:re[:im]");
        RunConfig::Amplitude a;
        long long n = 0;
        auto [p, ec] = std::from_chars(parts[0].data(), parts[0].data() + parts[0].size(), n);
        if (ec != std::errc() || p != parts[0].data() + parts[0].size()) r.fail("input_state", "bad occupation '" + parts[0] + "'");
        a.n = static_cast<int>(n);
        a.re = parts.size() > 1 ? r.number("input_state", parts[1]) : 1.0;
        a.im = parts.size() > 2 ? r.number("input_state", parts[2]) : 0.0;
        c.input_state.push_back(a);
    }

    const std::string mode = r.has("schedule") ? r.raw("schedule").value : "explicit";
    if (mode == "auto")
        c.schedule_auto = true;
    else if (mode != "explicit")
        r.fail("schedule", "expected explicit | auto");
    if (r.has("schedule.durations_ns")) c.durations_ns = r.list("schedule.durations_ns");
    if (r.has("schedule.margin")) c.margin = r.real("schedule.margin");
    if (r.has("schedule.kappa_path")) {
        try {
            c.kappa_path = kappa_path_from_string(r.raw("schedule.kappa_path").value);
        } catch (const ConfigError& e) {
            r.fail("schedule.kappa_path", e.what());
        }
    }
    if (r.has("schedule.dt7_ns")) c.dt7_ns = r.real("schedule.dt7_ns");
    if (r.has("schedule.n_min")) c.n_min = static_cast<int>(r.integer("schedule.n_min"));
    if (r.has("schedule.n_max")) c.n_max = static_cast<int>(r.integer("schedule.n_max"));

    if (r.has("integrator.dt_ps")) c.dt_ps = r.real("integrator.dt_ps");
    if (r.has("integrator.sample_stride")) c.sample_stride = r.count("integrator.sample_stride");
    if (r.has("integrator.engine")) {
        try {
            c.engine = engine_from_string(r.raw("integrator.engine").value);
        } catch (const ConfigError& e) {
            r.fail("integrator.engine", e.what());
        }
    }
    if (r.has("integrator.symmetrize_every")) c.symmetrize_every = r.count("integrator.symmetrize_every");
    if (r.has("integrator.positivity_every")) c.positivity_every = r.count("integrator.positivity_every");
    if (r.has("integrator.trace_budget")) c.trace_budget = r.real("integrator.trace_budget");

    if (r.has("calibration.candidates")) c.calibration_candidates = r.count("calibration.candidates");
    if (r.has("calibration.window_lo_ns")) c.window_lo_ns = r.real("calibration.window_lo_ns");
    if (r.has("calibration.window_hi_ns")) c.window_hi_ns = r.real("calibration.window_hi_ns");
    if (r.has("calibration.scan_dt_ps")) c.scan_dt_ps = r.real("calibration.scan_dt_ps");

    if (r.has("outputs.dir")) c.out_dir = r.raw("outputs.dir").value;
    if (r.has("outputs.trajectory")) c.trajectory_file = r.raw("outputs.trajectory").value;
    if (r.has("outputs.summary")) c.summary_file = r.raw("outputs.summary").value;

    c.validate();
    return c;
}

std::string serialize(const RunConfig& c) {
    std::ostringstream o;
    auto list = [](const std::vector<double>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + f(v[i]);
        return s;
    };
    o << "name = " << c.name << '\n'
      << "lattice.sites = " << c.sites << '\n';
    if (c.per_site_cap) o << "lattice.per_site_cap = " << *c.per_site_cap << '\n';
    if (c.total_cap) o << "lattice.total_cap = " << *c.total_cap << '\n';
    o << "lattice.boundary = " << (c.boundary == Boundary::periodic ? "periodic" : "open") << '\n'
      << "hardware.chi_max_mhz = " << f(c.chi_max_mhz) << '\n'
      << "hardware.kappa_max_mhz = " << f(c.kappa_max_mhz) << '\n'
      << "hardware.omega_c_ghz = " << f(c.omega_c_ghz) << '\n'
      << "hardware.delta_omega_mhz = " << f(c.delta_omega_mhz) << '\n'
      << "damping = " << (c.damping_enabled ? "on" : "none") << '\n'
      << "damping.t1_us = " << f(c.t1_us) << '\n'
      << "damping.tphi_zero_s = " << f(c.tphi_zero_s) << '\n'
      << "damping.tphi_max_us = " << f(c.tphi_max_us) << '\n'
      << "disorder_mhz = " << (c.disorder_mhz.empty() ? "none" : list(c.disorder_mhz)) << '\n'
      << "input_state = ";
    for (std::size_t i = 0; i < c.input_state.size(); ++i) {
        const auto& a = c.input_state[i];
        o << (i ? ", " : "") << a.n << ':' << f(a.re) << ':' << f(a.im);
    }
    o << '\n' << "schedule = " << (c.schedule_auto ? "auto" : "explicit") << '\n';
    if (!c.durations_ns.empty()) o << "schedule.durations_ns = " << list(c.durations_ns) << '\n';
    o << "schedule.margin = " << f(c.margin) << '\n'
      << "schedule.kappa_path = " << to_string(c.kappa_path) << '\n';
    if (c.dt7_ns) o << "schedule.dt7_ns = " << f(*c.dt7_ns) << '\n';
    if (c.n_min) o << "schedule.n_min = " << *c.n_min << '\n';
    if (c.n_max) o << "schedule.n_max = " << *c.n_max << '\n';
    o << "integrator.dt_ps = " << f(c.dt_ps) << '\n'
      << "integrator.sample_stride = " << c.sample_stride << '\n'
      << "integrator.engine = " << to_string(c.engine) << '\n'
      << "integrator.symmetrize_every = " << c.symmetrize_every << '\n'
      << "integrator.positivity_every = " << c.positivity_every << '\n'
      << "integrator.trace_budget = " << f(c.trace_budget) << '\n'
      << "calibration.candidates = " << c.calibration_candidates << '\n';
    if (c.window_lo_ns) o << "calibration.window_lo_ns = " << f(*c.window_lo_ns) << '\n';
    if (c.window_hi_ns) o << "calibration.window_hi_ns = " << f(*c.window_hi_ns) << '\n';
    if (c.scan_dt_ps) o << "calibration.scan_dt_ps = " << f(*c.scan_dt_ps) << '\n';
    o << "outputs.dir = " << c.out_dir << '\n'
      << "outputs.trajectory = " << c.trajectory_file << '\n'
      << "outputs.summary = " << c.summary_file << '\n';
    return o.str();
}

std::vector<std::string> preset_names() {
    std::vector<std::string> out;
    for (const auto& p : detail::kPresets) out.emplace_back(p.name);
    return out;
}

std::optional<std::string> preset_text(const std::string& name) {
    for (const auto& p : detail::kPresets)
        if (name == p.name) return std::string(p.text);
    return std::nullopt;
}

RunConfig load_config(const std::string& path) {
    namespace fs = std::filesystem;
    for (const std::string& candidate : {path, path + ".cfg"}) {
        std::error_code ec;
        if (fs::is_regular_file(candidate, ec)) {
            std::ifstream in(candidate, std::ios::binary);
            if (!in) throw ConfigError("cannot read " + candidate);
            std::ostringstream text;
            text << in.rdbuf();
            try {
                return parse_config(text.str());
            } catch (const ConfigError& e) {
                throw ConfigError(candidate + ": " + e.what());
            }
        }
    }
    std::string name = fs::path(path).filename().string();
    if (name.size() > 4 && name.ends_with(".cfg")) name.resize(name.size() - 4);
    if (auto text = preset_text(name)) return parse_config(*text);
    throw ConfigError("no config file or preset named '" + path + "'");
}

ControlSchedule make_schedule(const RunConfig& c, std::optional<double> calibrated_dt7) {
    const double chi = c.chi_max_radps(), kappa = c.kappa_max_radps();
    StepDurations d{};
    if (!c.schedule_auto) {
        for (int i = 0; i < kProtocolSteps; ++i)
            d[static_cast<std::size_t>(i)] = c.durations_ns[static_cast<std::size_t>(i)] * 1e-9;
        if (calibrated_dt7) d[6] = *calibrated_dt7;
        return build_schedule(chi, kappa, d, c.kappa_path);
    }
    const auto [lo, hi] = c.n_range();
    d = recommend_durations(chi, kappa, lo, hi, c.margin).durations;
    if (calibrated_dt7)
        d[6] = *calibrated_dt7;
    else if (c.dt7_ns)
        d[6] = *c.dt7_ns * 1e-9;
    else
        throw ConfigError("auto schedule needs schedule.dt7_ns or a calibration run");
    return build_schedule(chi, kappa, d, c.kappa_path);
}

}  // namespace abhsim
