#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <numbers>
#include <sstream>

#include "abhsim/cli.hpp"
#include "abhsim/config.hpp"
#include "abhsim/errors.hpp"
#include "abhsim/feasibility.hpp"
#include "abhsim/io.hpp"
#include "abhsim/protocol.hpp"
#include "abhsim/spectra.hpp"
#include "abhsim/verification.hpp"

namespace py = pybind11;
using namespace abhsim;

namespace {

// Runs one configuration text and returns the trajectory as column lists.
py::dict run(const std::string& config_text, std::optional<double> dt_ps, bool damping, std::size_t stride) {
    RunConfig c = parse_config(config_text);
    if (dt_ps) c.dt_ps = *dt_ps;
    if (!damping) c.damping_enabled = false;
    c.sample_stride = stride;
    c.validate();
    if (c.schedule_auto && !c.dt7_ns) throw ConfigError("auto schedule needs schedule.dt7_ns here; use the CLI to calibrate");
    const auto basis = build_basis(c.lattice());
    const auto schedule = make_schedule(c);
    const ProtocolResult r = [&] {
        py::gil_scoped_release release;
        return run_protocol(c.input(), basis, schedule, c.damping(), c.detuning_radps(), c.protocol_options());
    }();
    py::list t, f, tr, pu;
    py::list sites;
    for (int j = 0; j < basis->sites(); ++j) sites.append(py::list());
    for (const auto& s : r.trajectory.samples) {
        t.append(s.t);
        f.append(s.fidelity);
        tr.append(s.trace);
        pu.append(s.purity);
        for (int j = 0; j < basis->sites(); ++j) sites[static_cast<std::size_t>(j)].cast<py::list>().append(s.site_occupation[static_cast<std::size_t>(j)]);
    }
    const auto [peak, peak_t] = r.peak_fidelity();
    py::dict out;
    out["t_seconds"] = t;
    out["fidelity"] = f;
    out["trace"] = tr;
    out["purity"] = pu;
    out["site_occupation"] = sites;
    out["final_fidelity"] = r.final_fidelity();
    out["peak_fidelity"] = peak;
    out["peak_time"] = peak_t;
    out["total_time"] = schedule.total_time();
    out["engine"] = to_string(r.engine);
    return out;
}

py::list scan(int sites, int cap, double chi_mhz, int n, const std::vector<double>& taus) {
    const auto basis = build_basis(LatticeSpec{sites, std::max(cap, n), std::nullopt});
    py::list rows;
    for (const auto& row : phase_scan(basis, chi_mhz * 2e6 * std::numbers::pi, n, taus)) {
        py::dict d;
        d["tau"] = row.tau;
        d["ground_energy"] = row.ground_energy;
        d["w_fidelity"] = row.w_fidelity;
        d["q0_population"] = row.q0_population;
        rows.append(d);
    }
    return rows;
}

}  // namespace

PYBIND11_MODULE(_abhsim, m) {
    m.doc() = "Kerr-resonator ring simulator";

    // Later registrations are tried first, so the subclass goes last.
    const auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

    m.def("version", &version);
    m.def("preset_names", &preset_names);
    m.def("preset_text", [](const std::string& name) {
        auto text = preset_text(name);
        if (!text) throw ConfigError("no preset named '" + name + "'");
        return *text;
    });
    m.def("normalize_config", [](const std::string& text) { return serialize(parse_config(text)); },
          "Parses a config and writes it back in canonical form.");
    m.def("run", &run, py::arg("config_text"), py::arg("dt_ps") = py::none(), py::arg("damping") = true,
          py::arg("stride") = 100);
    m.def("phase_scan", &scan, py::arg("sites"), py::arg("cap"), py::arg("chi_mhz"), py::arg("n"), py::arg("taus"));
    m.def("tau2", [](int sites) { return tau2(sites).value; });
    m.def("constraints", [](const std::string& text) { return to_text(feasibility(parse_config(text).feasibility_inputs())); });
    m.def("verify", [](const std::vector<int>& only) {
        VerifyOptions o;
        o.only = only;
        std::vector<std::pair<bool, std::string>> out;
        for (const auto& r : run_acceptance(o)) out.emplace_back(r.pass, format_result(r));
        return out;
    }, py::arg("only"));
    m.def("cli", [](const std::vector<std::string>& args) {
        std::vector<std::string> all{"abhsim"};
        all.insert(all.end(), args.begin(), args.end());
        std::vector<const char*> argv;
        for (const auto& a : all) argv.push_back(a.c_str());
        std::ostringstream out, err;
        const int code = cli_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
        return py::make_tuple(code, out.str(), err.str());
    });
}
