#include "abhsim/schedule.hpp"

#include <algorithm>
#include <cmath>

#include "abhsim/errors.hpp"

namespace abhsim {

std::string to_string(KappaPath path) {
    return path == KappaPath::uniform_sign ? "uniform_sign" : "sign_flip";
}

KappaPath kappa_path_from_string(const std::string& text) {
    if (text == "uniform_sign") return KappaPath::uniform_sign;
    if (text == "sign_flip") return KappaPath::sign_flip;
    throw ConfigError("unknown kappa path '" + text + "' (uniform_sign | sign_flip)");
}

Controls Segment::at(double t) const {
    const double x = std::clamp((t - t_start) / duration, 0.0, 1.0);
    return {begin.chi1 + (end.chi1 - begin.chi1) * x, begin.chi + (end.chi - begin.chi) * x,
            begin.kappa + (end.kappa - begin.kappa) * x};
}

ControlSchedule::ControlSchedule(double chi_max, double kappa_max, const StepDurations& durations,
                                 KappaPath path)
    : chi_max_(chi_max), kappa_max_(kappa_max), path_(path), durations_(durations) {
    if (!(chi_max > 0.0) || !std::isfinite(chi_max)) throw ConfigError("chi_max must be positive");
    if (!(kappa_max >= 0.0) || !std::isfinite(kappa_max)) throw ConfigError("kappa_max must be non-negative");
    for (int i = 0; i < kProtocolSteps; ++i)
        if (!(durations[static_cast<std::size_t>(i)] > 0.0) || !std::isfinite(durations[static_cast<std::size_t>(i)]))
            throw ConfigError("duration of step " + std::to_string(i + 1) + " must be positive");

    const double c = chi_max, k = kappa_max;
    const double ks = path == KappaPath::uniform_sign ? k : -k;
    const std::array<std::pair<Controls, Controls>, kProtocolSteps> ramps{{
        {{0, 0, 0}, {c, 0, 0}},
        {{c, 0, 0}, {c, 0, ks}},
        {{c, 0, ks}, {0, 0, ks}},
        {{0, 0, ks}, {0, 0, k}},
        {{0, 0, k}, {c, c, k}},
        {{c, c, k}, {c, c, 0}},
        {{c, c, 0}, {0, 0, 0}},
    }};
    double t = 0.0;
    for (std::size_t i = 0; i < ramps.size(); ++i) {
        segments_[i] = Segment{t, durations[i], ramps[i].first, ramps[i].second};
        t += durations[i];
    }
}

double ControlSchedule::end_of(int step) const {
    if (step < 0 || step > kProtocolSteps) throw DomainError("step index out of range");
    if (step == 0) return 0.0;
    return segments_[static_cast<std::size_t>(step - 1)].t_end();
}

int ControlSchedule::step_at(double t) const {
    for (int s = 1; s < kProtocolSteps; ++s)
        if (t <= segments_[static_cast<std::size_t>(s - 1)].t_end()) return s;
    return kProtocolSteps;
}

Controls ControlSchedule::at(double t) const {
    t = std::clamp(t, 0.0, total_time());
    return segments_[static_cast<std::size_t>(step_at(t) - 1)].at(t);
}

ControlSchedule ControlSchedule::with_dt7(double dt7) const {
    StepDurations d = durations_;
    d[6] = dt7;
    return ControlSchedule(chi_max_, kappa_max_, d, path_);
}

ControlSchedule ControlSchedule::with_scaled_first_six(double factor) const {
    StepDurations d = durations_;
    for (int i = 0; i < 6; ++i) d[static_cast<std::size_t>(i)] *= factor;
    return ControlSchedule(chi_max_, kappa_max_, d, path_);
}

ControlSchedule build_schedule(double chi_max, double kappa_max, const StepDurations& durations, KappaPath path) {
    return ControlSchedule(chi_max, kappa_max, durations, path);
}

}  // namespace abhsim
