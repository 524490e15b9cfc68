#include "abhsim/basis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "abhsim/errors.hpp"

namespace abhsim {

void LatticeSpec::validate() const {
    if (sites < 1) throw ConfigError("lattice.sites must be >= 1");
    if (per_site_cap < 0) throw ConfigError("lattice.per_site_cap must be >= 0");
    if (total_cap) {
        if (*total_cap < 0) throw ConfigError("lattice.total_cap must be >= 0");
        if (static_cast<long long>(*total_cap) > static_cast<long long>(sites) * per_site_cap)
            throw ConfigError("lattice.total_cap exceeds sites * per_site_cap");
    }
}

std::optional<std::size_t> LatticeBasis::index_of(std::span<const int> occupation) const {
    auto it = index_.find(Occupation(occupation.begin(), occupation.end()));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::size_t> LatticeBasis::sector_indices(int n) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < totals_.size(); ++i)
        if (totals_[i] == n) out.push_back(i);
    return out;
}

int LatticeBasis::max_total() const noexcept {
    return totals_.empty() ? 0 : *std::max_element(totals_.begin(), totals_.end());
}

BasisPtr build_basis(const LatticeSpec& spec, std::size_t max_dimension) {
    spec.validate();
    // Upper bound before the total cap; checked in floating point to avoid overflow.
    double full = std::pow(static_cast<double>(spec.per_site_cap + 1), spec.sites);
    if (!spec.total_cap && full > static_cast<double>(max_dimension))
        throw ResourceError("basis dimension " + std::to_string(full) + " exceeds limit " +
                            std::to_string(max_dimension));

    auto basis = std::shared_ptr<LatticeBasis>(new LatticeBasis());
    basis->spec_ = spec;

    Occupation occ(static_cast<std::size_t>(spec.sites), 0);
    const int cap = spec.per_site_cap;
    // Odometer with the last site as the fastest digit gives lexicographic order.
    while (true) {
        int total = std::accumulate(occ.begin(), occ.end(), 0);
        if (!spec.total_cap || total <= *spec.total_cap) {
            if (basis->states_.size() >= max_dimension)
                throw ResourceError("basis dimension exceeds limit " + std::to_string(max_dimension));
            basis->index_.emplace(occ, basis->states_.size());
            basis->states_.push_back(occ);
            basis->totals_.push_back(total);
        }
        int pos = spec.sites - 1;
        while (pos >= 0 && occ[static_cast<std::size_t>(pos)] == cap) {
            occ[static_cast<std::size_t>(pos)] = 0;
            --pos;
        }
        if (pos < 0) break;
        ++occ[static_cast<std::size_t>(pos)];
    }
    return basis;
}

InputState::InputState(std::vector<Component> amplitudes) {
    for (const auto& c : amplitudes) {
        if (c.n < 0) throw ConfigError("input_state: negative occupation " + std::to_string(c.n));
        auto it = std::find_if(components_.begin(), components_.end(),
                               [&](const Component& e) { return e.n == c.n; });
        if (it == components_.end())
            components_.push_back(c);
        else
            it->amplitude += c.amplitude;
    }
    std::sort(components_.begin(), components_.end(),
              [](const Component& a, const Component& b) { return a.n < b.n; });
    double norm2 = 0.0;
    for (const auto& c : components_) norm2 += std::norm(c.amplitude);
    if (!(norm2 > 0.0) || !std::isfinite(norm2)) throw ConfigError("input_state has zero norm");
    original_norm_ = std::sqrt(norm2);
    for (auto& c : components_) c.amplitude /= original_norm_;
}

int InputState::max_n() const noexcept {
    int m = 0;
    for (const auto& c : components_)
        if (std::abs(c.amplitude) > 0.0) m = std::max(m, c.n);
    return m;
}

double InputState::low_occupation_weight() const noexcept {
    double w = 0.0;
    for (const auto& c : components_)
        if (c.n < 2) w += std::norm(c.amplitude);
    return w;
}

cplx InputState::amplitude(int n) const noexcept {
    for (const auto& c : components_)
        if (c.n == n) return c.amplitude;
    return {0.0, 0.0};
}

}  // namespace abhsim
