#pragma once

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace abhsim {

using cplx = std::complex<double>;
using Occupation = std::vector<int>;

/// Shape of the truncated Fock space: M sites, each holding at most
/// `per_site_cap` quanta, optionally with a cap on the summed occupation.
struct LatticeSpec {
    int sites = 1;
    int per_site_cap = 0;
    std::optional<int> total_cap;

    /// Throws ConfigError when the invariants do not hold.
    void validate() const;
};

/// Default ceiling on the basis dimension accepted by build_basis.
inline constexpr std::size_t kDefaultMaxDimension = 1'000'000;

/// Enumerated occupation vectors of a LatticeSpec.
///
/// States are ordered lexicographically in (n_1, ..., n_M), so the vacuum is
/// index 0 and n_1 is the most significant digit. Immutable after
/// construction and safe to share between threads.
class LatticeBasis {
public:
    const LatticeSpec& spec() const noexcept { return spec_; }
    int sites() const noexcept { return spec_.sites; }
    int per_site_cap() const noexcept { return spec_.per_site_cap; }
    std::size_t dimension() const noexcept { return states_.size(); }

    const Occupation& state(std::size_t i) const { return states_.at(i); }
    const std::vector<Occupation>& states() const noexcept { return states_; }

    /// Dense index of an occupation vector, or nullopt if it is not admissible.
    std::optional<std::size_t> index_of(std::span<const int> occupation) const;

    /// Occupation of `site` in basis state `i`.
    int occupation(std::size_t i, int site) const { return states_[i][static_cast<std::size_t>(site)]; }
    /// Total number of quanta in basis state `i`.
    int total(std::size_t i) const { return totals_[i]; }

    /// Indices of basis states with exactly `n` quanta, ascending.
    std::vector<std::size_t> sector_indices(int n) const;
    /// Largest total occupation present in the basis.
    int max_total() const noexcept;

    bool operator==(const LatticeBasis& other) const { return spec_.sites == other.spec_.sites &&
                                                              spec_.per_site_cap == other.spec_.per_site_cap &&
                                                              spec_.total_cap == other.spec_.total_cap; }

private:
    friend std::shared_ptr<const LatticeBasis> build_basis(const LatticeSpec&, std::size_t);

    LatticeSpec spec_;
    std::vector<Occupation> states_;
    std::vector<int> totals_;
    std::map<Occupation, std::size_t> index_;
};

using BasisPtr = std::shared_ptr<const LatticeBasis>;

/// Enumerates every admissible occupation vector. Throws ResourceError when
/// the dimension would exceed `max_dimension`.
BasisPtr build_basis(const LatticeSpec& spec, std::size_t max_dimension = kDefaultMaxDimension);

/// Single-resonator input state sum_n C_n |n>, kept normalized.
class InputState {
public:
    struct Component {
        int n;
        cplx amplitude;
    };

    /// Normalizes the given amplitudes; duplicated n are summed.
    /// Throws ConfigError on negative n or zero norm.
    explicit InputState(std::vector<Component> amplitudes);

    const std::vector<Component>& components() const noexcept { return components_; }
    int max_n() const noexcept;
    /// Norm of the amplitudes as given, before normalization.
    double original_norm() const noexcept { return original_norm_; }
    /// Probability carried by |0> and |1>.
    double low_occupation_weight() const noexcept;
    /// Amplitude C_n (zero when absent).
    cplx amplitude(int n) const noexcept;

private:
    std::vector<Component> components_;
    double original_norm_ = 1.0;
};

/// Default threshold for the |0>,|1> occupation warning.
inline constexpr double kLowOccupationThreshold = 1e-6;

}  // namespace abhsim
