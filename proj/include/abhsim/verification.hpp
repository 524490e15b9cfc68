#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace abhsim {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

struct VerifyOptions {
    /// RK4 step for the long reproductions (criteria 1, 4, 6).
    double dt = 1e-12;
    /// Subset of criteria to run; empty = all 1..12.
    std::vector<int> only;
    /// Progress messages (may be null).
    std::ostream* log = nullptr;
};

/// Runs the acceptance checks in order. Each criterion is evaluated
/// independently; an exception inside one is reported as a failure of that
/// criterion only.
std::vector<CriterionResult> run_acceptance(const VerifyOptions& options = {});

/// "[PASS] 3 name: detail" / "[FAIL] ..."
std::string format_result(const CriterionResult& result);

}  // namespace abhsim
