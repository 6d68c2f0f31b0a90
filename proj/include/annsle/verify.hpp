#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace annsle {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    double measured = 0.0;  // headline measurement
    double threshold = 0.0; // limit it was compared against
    std::string detail;
    double seconds = 0.0;
};

struct VerifyReport {
    std::vector<CriterionResult> results;
    bool all_pass = false;
};

// Runs the thirteen acceptance checks.  full = false shrinks the Monte
// Carlo path counts; everything else is identical.  Results are
// deterministic for a fixed seed and independent of n_threads.
VerifyReport verify_all(bool full, std::uint64_t seed, int n_threads);

} // namespace annsle
