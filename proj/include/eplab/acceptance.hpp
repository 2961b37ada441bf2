#pragma once

#include <functional>
#include <string>
#include <vector>

namespace eplab {

struct CriterionResult {
    int id = 0;
    std::string title;
    bool pass = false;
    /// One-line account of the measured numbers.
    std::string detail;
    double seconds = 0.0;
};

struct AcceptanceOptions {
    unsigned threads = 1;
    /// Scratch directory for the determinism check.
    std::string scratch = ".";
};

/// Criterion ids in a named suite: "all", "criterion" (1-3), "friction" (4-5),
/// "pressure" (6), "viscosity" (7-8), "stochastic" (9-10), or a single number.
std::vector<int> acceptance_suite(const std::string& name);

CriterionResult run_criterion(int id, const AcceptanceOptions& opts = {});

/// Runs the criteria in order, calling `report` after each.
std::vector<CriterionResult> run_acceptance(const std::vector<int>& ids, const AcceptanceOptions& opts,
                                            const std::function<void(const CriterionResult&)>& report = {});

std::string format_result(const CriterionResult& r);

}  // namespace eplab
