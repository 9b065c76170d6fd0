#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ipc {

struct CheckResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0;
};

struct VerifyOptions {
    bool quick = false;   ///< skip the ESN-scale experiments
    unsigned threads = 0; ///< 0 = hardware concurrency
    std::optional<std::filesystem::path> out_dir; ///< where experiment CSVs go
    /// Called after each check completes.
    std::function<void(const CheckResult&)> on_result;
};

/// Reference-value checks for the whole pipeline: analytic coefficients,
/// simple-model Monte Carlo, chi-square thresholds, the empirical-IPC
/// baseline, the three ESN benchmarks, oracle equivalence and determinism.
std::vector<CheckResult> run_verify(const VerifyOptions& options);

std::string format_check(const CheckResult& result);

} // namespace ipc
