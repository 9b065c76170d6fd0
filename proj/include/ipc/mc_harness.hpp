#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ipc/asymptote_fit.hpp"
#include "ipc/esn.hpp"
#include "ipc/ipc_core.hpp"
#include "ipc/signal_tasks.hpp"

namespace ipc {

/// Raised when too many trials at one length fail.
class ExperimentFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ExperimentPlan {
    TaskSpec task;
    EsnConfig reservoir;                ///< ignored by the simple model
    std::vector<std::uint64_t> t_grid;  ///< training lengths
    std::uint32_t ratio_num = 1;        ///< T' = T * ratio_num / ratio_den
    std::uint32_t ratio_den = 1;
    std::uint64_t trials = 100;
    std::size_t washout = 500;
    std::uint64_t base_seed = 1;
    unsigned threads = 0;               ///< 0 = hardware concurrency
    bool fix_reservoir = true;          ///< one reservoir shared by every trial
    bool retain_values = false;         ///< keep per-trial pairs in the result

    void validate() const;

    bool uses_esn() const noexcept { return task.kind != TaskKind::simple; }
    std::uint64_t test_length(std::uint64_t train_length) const;
    /// Readout width: the scalar state for the simple model, nodes + bias otherwise.
    std::size_t feature_dim() const noexcept;
    /// Degrees of freedom for the chi-square threshold (bias excluded).
    unsigned threshold_dof() const noexcept;
    /// Steps discarded before data collection: max(washout, task warmup).
    std::size_t effective_washout() const;
};

/// Reservoir shared by all trials when plan.fix_reservoir is set.
EsnWeights shared_reservoir(const ExperimentPlan& plan);

/// One trial at training length `train_length`. Deterministic in
/// (plan.base_seed, train_length, trial_index). Throws TaskDivergence when
/// the task blows up. `shared` overrides the per-trial reservoir draw.
IpcSamplePair run_trial(const ExperimentPlan& plan, std::uint64_t train_length,
                        std::uint64_t trial_index, const EsnWeights* shared = nullptr);

struct Summary {
    double mean = 0;
    double variance = 0;
};

/// Mean and unbiased variance by a corrected two-pass scheme.
Summary summarize(std::span<const double> values);

struct SummaryRow {
    std::uint64_t train_length = 0;
    std::uint64_t test_length = 0;
    std::uint64_t trials = 0; ///< successful trials
    double mean_train = 0;
    double var_train = 0;
    double mean_test = 0;
    double var_test = 0;
    double err_var_train = 0; ///< sqrt of variance_of_variance
    double err_var_test = 0;
    std::uint64_t failures = 0;
};

struct ExperimentResult {
    std::vector<SummaryRow> rows;                      ///< sorted by T
    std::vector<std::vector<IpcSamplePair>> retained;  ///< per row, trial order
};

/// Runs every (T, trial) pair, in parallel up to the thread count, and
/// reduces per-T results in trial-index order.
ExperimentResult run_experiment(const ExperimentPlan& plan);

SummaryRow summarize_pairs(std::uint64_t train_length, std::uint64_t test_length,
                           std::span<const IpcSamplePair> pairs, std::uint64_t failures);

std::vector<MeanSample> mean_samples(std::span<const SummaryRow> rows);
std::vector<VarSample> var_samples(std::span<const SummaryRow> rows);

inline constexpr const char* results_csv_magic = "# ipc-results v1";
inline constexpr const char* results_csv_header =
    "T,Tprime,N,mean_train,var_train,mean_test,var_test,err_var_train,err_var_test,failures";

void write_results_csv(std::ostream& os, std::span<const SummaryRow> rows);
void write_results_csv(const std::filesystem::path& path, std::span<const SummaryRow> rows);
/// Throws std::runtime_error on an unknown version line or schema mismatch.
std::vector<SummaryRow> read_results_csv(std::istream& is);
std::vector<SummaryRow> read_results_csv(const std::filesystem::path& path);

unsigned resolve_thread_count(unsigned requested) noexcept;

} // namespace ipc
