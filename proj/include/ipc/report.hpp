#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "json.hpp"

#include "ipc/asymptote_fit.hpp"
#include "ipc/mc_harness.hpp"

namespace ipc {

/// A point removed from a log-log mean plot because its deviation from the
/// fitted asymptote was not positive.
struct DroppedPoint {
    bool train = true;
    std::uint64_t length = 0;
    double deviation = 0;
};

struct FitReport {
    FitResult fit;
    SlopeFit slope;
    ZeroIpcDecision decision;
    std::vector<DroppedPoint> dropped;
};

/// Fits means and variance, the variance power, and the zero-capacity rule.
FitReport analyze(std::span<const SummaryRow> rows, double a_tol = default_zero_a_tol,
                  double slope_tol = default_zero_slope_tol);

nlohmann::json to_json(const FitReport& report);

/// Writes mean.dat, mean_loglog.dat, variance.dat, variance_loglog.dat and,
/// when requested, plots.gp into `dir`.
void write_plot_data(const std::filesystem::path& dir, std::span<const SummaryRow> rows,
                     const FitReport& report, bool gnuplot_script);

struct BaselineReport {
    std::uint64_t length = 0;  ///< largest training length in the results
    unsigned dof = 0;
    double p_value = 0;
    double threshold = 0;
    double training_mean = 0;
    double empirical = 0;      ///< gated training mean
    bool has_fit = false;
    double fitted_a = 0;
};

/// Gated training mean at the largest T next to the extrapolated estimate.
BaselineReport baseline(std::span<const SummaryRow> rows, unsigned dof, double p_value);

nlohmann::json to_json(const BaselineReport& report);

} // namespace ipc
