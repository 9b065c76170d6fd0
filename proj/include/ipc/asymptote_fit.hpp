#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace ipc {

/// Per-length Monte Carlo means of the training and test IPC.
struct MeanSample {
    double train_length = 0; ///< T
    double test_length = 0;  ///< T'
    double g_train = 0;
    double g_test = 0;
    std::uint64_t trials = 0;
};

struct VarSample {
    double train_length = 0;
    double test_length = 0;
    double s2_train = 0;
    double s2_test = 0;
    std::uint64_t trials = 0;
};

/// Population quantities of the large-T expansion. They are analytic inputs
/// used to construct reference coefficients; nothing here estimates them.
struct TheoryTerms {
    double mu0 = 1;          ///< E[|y|^2]
    double loss_at_w0 = 0;   ///< l(w0)
    double var_mu = 0;       ///< long-run variance of |y|^2
    double cov_loss_mu = 0;  ///< long-run covariance of l(w0) and |y|^2
    double var_loss = 0;     ///< long-run variance of l(w0)
    double trace_i_jinv = 0; ///< Tr(I J^-1)
};

/// Asymptote C(T) = a + b1/T, C'(T') = a - b2/T', V = d/T, V' = d/T'.
struct AsymptoteCoefficients {
    double a = 0;
    double b1 = 0;
    double b2 = 0;
    double d = 0;
};

struct MeanFit {
    double a = 0;
    double b1 = 0;
    double b2 = 0;
    double cost = 0;
    double condition = 0; ///< 2-norm condition number of the 3x3 system
};

struct FitResult {
    double a = 0;
    double b1 = 0;
    double b2 = 0;
    double d = 0;
    double cost = 0;
    double condition = 0;
};

/// Weighted cost 1/2 sum_i [T_i (a + b1/T_i - g_i)^2 + T'_i (a - b2/T'_i - g'_i)^2].
double mean_fit_cost(std::span<const MeanSample> samples, double a, double b1, double b2);

/// Gradient of mean_fit_cost with respect to (a, b1, b2).
std::array<double, 3> mean_fit_gradient(std::span<const MeanSample> samples, double a, double b1,
                                        double b2);

/// Minimizes mean_fit_cost through its 3x3 normal system, solved by
/// elimination with full pivoting. Throws std::invalid_argument with the
/// condition estimate when fewer than two distinct lengths are present or the
/// system is singular.
MeanFit fit_means(std::span<const MeanSample> samples);

/// d = sum_i (T_i s2_i + T'_i s2'_i) / (2 n), the minimizer of
/// 1/2 sum_i [T_i^2 (d/T_i - s2_i)^2 + T'_i^2 (d/T'_i - s2'_i)^2].
double fit_variance(std::span<const VarSample> samples);

double variance_fit_cost(std::span<const VarSample> samples, double d);

struct SlopeFit {
    double slope = 0;
    double intercept = 0;
    double standard_error = 0;
    std::size_t used = 0;
    std::size_t excluded = 0; ///< points with nonpositive variance
};

/// OLS of ln s2 on ln T, training and test points pooled.
SlopeFit loglog_slope(std::span<const VarSample> samples);

struct ZeroIpcDecision {
    bool is_zero = false;
    double slope = 0;
    double a = 0;
    double a_tol = 0;
    double slope_tol = 0;
};

inline constexpr double default_zero_a_tol = 0.01;
inline constexpr double default_zero_slope_tol = 0.3;

/// Zero capacity when |a| < a_tol and the variance decays faster than
/// 1/T by more than slope_tol.
ZeroIpcDecision decide_zero_ipc(double a, double slope, double a_tol = default_zero_a_tol,
                                double slope_tol = default_zero_slope_tol);

/// Reference coefficients from population terms. `ratio` is T/T'.
AsymptoteCoefficients asymptotic_coefficients(const TheoryTerms& theory, double ratio);

/// Plug-in variance 2 N s2^2 / (N - 1)^2 of an unbiased sample variance.
double variance_of_variance(double s2, std::uint64_t trials);

} // namespace ipc
