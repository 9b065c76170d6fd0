#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>

#include <Eigen/Dense>

#include "ipc/random.hpp"

namespace ipc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct EsnConfig {
    std::size_t nodes = 100;
    std::size_t input_dim = 1;
    double spectral_radius = 0.9;
    double density = 0.7;
    double input_scale = 1.0;
    double bias = 0.0; ///< every entry of c
    std::uint64_t seed = 0;

    void validate() const;
};

/// Realized ESN weights. Immutable after build_esn; safe to share.
struct EsnWeights {
    Matrix recurrent; ///< v1, nodes x nodes
    Matrix input;     ///< v2, nodes x input_dim
    Vector bias;      ///< c

    std::size_t nodes() const noexcept { return static_cast<std::size_t>(recurrent.rows()); }
    std::size_t input_dim() const noexcept { return static_cast<std::size_t>(input.cols()); }
};

/// Largest eigenvalue modulus, from a dense nonsymmetric eigendecomposition.
double spectral_radius(const Matrix& m);

struct PowerIterationResult {
    double radius = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Spectral radius by power iteration over successive iterate pairs.
///
/// Real random matrices usually have a complex-conjugate dominant pair, for
/// which plain power iteration oscillates. Each step fits the two-term
/// recurrence x_{k+2} = p x_{k+1} + q x_k by least squares and takes the
/// larger root modulus of z^2 - p z - q, which converges for either a real
/// dominant eigenvalue or a dominant conjugate pair.
/// Stops when the relative residual of that fit drops below `tolerance`.
PowerIterationResult power_iteration_radius(const Matrix& m, int max_iterations = 100000,
                                            double tolerance = 1e-10, std::uint64_t seed = 1);

/// Rescales `m` in place to the requested spectral radius. Throws if the
/// current radius is numerically zero.
void rescale_spectral_radius(Matrix& m, double target);

/// Draws v1 with exactly round(density * nodes^2) standard-normal entries at
/// uniformly random positions, rescaled to config.spectral_radius, and a dense
/// standard-normal v2 scaled by input_scale. A zero-radius draw is retried
/// with fresh randomness up to 8 times.
EsnWeights build_esn(const EsnConfig& config, Rng& rng);

/// x' = tanh(v1^T x + v2 u + c).
void esn_step(const EsnWeights& weights, const Vector& state, std::span<const double> u_prev,
              Vector& next);

Vector esn_step(const EsnWeights& weights, const Vector& state, std::span<const double> u_prev);

/// Geometric filter x_t = u_t + x_{t-1}/2, i.e. sum_s 2^-s u_{t-s}.
constexpr double simple_model_step(double state, double u_t) noexcept
{
    return u_t + 0.5 * state;
}

constexpr double simple_model_target(double state) noexcept
{
    return 1.0 + state;
}

/// Applies `step(state, u)` for the first `steps` entries of `inputs` and
/// returns the resulting state.
template <class State, class Step>
State run_washout(Step&& step, std::size_t steps, std::span<const double> inputs, State state)
{
    for (std::size_t t = 0; t < steps && t < inputs.size(); ++t)
        state = step(state, inputs[t]);
    return state;
}

struct WeightsHeader {
    std::size_t nodes = 0;
    std::size_t input_dim = 0;
    double spectral_radius = 0.0;
    double density = 0.0;
    std::uint64_t seed = 0;
};

/// CSV dump: one header line, then v1 rows, v2 rows, and c, row-major.
void save_weights_csv(const std::filesystem::path& path, const EsnWeights& weights,
                      const EsnConfig& config);
EsnWeights load_weights_csv(const std::filesystem::path& path, WeightsHeader* header = nullptr);

} // namespace ipc
