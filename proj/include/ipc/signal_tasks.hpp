#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ipc/random.hpp"

namespace ipc {

/// Raised when a task's target sequence leaves its finite regime
/// (NARMA10 blow-up). The harness counts such trials as failures.
class TaskDivergence : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class InputDistribution {
    uniform_symmetric, ///< Uniform(-1, 1)
    uniform_positive,  ///< Uniform(0, 0.2)
};

struct InputSpec {
    InputDistribution distribution = InputDistribution::uniform_symmetric;
    std::size_t dimension = 1;

    double lo() const noexcept;
    double hi() const noexcept;
};

/// Draws `length * spec.dimension` i.i.d. samples, time-major.
std::vector<double> gen_input(const InputSpec& spec, std::size_t length, Rng& rng);

/// Unnormalized Legendre polynomial P_n(x) by the three-term recurrence.
double legendre_eval(unsigned degree, double x) noexcept;

struct LegendreTerm {
    unsigned delay;
    unsigned degree;
};

/// Target prod_i P_{s_i}(u_{t-i}).
struct LegendreTaskSpec {
    std::vector<LegendreTerm> terms;

    /// Throws std::invalid_argument unless delays are strictly increasing,
    /// positive, and at least one degree is nonzero.
    void validate() const;
    unsigned max_delay() const noexcept;
};

/// `lagged[i]` holds u_{t-i}; it must cover the largest delay in `spec`.
double legendre_target(const LegendreTaskSpec& spec, std::span<const double> lagged);

struct Narma10Params {
    double alpha = 0.3;
    double beta = 0.05;
    double gamma = 1.5;
    double delta = 0.1;
};

/// Magnitude beyond which a NARMA10 output is treated as divergent.
inline constexpr double narma_divergence_bound = 1e6;

/// Last ten outputs and inputs, zero-initialized. Slot 0 is the newest.
struct Narma10State {
    std::array<double, 10> outputs{};
    std::array<double, 10> inputs{};
};

/// Advances NARMA10 by one step with fresh input u_t and returns y_t.
/// Throws TaskDivergence when |y_t| exceeds narma_divergence_bound or is
/// not finite.
double narma10_step(Narma10State& state, const Narma10Params& params, double u_t);

/// Which target a trial computes.
enum class TaskKind { simple, legendre, narma10 };

struct TaskSpec {
    TaskKind kind = TaskKind::simple;
    LegendreTaskSpec legendre{};
    Narma10Params narma{};
    std::size_t narma_warmup = 200;

    InputSpec input_spec() const noexcept;
    std::string name() const;
};

/// Streaming target generator for the input-only tasks (Legendre, NARMA10).
///
/// push(u_t) must be called once per time step; target() is the value
/// ŷ_t for the most recently pushed input and is valid once ready().
class TargetStream {
public:
    explicit TargetStream(const TaskSpec& spec);

    void push(double u_t);
    bool ready() const noexcept;
    double target() const noexcept { return current_; }

    /// Number of steps before the first valid target.
    std::size_t warmup() const noexcept;

private:
    TaskSpec spec_;
    std::vector<double> history_; // newest first, size max_delay + 1
    std::size_t pushed_ = 0;
    Narma10State narma_{};
    double current_ = 0.0;
};

} // namespace ipc
