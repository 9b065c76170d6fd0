#include "ipc/signal_tasks.hpp"

#include <algorithm>
#include <cmath>

namespace ipc {

double InputSpec::lo() const noexcept
{
    return distribution == InputDistribution::uniform_symmetric ? -1.0 : 0.0;
}

double InputSpec::hi() const noexcept
{
    return distribution == InputDistribution::uniform_symmetric ? 1.0 : 0.2;
}

std::vector<double> gen_input(const InputSpec& spec, std::size_t length, Rng& rng)
{
    if (length == 0)
        throw std::invalid_argument("gen_input: length must be positive");
    if (spec.dimension == 0)
        throw std::invalid_argument("gen_input: input dimension must be positive");

    std::uniform_real_distribution<double> dist(spec.lo(), spec.hi());
    std::vector<double> out(length * spec.dimension);
    for (auto& v : out)
        v = dist(rng);
    return out;
}

double legendre_eval(unsigned degree, double x) noexcept
{
    if (degree == 0)
        return 1.0;
    double prev = 1.0;
    double curr = x;
    for (unsigned n = 1; n < degree; ++n) {
        const double next = ((2.0 * n + 1.0) * x * curr - n * prev) / (n + 1.0);
        prev = curr;
        curr = next;
    }
    return curr;
}

void LegendreTaskSpec::validate() const
{
    if (terms.empty())
        throw std::invalid_argument("Legendre task needs at least one term");
    bool any_degree = false;
    unsigned last_delay = 0;
    for (const auto& t : terms) {
        if (t.delay == 0 || t.delay <= last_delay)
            throw std::invalid_argument("Legendre task delays must be positive and strictly increasing");
        last_delay = t.delay;
        any_degree = any_degree || t.degree > 0;
    }
    if (!any_degree)
        throw std::invalid_argument("Legendre task needs a term with positive degree");
}

unsigned LegendreTaskSpec::max_delay() const noexcept
{
    return terms.empty() ? 0 : terms.back().delay;
}

double legendre_target(const LegendreTaskSpec& spec, std::span<const double> lagged)
{
    if (lagged.size() <= spec.max_delay())
        throw std::invalid_argument("legendre_target: input window shorter than the largest delay");
    double y = 1.0;
    for (const auto& t : spec.terms)
        y *= legendre_eval(t.degree, lagged[t.delay]);
    return y;
}

double narma10_step(Narma10State& state, const Narma10Params& params, double u_t)
{
    std::shift_right(state.inputs.begin(), state.inputs.end(), 1);
    state.inputs[0] = u_t;

    const double y_prev = state.outputs[0];
    double window = 0.0;
    for (double y : state.outputs)
        window += y;

    const double y = params.alpha * y_prev + params.beta * y_prev * window
                     + params.gamma * u_t * state.inputs[9] + params.delta;
    if (!std::isfinite(y) || std::abs(y) > narma_divergence_bound)
        throw TaskDivergence("NARMA10 output diverged");

    std::shift_right(state.outputs.begin(), state.outputs.end(), 1);
    state.outputs[0] = y;
    return y;
}

InputSpec TaskSpec::input_spec() const noexcept
{
    InputSpec spec;
    spec.distribution = kind == TaskKind::narma10 ? InputDistribution::uniform_positive
                                                  : InputDistribution::uniform_symmetric;
    return spec;
}

std::string TaskSpec::name() const
{
    switch (kind) {
    case TaskKind::simple:
        return "simple";
    case TaskKind::legendre:
        return "legendre";
    case TaskKind::narma10:
        return "narma10";
    }
    return "unknown";
}

TargetStream::TargetStream(const TaskSpec& spec) : spec_(spec)
{
    if (spec_.kind == TaskKind::legendre) {
        spec_.legendre.validate();
        history_.assign(spec_.legendre.max_delay() + 1, 0.0);
    }
}

void TargetStream::push(double u_t)
{
    ++pushed_;
    switch (spec_.kind) {
    case TaskKind::legendre:
        std::shift_right(history_.begin(), history_.end(), 1);
        history_[0] = u_t;
        current_ = legendre_target(spec_.legendre, history_);
        break;
    case TaskKind::narma10:
        current_ = narma10_step(narma_, spec_.narma, u_t);
        break;
    case TaskKind::simple:
        throw std::logic_error("simple-model targets depend on the reservoir state");
    }
}

std::size_t TargetStream::warmup() const noexcept
{
    switch (spec_.kind) {
    case TaskKind::legendre:
        return spec_.legendre.max_delay();
    case TaskKind::narma10:
        return spec_.narma_warmup;
    case TaskKind::simple:
        break;
    }
    return 0;
}

bool TargetStream::ready() const noexcept
{
    return pushed_ > warmup();
}

} // namespace ipc
